//! Stabilizer engine for the φ = π point, where every collision is a CZ.
//!
//! Generators are stored sparsely (sorted qubit supports of the X and Z
//! parts), which keeps a 50³ cluster at a few megabytes; a bit-packed dense
//! tableau is used for row reduction of generator sets that are not already
//! in graph form.

use std::fmt::Write as _;
use std::io::Write;

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{component_sizes_of, Axis, Dims, LatticeBoundary};

pub const DEFAULT_MAX_QUBITS: usize = 200_000;
/// Largest tableau reduced with the dense bit-packed path.
pub const DENSE_LIMIT: usize = 4096;

/// Lattice sites and which of them hold an atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteLattice {
    pub dims: Dims,
    pub occupancy: Vec<bool>,
    pub boundary: LatticeBoundary,
}

impl SiteLattice {
    pub fn full(dims: Dims) -> Self {
        Self { occupancy: vec![true; dims.sites()], dims, boundary: LatticeBoundary::Open }
    }

    pub fn with_occupancy(dims: Dims, occupancy: Vec<bool>) -> Result<Self> {
        if occupancy.len() != dims.sites() {
            return Err(Error::Domain(format!(
                "occupancy has {} entries for {} sites",
                occupancy.len(),
                dims.sites()
            )));
        }
        Ok(Self { dims, occupancy, boundary: LatticeBoundary::Open })
    }

    pub fn periodic(mut self) -> Self {
        self.boundary = LatticeBoundary::Periodic;
        self
    }

    pub fn occupied(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Site of each qubit; qubits are the occupied sites in index order.
    pub fn qubit_sites(&self) -> Vec<usize> {
        self.occupancy.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i).collect()
    }

    fn site_to_qubit(&self) -> Vec<u32> {
        let mut q = 0u32;
        self.occupancy
            .iter()
            .map(|&o| {
                if o {
                    q += 1;
                    q - 1
                } else {
                    u32::MAX
                }
            })
            .collect()
    }

    /// Bonds between occupied neighbours along `axes`, in qubit labels.
    pub fn qubit_bonds(&self, axes: &[Axis]) -> Vec<(u32, u32)> {
        let map = self.site_to_qubit();
        self.dims
            .bonds(&self.occupancy, axes, self.boundary)
            .map(|(i, j)| (map[i], map[j]))
            .collect()
    }
}

/// A Pauli string `±Π X^x Z^z` with sorted supports; a qubit in both
/// supports carries a Y.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PauliRow {
    pub negative: bool,
    pub x: Vec<u32>,
    pub z: Vec<u32>,
}

fn toggle(v: &mut Vec<u32>, q: u32) {
    match v.binary_search(&q) {
        Ok(k) => {
            v.remove(k);
        }
        Err(k) => v.insert(k, q),
    }
}

fn has(v: &[u32], q: u32) -> bool {
    v.binary_search(&q).is_ok()
}

/// Sorted symmetric difference.
fn xor(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&p), Some(&q)) if p == q => {
                i += 1;
                j += 1;
            }
            (Some(&p), Some(&q)) if p < q => {
                out.push(p);
                i += 1;
            }
            (Some(_), Some(&q)) => {
                out.push(q);
                j += 1;
            }
            (Some(&p), None) => {
                out.push(p);
                i += 1;
            }
            (None, Some(&q)) => {
                out.push(q);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn count_common(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Exponent of i picked up when multiplying single-qubit Paulis (x1,z1)·(x2,z2).
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

impl PauliRow {
    pub fn weight(&self) -> usize {
        self.x.len() + self.z.len() - count_common(&self.x, &self.z)
    }

    pub fn commutes_with(&self, other: &PauliRow) -> bool {
        (count_common(&self.x, &other.z) + count_common(&self.z, &other.x)).is_multiple_of(2)
    }

    /// Product `self · other`; `None` if the two anticommute (the product
    /// would carry a factor ±i and is not a stabilizer element).
    pub fn mul(&self, other: &PauliRow) -> Option<PauliRow> {
        let support = {
            let mut s: Vec<u32> = self.x.iter().chain(&self.z).chain(&other.x).chain(&other.z).copied().collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let mut e: i32 = 2 * self.negative as i32 + 2 * other.negative as i32;
        for q in support {
            e += g(has(&self.x, q), has(&self.z, q), has(&other.x, q), has(&other.z, q));
        }
        match e.rem_euclid(4) {
            0 => Some(PauliRow { negative: false, x: xor(&self.x, &other.x), z: xor(&self.z, &other.z) }),
            2 => Some(PauliRow { negative: true, x: xor(&self.x, &other.x), z: xor(&self.z, &other.z) }),
            _ => None,
        }
    }

    /// `+XZIY…` over `n` qubits.
    pub fn to_string_n(&self, n: usize) -> String {
        let mut s = String::with_capacity(n + 1);
        s.push(if self.negative { '-' } else { '+' });
        for q in 0..n as u32 {
            s.push(match (has(&self.x, q), has(&self.z, q)) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            });
        }
        s
    }

    /// Bit masks `(x, z)` for registers of at most 64 qubits.
    pub fn masks(&self) -> (usize, usize) {
        let m = |v: &[u32]| v.iter().map(|&q| 1usize << q).sum();
        (m(&self.x), m(&self.z))
    }
}

/// `n` stabilizer generators over `n` qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    rows: Vec<PauliRow>,
    /// Rows whose X part contains each qubit.
    x_index: Vec<Vec<u32>>,
}

impl StabilizerTableau {
    /// |+⟩^⊗n: generators X_a.
    pub fn plus_state(n: usize) -> Self {
        let rows = (0..n as u32).map(|a| PauliRow { negative: false, x: vec![a], z: Vec::new() }).collect();
        let x_index = (0..n as u32).map(|a| vec![a]).collect();
        Self { n, rows, x_index }
    }

    pub fn from_rows(n: usize, rows: Vec<PauliRow>) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::Domain(format!("{} generators for {n} qubits", rows.len())));
        }
        let mut x_index = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            if !row.x.windows(2).all(|w| w[0] < w[1]) || !row.z.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Domain(format!("row {r} supports are not strictly sorted")));
            }
            if let Some(&q) = row.x.iter().chain(&row.z).find(|&&q| q as usize >= n) {
                return Err(Error::OutOfRange { index: q as usize, len: n });
            }
            for &q in &row.x {
                x_index[q as usize].push(r as u32);
            }
        }
        Ok(Self { n, rows, x_index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliRow] {
        &self.rows
    }

    pub fn apply_cz(&mut self, a: u32, b: u32) {
        // Conjugation: X_a → X_a Z_b, X_b → Z_a X_b, phase flips when the
        // row has X on both and exactly one Z among the two.
        let mut touched: Vec<u32> =
            self.x_index[a as usize].iter().chain(&self.x_index[b as usize]).copied().collect();
        touched.sort_unstable();
        touched.dedup();
        for r in touched {
            let row = &mut self.rows[r as usize];
            let (xa, xb) = (has(&row.x, a), has(&row.x, b));
            let (za, zb) = (has(&row.z, a), has(&row.z, b));
            if xa && xb && (za ^ zb) {
                row.negative = !row.negative;
            }
            if xb {
                toggle(&mut row.z, a);
            }
            if xa {
                toggle(&mut row.z, b);
            }
        }
    }

    pub fn flip_sign(&mut self, row: usize) {
        self.rows[row].negative = !self.rows[row].negative;
    }

    /// Replace row `h` by `row_h · row_i`.
    pub fn multiply_rows(&mut self, h: usize, i: usize) -> Result<()> {
        let prod = self.rows[h]
            .mul(&self.rows[i])
            .ok_or_else(|| Error::Domain(format!("rows {h} and {i} anticommute")))?;
        self.rows[h] = prod;
        self.rebuild_index();
        Ok(())
    }

    fn rebuild_index(&mut self) {
        self.x_index = vec![Vec::new(); self.n];
        for (r, row) in self.rows.iter().enumerate() {
            for &q in &row.x {
                self.x_index[q as usize].push(r as u32);
            }
        }
    }

    pub fn commutes(&self, i: usize, j: usize) -> bool {
        self.rows[i].commutes_with(&self.rows[j])
    }

    /// For each qubit, the row whose X part is exactly that qubit, if the X
    /// block is a permutation matrix.
    fn graph_form(&self) -> Option<Vec<usize>> {
        let mut owner = vec![usize::MAX; self.n];
        for (r, row) in self.rows.iter().enumerate() {
            if row.x.len() != 1 {
                return None;
            }
            let q = row.x[0] as usize;
            if owner[q] != usize::MAX {
                return None;
            }
            owner[q] = r;
        }
        Some(owner)
    }

    /// Reduced row-echelon generators (X columns before Z columns) with
    /// signs; equal groups give equal canonical forms.
    pub fn canonical_form(&self) -> Result<Vec<PauliRow>> {
        if let Some(owner) = self.graph_form() {
            return Ok(owner.into_iter().map(|r| self.rows[r].clone()).collect());
        }
        if self.n > DENSE_LIMIT {
            return Err(Error::Capacity { requested: self.n, limit: DENSE_LIMIT });
        }
        let mut d = DenseTableau::from_sparse(self);
        d.reduce()?;
        Ok(d.to_rows())
    }

    /// Rank of the generator matrix over GF(2) (dense path, small n).
    pub fn rank(&self) -> Result<usize> {
        if self.graph_form().is_some() {
            return Ok(self.n);
        }
        if self.n > DENSE_LIMIT {
            return Err(Error::Capacity { requested: self.n, limit: DENSE_LIMIT });
        }
        let mut d = DenseTableau::from_sparse(self);
        d.reduce()
    }

    /// One generator per line in `±XZIY` form; only for n ≤ 64.
    pub fn dump(&self) -> Result<String> {
        if self.n > 64 {
            return Err(Error::Capacity { requested: self.n, limit: 64 });
        }
        let mut s = String::new();
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.to_string_n(self.n));
        }
        Ok(s)
    }
}

/// Bit-packed tableau used for row reduction.
struct DenseTableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    negative: Vec<bool>,
}

impl DenseTableau {
    fn from_sparse(t: &StabilizerTableau) -> Self {
        let n = t.n;
        let words = n.div_ceil(64).max(1);
        let mut d = Self { n, words, x: vec![0; n * words], z: vec![0; n * words], negative: vec![false; n] };
        for (r, row) in t.rows.iter().enumerate() {
            for &q in &row.x {
                d.x[r * words + q as usize / 64] |= 1 << (q % 64);
            }
            for &q in &row.z {
                d.z[r * words + q as usize / 64] |= 1 << (q % 64);
            }
            d.negative[r] = row.negative;
        }
        d
    }

    fn bit(&self, r: usize, col: usize) -> bool {
        let (v, q) = if col < self.n { (&self.x, col) } else { (&self.z, col - self.n) };
        v[r * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.words {
            self.x.swap(a * self.words + k, b * self.words + k);
            self.z.swap(a * self.words + k, b * self.words + k);
        }
        self.negative.swap(a, b);
    }

    /// Row h ← row i · row h, with the phase summed word by word.
    fn rowsum(&mut self, h: usize, i: usize) -> Result<()> {
        let w = self.words;
        let mut e: i64 = 2 * (self.negative[h] as i64 + self.negative[i] as i64);
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = !x1 & z1;
            let plus = (y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2);
            let minus = (y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2);
            e += plus.count_ones() as i64 - minus.count_ones() as i64;
            self.x[h * w + k] = x1 ^ x2;
            self.z[h * w + k] = z1 ^ z2;
        }
        match e.rem_euclid(4) {
            0 => self.negative[h] = false,
            2 => self.negative[h] = true,
            _ => return Err(Error::Domain(format!("generators {h} and {i} anticommute"))),
        }
        Ok(())
    }

    /// Gauss–Jordan over the columns `x_0..x_{n−1}, z_0..z_{n−1}`; returns the rank.
    fn reduce(&mut self) -> Result<usize> {
        let mut row = 0;
        for col in 0..2 * self.n {
            if row == self.n {
                break;
            }
            let Some(p) = (row..self.n).find(|&r| self.bit(r, col)) else { continue };
            self.swap_rows(row, p);
            for r in 0..self.n {
                if r != row && self.bit(r, col) {
                    self.rowsum(r, row)?;
                }
            }
            row += 1;
        }
        Ok(row)
    }

    fn to_rows(&self) -> Vec<PauliRow> {
        (0..self.n)
            .map(|r| {
                let support = |v: &[u64]| -> Vec<u32> {
                    (0..self.n as u32).filter(|&q| v[r * self.words + q as usize / 64] >> (q % 64) & 1 == 1).collect()
                };
                PauliRow { negative: self.negative[r], x: support(&self.x), z: support(&self.z) }
            })
            .collect()
    }
}

/// Collision bonds of a generated cluster and its connected components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterGraph {
    /// Lattice site of each qubit.
    pub sites: Vec<usize>,
    /// Neighbours of each qubit, ascending.
    pub adjacency: Vec<Vec<u32>>,
    /// Component label of each qubit (smallest qubit index in the component).
    pub labels: Vec<u32>,
}

impl ClusterGraph {
    fn new(sites: Vec<usize>, bonds: &[(u32, u32)]) -> Self {
        let n = sites.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut uf = UnionFind::<u32>::new(n);
        for &(a, b) in bonds {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
            uf.union(a, b);
        }
        for v in &mut adjacency {
            v.sort_unstable();
            v.dedup();
        }
        let mut smallest = vec![u32::MAX; n];
        for q in 0..n as u32 {
            let r = uf.find(q) as usize;
            smallest[r] = smallest[r].min(q);
        }
        let labels = (0..n as u32).map(|q| smallest[uf.find(q) as usize]).collect();
        Self { sites, adjacency, labels }
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Canonical graph-state generators `X_a Π_{b∈N(a)} Z_b`.
    pub fn graph_generators(&self) -> Vec<PauliRow> {
        self.adjacency
            .iter()
            .enumerate()
            .map(|(a, nb)| PauliRow { negative: false, x: vec![a as u32], z: nb.clone() })
            .collect()
    }
}

/// Prepare |+⟩ on every occupied site and apply one CZ layer per axis.
pub fn generate_cluster(lattice: &SiteLattice, axes: &[Axis]) -> Result<(StabilizerTableau, ClusterGraph)> {
    generate_cluster_with_limit(lattice, axes, DEFAULT_MAX_QUBITS)
}

pub fn generate_cluster_with_limit(
    lattice: &SiteLattice,
    axes: &[Axis],
    max_qubits: usize,
) -> Result<(StabilizerTableau, ClusterGraph)> {
    if axes.is_empty() {
        return Err(Error::Domain("at least one shift axis is required".into()));
    }
    let n = lattice.occupied();
    if n == 0 {
        return Err(Error::Domain("lattice has no occupied sites".into()));
    }
    if n > max_qubits {
        return Err(Error::Capacity { requested: n, limit: max_qubits });
    }
    let mut unique = axes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let bonds = lattice.qubit_bonds(&unique);
    let mut tableau = StabilizerTableau::plus_state(n);
    for &(a, b) in &bonds {
        tableau.apply_cz(a, b);
    }
    Ok((tableau, ClusterGraph::new(lattice.qubit_sites(), &bonds)))
}

/// Connected-component sizes, descending.
pub fn component_sizes(graph: &ClusterGraph) -> Vec<usize> {
    let mut count = vec![0usize; graph.n()];
    for &l in &graph.labels {
        count[l as usize] += 1;
    }
    let mut sizes: Vec<usize> = count.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Component sizes straight from a lattice, without building a tableau.
pub fn lattice_component_sizes(lattice: &SiteLattice, axes: &[Axis]) -> Vec<usize> {
    let uf = crate::lattice::label_components(&lattice.dims, &lattice.occupancy, axes, lattice.boundary);
    component_sizes_of(&uf, &lattice.occupancy)
}

/// Whether the tableau stabilizes exactly the graph state of the lattice's
/// bond graph along `axes`.
pub fn verify_generators(tableau: &StabilizerTableau, lattice: &SiteLattice, axes: &[Axis]) -> Result<bool> {
    if tableau.n() != lattice.occupied() {
        return Ok(false);
    }
    let mut unique = axes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    let graph = ClusterGraph::new(lattice.qubit_sites(), &lattice.qubit_bonds(&unique));
    let expected = graph.graph_generators();
    Ok(tableau.canonical_form()? == expected)
}

/// `size,count` histogram, sizes ascending.
pub fn write_size_histogram<W: Write>(mut out: W, sizes: &[usize]) -> Result<()> {
    let mut hist = std::collections::BTreeMap::new();
    for &s in sizes {
        *hist.entry(s).or_insert(0usize) += 1;
    }
    writeln!(out, "size,count")?;
    for (s, c) in hist {
        writeln!(out, "{s},{c}")?;
    }
    Ok(())
}
