//! Exact many-body engine over the spin basis of the occupied atoms.
//!
//! Basis index bit `q` holds the spin of atom `q` (atoms are the occupied
//! sites in chain order). Rotations use
//! `R(β, ϕ) = [[cos β/2, −i e^{−iϕ} sin β/2], [−i e^{iϕ} sin β/2, cos β/2]]`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::CalibrationModel;
use crate::sequence::{is_flip, Instruction, Layout, PositionTag, PulseSequence};

const PAR_THRESHOLD: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    pub max_qubits: usize,
    pub norm_tolerance: f64,
    pub eigen_floor: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { max_qubits: 22, norm_tolerance: 1e-10, eigen_floor: 1e-12 }
    }
}

/// Per-run additions that are not part of the protocol itself.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Perturbation {
    /// Extra Z phase per atom, inserted right after the terminal instruction
    /// (i.e. before the readout pulse).
    pub readout_phases: Option<Vec<f64>>,
}

/// Accumulated collisional phase on one two-atom sector, in the spin labels
/// of the initial π/2 pulse (echo flips undone).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionRecord {
    pub atom_a: usize,
    pub spin_a: u8,
    pub atom_b: usize,
    pub spin_b: u8,
    pub phase: f64,
}

#[derive(Clone, Debug)]
pub struct ManyBodyState {
    amplitudes: Vec<Complex64>,
    n: usize,
    sites: Vec<usize>,
    tags: Vec<PositionTag>,
    collisions: Vec<CollisionRecord>,
    flipped: bool,
}

impl ManyBodyState {
    /// All atoms in |0⟩ on their home sites.
    pub fn ground(sites: Vec<usize>) -> Self {
        let n = sites.len();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        let tags = sites.iter().map(|&s| PositionTag { spin0: 2 * s as i64, spin1: 2 * s as i64 }).collect();
        Self { amplitudes, n, sites, tags, collisions: Vec::new(), flipped: false }
    }

    /// Wrap a raw amplitude vector (length must be a power of two).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Domain(format!("amplitude vector length {len} is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        let mut s = Self::ground((0..n).collect());
        s.amplitudes = amplitudes;
        Ok(s)
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn tags(&self) -> &[PositionTag] {
        &self.tags
    }

    pub fn collisions(&self) -> &[CollisionRecord] {
        &self.collisions
    }

    /// Odd number of spin flips executed (the echo).
    pub fn flipped(&self) -> bool {
        self.flipped
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_single(&mut self, q: usize, u: [[Complex64; 2]; 2]) {
        let stride = 1usize << q;
        let kernel = |chunk: &mut [Complex64]| {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = u[0][0] * x + u[0][1] * y;
                *a1 = u[1][0] * x + u[1][1] * y;
            }
        };
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes.par_chunks_mut(2 * stride).for_each(kernel);
        } else {
            self.amplitudes.chunks_mut(2 * stride).for_each(kernel);
        }
    }

    pub fn rotate_all(&mut self, area: f64, axis_phase: f64) {
        let u = rotation(area, axis_phase);
        for q in 0..self.n {
            self.apply_single(q, u);
        }
    }

    pub fn apply_x(&mut self, q: usize) {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        self.apply_single(q, [[o, l], [l, o]]);
    }

    pub fn apply_z_phase(&mut self, q: usize, phase: f64) {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        self.apply_single(q, [[l, o], [o, Complex64::from_polar(1.0, phase)]]);
    }

    /// Multiply every basis state by `exp(-i·phase·k)` where `k` counts the
    /// `(atom, spin)` pairs of `sectors` it matches.
    fn apply_sector_phases(&mut self, sectors: &[(usize, u8, usize, u8)], phase: f64) {
        if sectors.is_empty() || phase == 0.0 {
            return;
        }
        let table: Vec<Complex64> =
            (0..=sectors.len()).map(|k| Complex64::from_polar(1.0, -phase * k as f64)).collect();
        let kernel = |(idx, amp): (usize, &mut Complex64)| {
            let k = sectors
                .iter()
                .filter(|&&(a, sa, b, sb)| ((idx >> a) & 1) as u8 == sa && ((idx >> b) & 1) as u8 == sb)
                .count();
            if k > 0 {
                *amp *= table[k];
            }
        };
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes.par_iter_mut().enumerate().for_each(kernel);
        } else {
            self.amplitudes.iter_mut().enumerate().for_each(kernel);
        }
    }

    fn record(&mut self, mut a: usize, mut sa: u8, mut b: usize, mut sb: u8, phase: f64) {
        if a > b {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut sa, &mut sb);
        }
        let flip = self.flipped as u8;
        let (sa, sb) = (sa ^ flip, sb ^ flip);
        if let Some(r) = self
            .collisions
            .iter_mut()
            .find(|r| r.atom_a == a && r.atom_b == b && r.spin_a == sa && r.spin_b == sb)
        {
            r.phase += phase;
        } else {
            self.collisions.push(CollisionRecord { atom_a: a, spin_a: sa, atom_b: b, spin_b: sb, phase });
        }
    }

    /// Interaction graph of the executed collisions (pairs with nonzero phase).
    pub fn bond_graph(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for r in &self.collisions {
            if r.phase != 0.0 && !adj[r.atom_a].contains(&r.atom_b) {
                adj[r.atom_a].push(r.atom_b);
                adj[r.atom_b].push(r.atom_a);
            }
        }
        for v in &mut adj {
            v.sort_unstable();
        }
        adj
    }

    /// Apply the local unitaries that map the ideal φ=π output onto the
    /// canonical graph state `Π CZ |+⟩`: undo the echo with X on every atom,
    /// then for every collision sector (x, y) apply Z to atom a if y = 0 and
    /// Z to atom b if x = 0. (A phase of π on sector (x, y) equals
    /// CZ·Z_a^{1−y}·Z_b^{1−x} up to a global sign.)
    pub fn apply_local_correction(&mut self) {
        if self.flipped {
            for q in 0..self.n {
                self.apply_x(q);
            }
        }
        let mut z = vec![false; self.n];
        for r in &self.collisions {
            if r.phase == 0.0 {
                continue;
            }
            if r.spin_b == 0 {
                z[r.atom_a] ^= true;
            }
            if r.spin_a == 0 {
                z[r.atom_b] ^= true;
            }
        }
        for (q, flag) in z.into_iter().enumerate() {
            if flag {
                self.apply_z_phase(q, std::f64::consts::PI);
            }
        }
    }

    /// `(index re im)` per line, 12 significant digits.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let _ = writeln!(s, "{i} {:.11e} {:.11e}", a.re, a.im);
        }
        s
    }
}

pub fn rotation(area: f64, axis_phase: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((area / 2.0).cos(), 0.0);
    let s = (area / 2.0).sin();
    let mi = Complex64::new(0.0, -1.0);
    [
        [c, mi * Complex64::from_polar(1.0, -axis_phase) * s],
        [mi * Complex64::from_polar(1.0, axis_phase) * s, c],
    ]
}

#[derive(Clone, Debug, Default)]
pub struct Engine {
    pub config: EngineConfig,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Self { config }
    }

    pub fn run(&self, seq: &PulseSequence, cal: &CalibrationModel) -> Result<ManyBodyState> {
        self.run_perturbed(seq, cal, &Perturbation::default())
    }

    pub fn run_perturbed(
        &self,
        seq: &PulseSequence,
        cal: &CalibrationModel,
        perturbation: &Perturbation,
    ) -> Result<ManyBodyState> {
        seq.validate().map_err(Error::Protocol)?;
        let n = seq.n_atoms();
        if n > self.config.max_qubits {
            return Err(Error::Capacity { requested: n, limit: self.config.max_qubits });
        }
        if let Some(p) = &perturbation.readout_phases {
            if p.len() != n {
                return Err(Error::Domain(format!("{} readout phases for {n} atoms", p.len())));
            }
        }
        let mut layout = Layout::new(seq.chain());
        let mut state = ManyBodyState::ground(layout.homes().to_vec());
        let total_hold = seq.total_hold();

        for ins in seq.instructions() {
            match *ins {
                Instruction::Rotate { area, axis_phase } => {
                    state.rotate_all(area, axis_phase);
                    if is_flip(area) {
                        state.flipped = !state.flipped;
                        if layout.any_separated() {
                            layout.flip();
                        }
                    }
                }
                Instruction::Shift(d) => layout.shift(d),
                Instruction::Hold(duration) => {
                    // The calibration offset is shared among the holds in
                    // proportion to their length.
                    let phase = if total_hold > 0.0 {
                        cal.slope * duration + cal.offset * duration / total_hold
                    } else {
                        0.0
                    };
                    let sectors: Vec<_> = layout
                        .contacts()
                        .into_iter()
                        .map(|c| (c.atom_a, c.spin_a, c.atom_b, c.spin_b))
                        .collect();
                    state.apply_sector_phases(&sectors, phase);
                    if phase != 0.0 {
                        for &(a, sa, b, sb) in &sectors {
                            state.record(a, sa, b, sb, phase);
                        }
                    }
                }
                Instruction::Return => {
                    layout.return_home();
                    apply_readout_phases(&mut state, perturbation);
                }
                Instruction::Freeze => apply_readout_phases(&mut state, perturbation),
            }
        }
        state.tags = layout.tags().to_vec();

        let norm = state.norm_sqr();
        debug_assert!(
            (norm - 1.0).abs() < self.config.norm_tolerance.max(1e-12 * n as f64),
            "norm drifted to {norm}"
        );
        Ok(state)
    }
}

fn apply_readout_phases(state: &mut ManyBodyState, perturbation: &Perturbation) {
    if let Some(phases) = &perturbation.readout_phases {
        for (q, &p) in phases.iter().enumerate() {
            if p != 0.0 {
                state.apply_z_phase(q, p);
            }
        }
    }
}

/// Run with the default engine limits.
pub fn run(seq: &PulseSequence, cal: &CalibrationModel) -> Result<ManyBodyState> {
    Engine::default().run(seq, cal)
}

/// ⟨n_q⟩ for every atom.
pub fn populations_one(state: &ManyBodyState) -> Vec<f64> {
    let mut p = vec![0.0; state.n];
    for (idx, a) in state.amplitudes.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (q, pq) in p.iter_mut().enumerate() {
            if (idx >> q) & 1 == 1 {
                *pq += w;
            }
        }
    }
    p
}

/// Fraction of atoms found in |1⟩, averaged over atoms. Zero for an empty register.
pub fn probability_one(state: &ManyBodyState) -> f64 {
    if state.n == 0 {
        return 0.0;
    }
    populations_one(state).iter().sum::<f64>() / state.n as f64
}

/// Reduced density matrix of one or two atoms, row-major, basis ordered
/// with the first listed atom as the high bit.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensityMatrix {
    pub atoms: Vec<usize>,
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl ReducedDensityMatrix {
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                e = e.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        e
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(DMatrix::from_row_slice(self.dim, self.dim, &self.data))
    }
}

pub fn reduced_density(state: &ManyBodyState, atoms: &[usize]) -> Result<ReducedDensityMatrix> {
    if atoms.is_empty() || atoms.len() > 2 {
        return Err(Error::Domain(format!("reduced density supports 1 or 2 atoms, got {}", atoms.len())));
    }
    for &a in atoms {
        if a >= state.n {
            return Err(Error::OutOfRange { index: a, len: state.n });
        }
    }
    if atoms.len() == 2 && atoms[0] == atoms[1] {
        return Err(Error::Domain("atoms of a two-atom reduced state must differ".into()));
    }
    let k = atoms.len();
    let dim = 1 << k;
    let mask: usize = atoms.iter().map(|&a| 1usize << a).sum();
    let local = |idx: usize| -> usize {
        atoms.iter().fold(0, |acc, &a| (acc << 1) | ((idx >> a) & 1))
    };
    let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (idx, amp) in state.amplitudes.iter().enumerate() {
        if idx & mask != 0 {
            continue;
        }
        // idx enumerates the environment configuration with the kept atoms at 0.
        for r in 0..dim {
            let ir = idx | spread(r, atoms);
            let ar = state.amplitudes[ir];
            if ar == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in 0..dim {
                let ic = idx | spread(c, atoms);
                data[local(ir) * dim + local(ic)] += ar * state.amplitudes[ic].conj();
            }
        }
        let _ = amp;
    }
    Ok(ReducedDensityMatrix { atoms: atoms.to_vec(), dim, data })
}

/// Place the bits of a local index (first atom = high bit) at the atoms' positions.
fn spread(local: usize, atoms: &[usize]) -> usize {
    let k = atoms.len();
    atoms
        .iter()
        .enumerate()
        .map(|(i, &a)| ((local >> (k - 1 - i)) & 1) << a)
        .sum()
}

fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
}

/// Von Neumann entropy (bits) of the atoms in `subsystem`.
pub fn entanglement_entropy(state: &ManyBodyState, subsystem: &[usize]) -> Result<f64> {
    entanglement_entropy_with_floor(state, subsystem, EngineConfig::default().eigen_floor)
}

pub fn entanglement_entropy_with_floor(state: &ManyBodyState, subsystem: &[usize], floor: f64) -> Result<f64> {
    let n = state.n;
    let mut in_a = vec![false; n];
    for &a in subsystem {
        if a >= n {
            return Err(Error::OutOfRange { index: a, len: n });
        }
        in_a[a] = true;
    }
    let a: Vec<usize> = (0..n).filter(|&q| in_a[q]).collect();
    let b: Vec<usize> = (0..n).filter(|&q| !in_a[q]).collect();
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    // Reduced state of the smaller side.
    let (keep, other) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let gather = |bits: usize, qs: &[usize]| -> usize {
        qs.iter().enumerate().map(|(i, &q)| ((bits >> i) & 1) << q).sum()
    };
    let rows = 1usize << keep.len();
    let cols = 1usize << other.len();
    let m = DMatrix::from_fn(rows, cols, |r, c| state.amplitudes[gather(r, &keep) | gather(c, &other)]);
    let rho = &m * m.adjoint();
    let s = hermitian_eigenvalues(rho)
        .into_iter()
        .filter(|&l| l > floor)
        .map(|l| -l * l.log2())
        .sum();
    Ok(s)
}

/// ⟨ψ| i^{|x∧z|} X^x Z^z |ψ⟩ for a Pauli string given by bit masks.
pub fn pauli_expectation(state: &ManyBodyState, x_mask: usize, z_mask: usize) -> f64 {
    let y_count = (x_mask & z_mask).count_ones();
    let prefactor = match y_count % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let amps = &state.amplitudes;
    let sum: Complex64 = amps
        .iter()
        .enumerate()
        .map(|(s, a)| {
            let t = s ^ x_mask;
            let sign = if (z_mask & t).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            a.conj() * amps[t] * sign
        })
        .sum();
    (prefactor * sum).re
}

/// Graph-state generator expectations `⟨K_a⟩ = ⟨X_a Π_{b∈nbr(a)} Z_b⟩` on the
/// locally corrected state, over the state's own collision graph.
pub fn stabilizer_check(state: &ManyBodyState) -> Vec<f64> {
    let mut corrected = state.clone();
    corrected.apply_local_correction();
    let graph = state.bond_graph();
    (0..state.n)
        .map(|a| {
            let z: usize = graph[a].iter().map(|&b| 1usize << b).sum();
            pauli_expectation(&corrected, 1 << a, z)
        })
        .collect()
}

/// Read the stabilizer group of a state whose generators have an identity
/// X block: for every atom `a` find the unique `±X_a Z^v` stabilizing it.
/// Returns `(sign, z_mask)` per atom, or `None` if no such form exists.
pub fn graph_form_generators(state: &ManyBodyState, tol: f64) -> Option<Vec<(i8, usize)>> {
    let amps = &state.amplitudes;
    let n = state.n;
    let ref_idx = (0..amps.len()).max_by(|&i, &j| amps[i].norm_sqr().total_cmp(&amps[j].norm_sqr()))?;
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let ea = 1usize << a;
        // ψ(s⊕e_a) = σ (−1)^{v·s} ψ(s); read σ(−1)^{v·ref} from the largest amplitude.
        let r0 = amps[ref_idx ^ ea] / amps[ref_idx];
        let base = if (r0 - 1.0).norm() < tol {
            1i8
        } else if (r0 + 1.0).norm() < tol {
            -1i8
        } else {
            return None;
        };
        let mut v = 0usize;
        for b in (0..n).filter(|&b| b != a) {
            let s = ref_idx ^ (1 << b);
            if amps[s].norm() < tol {
                return None;
            }
            let r = amps[s ^ ea] / amps[s];
            if (r - f64::from(base)).norm() < tol {
            } else if (r + f64::from(base)).norm() < tol {
                v |= 1 << b;
            } else {
                return None;
            }
        }
        let sign = if (v & ref_idx).count_ones().is_multiple_of(2) { base } else { -base };
        // Verify on every basis state.
        for s in 0..amps.len() {
            let parity = if (v & s).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            let expect = amps[s] * (f64::from(sign) * parity);
            if (amps[s ^ ea] - expect).norm() > tol {
                return None;
            }
        }
        out.push((sign, v));
    }
    Some(out)
}
