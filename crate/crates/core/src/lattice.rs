//! Simple-cubic site lattices of one to three dimensions, shared by the
//! stabilizer engine and the percolation runner.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeBoundary {
    #[default]
    Open,
    Periodic,
}

/// Extent `(Lx, Ly, Lz)`; x varies fastest in the site index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims(pub [usize; 3]);

impl Dims {
    pub fn new(lx: usize, ly: usize, lz: usize) -> Result<Self> {
        if lx == 0 || ly == 0 || lz == 0 {
            return Err(Error::Domain(format!("lattice dimensions must be >= 1, got {lx}x{ly}x{lz}")));
        }
        Ok(Self([lx, ly, lz]))
    }

    /// Hypercube of side `l` in `dim` dimensions.
    pub fn cube(dim: usize, l: usize) -> Result<Self> {
        match dim {
            1 => Self::new(l, 1, 1),
            2 => Self::new(l, l, 1),
            3 => Self::new(l, l, l),
            _ => Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {dim}"))),
        }
    }

    pub fn sites(&self) -> usize {
        self.0.iter().product()
    }

    /// Axes with extent > 1.
    pub fn active_axes(&self) -> Vec<Axis> {
        Axis::ALL.into_iter().filter(|a| self.0[a.index()] > 1).collect()
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.0[0] * (c[1] + self.0[1] * c[2])
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [lx, ly, _] = self.0;
        [i % lx, (i / lx) % ly, i / (lx * ly)]
    }

    /// The `+1` neighbour of site `i` along `axis`, if it exists. On a
    /// periodic axis of length 2 the wrap bond duplicates the direct bond
    /// and is omitted, so every unordered pair is produced at most once.
    pub fn forward(&self, i: usize, axis: Axis, boundary: LatticeBoundary) -> Option<usize> {
        let k = axis.index();
        let l = self.0[k];
        let mut c = self.coords(i);
        if c[k] + 1 < l {
            c[k] += 1;
        } else if boundary == LatticeBoundary::Periodic && l > 2 {
            c[k] = 0;
        } else {
            return None;
        }
        Some(self.index(c))
    }

    /// Every unordered nearest-neighbour pair of occupied sites along `axes`,
    /// axis by axis, sites in index order within an axis.
    pub fn bonds<'a>(
        &'a self,
        mask: &'a [bool],
        axes: &'a [Axis],
        boundary: LatticeBoundary,
    ) -> impl Iterator<Item = (usize, usize)> + 'a {
        axes.iter().flat_map(move |&axis| {
            (0..self.sites()).filter(move |&i| mask[i]).filter_map(move |i| {
                self.forward(i, axis, boundary).filter(|&j| mask[j]).map(|j| (i, j))
            })
        })
    }
}

/// Union-find of occupied sites joined along `axes`.
pub fn label_components(dims: &Dims, mask: &[bool], axes: &[Axis], boundary: LatticeBoundary) -> UnionFind<u32> {
    let mut uf = UnionFind::new(dims.sites());
    for (i, j) in dims.bonds(mask, axes, boundary) {
        uf.union(i as u32, j as u32);
    }
    uf
}

/// Sizes of the connected components of occupied sites, descending.
pub fn component_sizes_of(uf: &UnionFind<u32>, mask: &[bool]) -> Vec<usize> {
    let mut count = vec![0usize; mask.len()];
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        count[uf.find(i as u32) as usize] += 1;
    }
    let mut sizes: Vec<usize> = count.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}
