//! Site percolation on simple-cubic lattices: how far a cluster state can
//! extend when some sites are empty.
//!
//! Occupation is coupled across fill probabilities: site `i` of trial `k` is
//! filled iff its uniform draw `u_i < p`, with the draws of trial `k` taken
//! from stream `k` of the master seed. Raising `p` therefore only ever adds
//! sites, and spanning is monotone in `p` for every trial.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{component_sizes_of, label_components, Axis, Dims, LatticeBoundary};
use crate::rng;

/// Result of one occupation draw.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercolationTrial {
    pub dims: Dims,
    pub p: f64,
    pub seed: u64,
    #[serde(skip)]
    pub mask: Vec<bool>,
    /// Component sizes, descending.
    pub sizes: Vec<usize>,
    /// Some component touches both x faces.
    pub spanning: bool,
}

impl PercolationTrial {
    pub fn occupied(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn largest(&self) -> usize {
        self.sizes.first().copied().unwrap_or(0)
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("fill probability must lie in [0, 1], got {p}")))
    }
}

fn uniforms(dims: &Dims, master: u64, trial: u64) -> Vec<f64> {
    let mut r = rng::stream(master, trial);
    (0..dims.sites()).map(|_| r.random::<f64>()).collect()
}

fn evaluate(dims: Dims, p: f64, seed: u64, u: &[f64]) -> PercolationTrial {
    let mask: Vec<bool> = u.iter().map(|&x| x < p).collect();
    let uf = label_components(&dims, &mask, &Axis::ALL, LatticeBoundary::Open);
    let sizes = component_sizes_of(&uf, &mask);
    let [lx, ly, lz] = dims.0;
    let mut left = vec![false; dims.sites()];
    for z in 0..lz {
        for y in 0..ly {
            let i = dims.index([0, y, z]);
            if mask[i] {
                left[uf.find(i as u32) as usize] = true;
            }
        }
    }
    let spanning = (0..lz).any(|z| {
        (0..ly).any(|y| {
            let i = dims.index([lx - 1, y, z]);
            mask[i] && left[uf.find(i as u32) as usize]
        })
    });
    PercolationTrial { dims, p, seed, mask, sizes, spanning }
}

/// Occupy every site with probability `p` (draws from stream 0 of `seed`).
pub fn run_trial(dims: Dims, p: f64, seed: u64) -> Result<PercolationTrial> {
    check_p(p)?;
    Ok(evaluate(dims, p, seed, &uniforms(&dims, seed, 0)))
}

/// Trial `k` of an experiment keyed by `master`.
pub fn run_trial_in(dims: Dims, p: f64, master: u64, k: u64) -> Result<PercolationTrial> {
    check_p(p)?;
    Ok(evaluate(dims, p, master, &uniforms(&dims, master, k)))
}

/// Fraction of `trials` spanning at `p`.
pub fn spanning_probability(dims: Dims, p: f64, trials: usize, master: u64) -> Result<f64> {
    check_p(p)?;
    let hits: usize = (0..trials as u64)
        .into_par_iter()
        .map(|k| evaluate(dims, p, master, &uniforms(&dims, master, k)).spanning as usize)
        .sum();
    Ok(hits as f64 / trials as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub p_c: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
    pub trials: usize,
    /// Every `(p, spanning fraction)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisect for spanning probability ½ on a `dim`-dimensional cube of side `l`.
///
/// The standard error is the binomial error of the spanning fraction at the
/// estimate, divided by the local slope `dP/dp` measured over ±`slope_step`.
pub fn estimate_threshold(dim: usize, l: usize, trials: usize, tolerance: f64, master: u64) -> Result<ThresholdEstimate> {
    if l < 16 {
        return Err(Error::Domain(format!("side length must be >= 16, got {l}")));
    }
    if trials < 100 {
        return Err(Error::Domain(format!("need at least 100 trials per point, got {trials}")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tolerance}")));
    }
    let dims = Dims::cube(dim, l)?;
    let mut evaluations = Vec::new();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    const BUDGET: usize = 60;
    let mut steps = 0;
    while hi - lo > tolerance {
        if steps == BUDGET {
            return Err(Error::Estimation { lo, hi });
        }
        steps += 1;
        let mid = 0.5 * (lo + hi);
        let s = spanning_probability(dims, mid, trials, master)?;
        evaluations.push((mid, s));
        if s >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p_c = 0.5 * (lo + hi);
    let slope_step = 0.01f64;
    let (a, b) = ((p_c - slope_step).max(0.0), (p_c + slope_step).min(1.0));
    let sa = spanning_probability(dims, a, trials, master)?;
    let sb = spanning_probability(dims, b, trials, master)?;
    let sc = spanning_probability(dims, p_c, trials, master)?;
    evaluations.extend([(a, sa), (b, sb), (p_c, sc)]);
    let slope = (sb - sa) / (b - a);
    let binomial = (sc * (1.0 - sc) / trials as f64).sqrt().max(0.5 / trials as f64);
    let stderr = if slope > 0.0 { binomial / slope } else { f64::INFINITY };
    Ok(ThresholdEstimate { p_c, stderr, lo, hi, trials, evaluations })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterStats {
    pub p: f64,
    pub trials: usize,
    pub spanning_prob: f64,
    /// Binomial standard error of `spanning_prob`.
    pub stderr: f64,
    /// Occupied sites per component, pooled over trials.
    pub mean_size: f64,
    /// Largest component seen in any trial.
    pub max_size: usize,
    /// Mean over trials of largest component / occupied sites.
    pub giant_fraction: f64,
}

/// Component statistics at `p` over `trials` trials of stream `k` of `master`.
pub fn cluster_size_stats(dims: Dims, p: f64, trials: usize, master: u64) -> Result<ClusterStats> {
    check_p(p)?;
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let per_trial: Vec<(bool, usize, usize, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let t = evaluate(dims, p, master, &uniforms(&dims, master, k));
            (t.spanning, t.occupied(), t.sizes.len(), t.largest())
        })
        .collect();
    let n = trials as f64;
    let spans = per_trial.iter().filter(|t| t.0).count() as f64;
    let occupied: usize = per_trial.iter().map(|t| t.1).sum();
    let components: usize = per_trial.iter().map(|t| t.2).sum();
    let max_size = per_trial.iter().map(|t| t.3).max().unwrap_or(0);
    let giant_fraction =
        per_trial.iter().map(|t| if t.1 == 0 { 0.0 } else { t.3 as f64 / t.1 as f64 }).sum::<f64>() / n;
    let spanning_prob = spans / n;
    Ok(ClusterStats {
        p,
        trials,
        spanning_prob,
        stderr: (spanning_prob * (1.0 - spanning_prob) / n).sqrt(),
        mean_size: if components == 0 { 0.0 } else { occupied as f64 / components as f64 },
        max_size,
        giant_fraction,
    })
}

pub fn write_stats_csv<W: Write>(mut out: W, rows: &[ClusterStats]) -> Result<()> {
    writeln!(out, "p,trials,spanning_prob,stderr,mean_size,max_size,giant_fraction")?;
    for r in rows {
        writeln!(
            out,
            "{:.11e},{},{:.11e},{:.11e},{:.11e},{},{:.11e}",
            r.p, r.trials, r.spanning_prob, r.stderr, r.mean_size, r.max_size, r.giant_fraction
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        let d = Dims::cube(3, 6).unwrap();
        let full = run_trial(d, 1.0, 1).unwrap();
        assert!(full.spanning);
        assert_eq!(full.sizes, vec![216]);
        let empty = run_trial(d, 0.0, 1).unwrap();
        assert!(!empty.spanning);
        assert!(empty.sizes.is_empty());
        assert!(run_trial(d, 1.1, 1).is_err());
    }

    #[test]
    fn deterministic_and_sizes_sum() {
        let d = Dims::cube(2, 20).unwrap();
        let a = run_trial(d, 0.55, 9).unwrap();
        let b = run_trial(d, 0.55, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.occupied(), a.mask.iter().filter(|&&m| m).count());
    }

    #[test]
    fn occupancy_fraction_converges() {
        let d = Dims::cube(3, 40).unwrap();
        let t = run_trial(d, 0.3, 4).unwrap();
        let frac = t.occupied() as f64 / d.sites() as f64;
        // Binomial stderr √(p(1−p)/64000) ≈ 0.0018.
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }

    #[test]
    fn coupling_makes_spanning_monotone_per_trial() {
        let d = Dims::cube(2, 16).unwrap();
        for k in 0..20 {
            let mut prev = false;
            for i in 0..=20 {
                let p = i as f64 / 20.0;
                let s = run_trial_in(d, p, 77, k).unwrap().spanning;
                assert!(s || !prev, "trial {k} lost spanning at p={p}");
                prev = s;
            }
        }
    }

    #[test]
    fn chain_threshold_goes_to_one() {
        let est = estimate_threshold(1, 64, 100, 1e-3, 5).unwrap();
        assert!(est.p_c > 0.98, "{est:?}");
    }

    #[test]
    fn square_threshold() {
        let est = estimate_threshold(2, 64, 200, 2e-3, 11).unwrap();
        assert!((est.p_c - 0.593).abs() < 0.015, "{est:?}");
    }

    #[test]
    fn supercritical_cube_spans() {
        let d = Dims::cube(3, 32).unwrap();
        let s = cluster_size_stats(d, 0.40, 200, 3).unwrap();
        assert!(s.spanning_prob > 0.95, "{s:?}");
    }

    #[test]
    fn giant_fraction_across_threshold() {
        let d = Dims::cube(3, 48).unwrap();
        let near = cluster_size_stats(d, 0.31, 100, 1).unwrap();
        let above = cluster_size_stats(d, 0.5, 100, 1).unwrap();
        // Near p_c the largest cluster still holds several percent of the
        // occupied sites at this size (about 0.08).
        assert!(near.giant_fraction < 0.15, "{near:?}");
        assert!(above.giant_fraction > 0.9, "{above:?}");
    }

    #[test]
    fn stats_at_full_occupancy() {
        let d = Dims::cube(3, 8).unwrap();
        let s = cluster_size_stats(d, 1.0, 5, 0).unwrap();
        assert_eq!(s.giant_fraction, 1.0);
        assert_eq!(s.max_size, 512);
        assert_eq!(s.mean_size, 512.0);
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p,trials,spanning_prob,stderr,mean_size,max_size,giant_fraction\n1.00000000000e0,5,"));
    }

    #[test]
    fn bad_threshold_arguments() {
        assert!(estimate_threshold(3, 8, 400, 0.01, 0).is_err());
        assert!(estimate_threshold(3, 16, 10, 0.01, 0).is_err());
    }
}
