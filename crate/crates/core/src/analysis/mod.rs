//! Observables of the experiment: Ramsey fringes and their fits,
//! visibility versus hold time, and double-slit patterns of the delocalized
//! variant.

mod fit;
mod interference;

pub use fit::{contrast, fit_points, wrap_phase, FitResult};
pub use interference::{
    interference_pattern, interference_visibility_curve, pattern_visibility, Interferogram, TofOptics,
};

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::{NoiseModel, NoiseRealization};
use crate::physics::CalibrationModel;
use crate::sequence::{Chain, Instruction, ProtocolBuilder, PulseSequence};
use crate::statevec::{reduced_density, rotation, Engine, ManyBodyState, Perturbation};

/// Everything needed to simulate one experimental configuration.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub chain: Chain,
    pub cal: CalibrationModel,
    pub noise: NoiseModel,
    pub engine: Engine,
    pub echo: bool,
}

impl Scenario {
    pub fn new(chain: Chain, cal: CalibrationModel) -> Self {
        Self { chain, cal, noise: NoiseModel::default(), engine: Engine::default(), echo: true }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn without_echo(mut self) -> Self {
        self.echo = false;
        self
    }

    fn builder(&self, chain: Chain, t_hold: f64) -> ProtocolBuilder {
        let b = ProtocolBuilder::new(chain, t_hold);
        if self.echo { b } else { b.without_echo() }
    }

    /// The chain a member actually runs: filled, not lost.
    pub fn member_chain(&self, r: &NoiseRealization) -> Chain {
        let active = r.active();
        let fill = self.chain.fill.iter().zip(&active).map(|(&f, &a)| f && a).collect();
        self.chain.clone().with_fill(fill)
    }

    /// `(atoms counted in N_tot, lost atoms)` of a member.
    pub fn member_counts(&self, r: &NoiseRealization) -> (usize, usize) {
        let filled = self.chain.fill.iter().zip(&r.fill).filter(|(&f, &g)| f && g).count();
        let lost = self.chain.fill.iter().zip(&r.lost).filter(|(&f, &l)| f && l).count();
        (filled, lost)
    }

    fn readout_phases(&self, chain: &Chain, r: &NoiseRealization, t_hold: f64) -> Perturbation {
        let sigma = self.noise.dephasing_width(t_hold);
        if sigma == 0.0 {
            return Perturbation::default();
        }
        let phases = chain.atom_sites().iter().map(|&s| sigma * r.dephasing[s]).collect();
        Perturbation { readout_phases: Some(phases) }
    }

    /// Run `seq` (already perturbed) on a member; `None` if no atom is active.
    fn run_member(
        &self,
        seq: &PulseSequence,
        r: &NoiseRealization,
        t_hold: f64,
    ) -> Result<Option<ManyBodyState>> {
        if seq.chain().occupied() == 0 {
            return Ok(None);
        }
        let p = self.readout_phases(seq.chain(), r, t_hold);
        self.engine.run_perturbed(seq, &self.cal, &p).map(Some)
    }

    /// Collide, return and stop before the readout pulse. Returns the state
    /// and the (perturbed) readout pulse `(area, axis_phase)` for α = 0.
    fn returned_state(&self, t_hold: f64, r: &NoiseRealization) -> Result<(Option<ManyBodyState>, f64, f64)> {
        let chain = self.member_chain(r);
        let full = self.noise.perturb_sequence(&self.builder(chain.clone(), t_hold).returning(0.0), r)?;
        let (last, body) = full.instructions().split_last().expect("protocol is nonempty");
        let Instruction::Rotate { area, axis_phase } = *last else {
            unreachable!("return variant ends in the readout pulse")
        };
        let body = PulseSequence::new(body.to_vec(), chain);
        Ok((self.run_member(&body, r, t_hold)?, area, axis_phase))
    }
}

/// Single-atom spin density matrices `[[ρ00, ρ01], [ρ10, ρ11]]`.
pub(crate) fn single_atom_matrices(state: &ManyBodyState) -> Result<Vec<[[Complex64; 2]; 2]>> {
    (0..state.n_atoms())
        .map(|q| {
            let rho = reduced_density(state, &[q])?;
            Ok([[rho.get(0, 0), rho.get(0, 1)], [rho.get(1, 0), rho.get(1, 1)]])
        })
        .collect()
}

/// ⟨1| U ρ U† |1⟩.
fn p_one_after(u: &[[Complex64; 2]; 2], rho: &[[Complex64; 2]; 2]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            acc += u[1][a] * rho[a][b] * u[1][b].conj();
        }
    }
    acc.re
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FringeData {
    pub alpha: Vec<f64>,
    pub p_one: Vec<f64>,
    pub sites: usize,
    pub t_hold: f64,
    pub seed: u64,
}

impl FringeData {
    pub fn new(alpha: Vec<f64>, p_one: Vec<f64>, sites: usize, t_hold: f64, seed: u64) -> Result<Self> {
        if alpha.len() != p_one.len() {
            return Err(Error::Domain(format!("{} phases but {} values", alpha.len(), p_one.len())));
        }
        if alpha.len() < 8 {
            return Err(Error::Domain(format!("a fringe needs at least 8 points, got {}", alpha.len())));
        }
        if let Some(p) = p_one.iter().find(|p| !(-1e-12..=1.0 + 1e-12).contains(*p)) {
            return Err(Error::Domain(format!("population {p} outside [0, 1]")));
        }
        Ok(Self { alpha, p_one, sites, t_hold, seed })
    }

    pub fn fit(&self) -> Result<FitResult> {
        fit_points(&self.alpha, &self.p_one)
    }
}

/// `n` equally spaced phases covering one period, `[0, 2π)`.
pub fn alpha_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// A grid covers a full period if its extent plus one mean spacing reaches 2π.
fn check_alpha_grid(alpha: &[f64]) -> Result<()> {
    if alpha.len() < 8 {
        return Err(Error::Domain(format!("alpha grid needs at least 8 points, got {}", alpha.len())));
    }
    let lo = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let step = span / (alpha.len() - 1) as f64;
    if span + step < 2.0 * PI - 1e-9 {
        return Err(Error::Domain(format!("alpha grid spans {span:.4} rad, less than one period")));
    }
    Ok(())
}

/// Relative number of atoms in |1⟩ per α for one member, as
/// `(Σ_atoms P(|1⟩) per α, atoms counted)`. Lost atoms count ½.
fn ramsey_member(sc: &Scenario, t_hold: f64, alpha: &[f64], r: &NoiseRealization) -> Result<(Vec<f64>, usize)> {
    let (counted, lost) = sc.member_counts(r);
    let (state, area, axis) = sc.returned_state(t_hold, r)?;
    let rhos = match &state {
        Some(s) => single_atom_matrices(s)?,
        None => Vec::new(),
    };
    let sums = alpha
        .iter()
        .map(|&a| {
            let u = rotation(area, axis + a);
            rhos.iter().map(|rho| p_one_after(&u, rho)).sum::<f64>() + 0.5 * lost as f64
        })
        .collect();
    Ok((sums, counted))
}

/// Ramsey fringe of the return variant. Averaged over the noise ensemble as
/// a ratio of sums, `Σ N_r / Σ N_tot`, the way atom counts from many shots
/// are pooled.
pub fn ramsey_scan(sc: &Scenario, t_hold: f64, alpha: &[f64]) -> Result<FringeData> {
    if !(t_hold >= 0.0) {
        return Err(Error::Domain(format!("hold time must be >= 0, got {t_hold}")));
    }
    check_alpha_grid(alpha)?;
    let members = crate::noise::ensemble_map(&sc.noise, sc.chain.sites(), |_, r| ramsey_member(sc, t_hold, alpha, r))?;
    let mut num = vec![0.0; alpha.len()];
    let mut den = 0usize;
    for (sums, counted) in &members {
        for (n, s) in num.iter_mut().zip(sums) {
            *n += s;
        }
        den += counted;
    }
    if den == 0 {
        return Err(Error::Domain("no atoms in any ensemble member".into()));
    }
    let p_one = num.iter().map(|n| n / den as f64).collect();
    FringeData::new(alpha.to_vec(), p_one, sc.chain.sites(), t_hold, sc.noise.seed)
}

/// The same fringe computed the literal way: one full engine run of the
/// return sequence per α (noise off). Slow; used to cross-check
/// [`ramsey_scan`].
pub fn ramsey_scan_direct(sc: &Scenario, t_hold: f64, alpha: &[f64]) -> Result<Vec<f64>> {
    alpha
        .iter()
        .map(|&a| {
            let seq = sc.builder(sc.chain.clone(), t_hold).returning(a);
            let state = sc.engine.run(&seq, &sc.cal)?;
            Ok(crate::statevec::probability_one(&state))
        })
        .collect()
}

/// One point of a visibility curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t_hold: f64,
    pub phase: f64,
    pub fit: FitResult,
}

pub fn visibility_curve(sc: &Scenario, t_grid: &[f64], alpha: &[f64]) -> Result<Vec<CurvePoint>> {
    if t_grid.is_empty() {
        return Err(Error::Domain("hold-time grid is empty".into()));
    }
    t_grid
        .par_iter()
        .map(|&t| {
            let fit = ramsey_scan(sc, t, alpha)?.fit()?;
            Ok(CurvePoint { t_hold: t, phase: sc.cal.phase(t), fit })
        })
        .collect()
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Domain(format!("csv: {other:?}")),
    }
}

pub fn write_curve_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["t_hold_us", "phase_rad", "visibility", "fringe_phase_rad", "offset", "residual_rms"])
        .map_err(csv_err)?;
    for p in points {
        w.write_record([
            fmt(p.t_hold * 1e6),
            fmt(p.phase),
            fmt(p.fit.visibility),
            fmt(p.fit.fringe_phase),
            fmt(p.fit.offset),
            fmt(p.fit.residual_rms),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_fringe_csv<W: Write>(out: W, fringe: &FringeData) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["alpha_rad", "p_one"]).map_err(csv_err)?;
    for (a, p) in fringe.alpha.iter().zip(&fringe.p_one) {
        w.write_record([fmt(*a), fmt(*p)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pattern_csv<W: Write>(out: W, x: &[f64], intensity: &[f64]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["x_um", "intensity"]).map_err(csv_err)?;
    for (x, i) in x.iter().zip(intensity) {
        w.write_record([fmt(x * 1e6), fmt(*i)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal(chain: Chain) -> Scenario {
        Scenario::new(chain, CalibrationModel::unit())
    }

    #[test]
    fn zero_phase_is_ideal_ramsey() {
        let f = ramsey_scan(&ideal(Chain::ring(6)), 0.0, &alpha_grid(16)).unwrap().fit().unwrap();
        assert!((f.visibility - 1.0).abs() < 1e-10);
        assert!((f.offset - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pi_on_ring_kills_visibility() {
        let f = ramsey_scan(&ideal(Chain::ring(8)), PI, &alpha_grid(16)).unwrap().fit().unwrap();
        assert!(f.visibility < 1e-6, "{}", f.visibility);
    }

    #[test]
    fn fast_scan_matches_engine_per_alpha() {
        for chain in [Chain::ring(5), Chain::open(4).with_fill(vec![true, false, true, true])] {
            for phi in [0.0, 0.9, PI, 4.4] {
                let sc = ideal(chain.clone());
                let a = alpha_grid(12);
                let fast = ramsey_scan(&sc, phi, &a).unwrap();
                let slow = ramsey_scan_direct(&sc, phi, &a).unwrap();
                for (x, y) in fast.p_one.iter().zip(&slow) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pair_coherences_cancel_partially() {
        // Each atom alone has contrast |cos φ/2|, but the two coherences carry
        // opposite phases ∓φ/2, so the pooled fringe has cos²(φ/2).
        let sc = ideal(Chain::open(2));
        for phi in linspace(0.0, 2.0 * PI, 9) {
            let (state, _, _) = sc.returned_state(phi, &NoiseRealization::ideal(2)).unwrap();
            for rho in single_atom_matrices(&state.unwrap()).unwrap() {
                assert!((2.0 * rho[0][1].norm() - (phi / 2.0).cos().abs()).abs() < 1e-12);
            }
            let f = ramsey_scan(&sc, phi, &alpha_grid(16)).unwrap().fit().unwrap();
            assert!((f.visibility - (phi / 2.0).cos().powi(2)).abs() < 1e-8, "{phi}: {}", f.visibility);
        }
    }

    #[test]
    fn grid_checks() {
        let sc = ideal(Chain::ring(3));
        assert!(ramsey_scan(&sc, 0.1, &linspace(0.0, 3.0, 16)).is_err());
        assert!(ramsey_scan(&sc, 0.1, &alpha_grid(6)).is_err());
        assert!(ramsey_scan(&sc, -1.0, &alpha_grid(8)).is_err());
        assert!(visibility_curve(&sc, &[], &alpha_grid(8)).is_err());
    }

    #[test]
    fn curve_csv_shape() {
        let sc = ideal(Chain::ring(4));
        let pts = visibility_curve(&sc, &[0.0, 1.0], &alpha_grid(8)).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t_hold_us,phase_rad,visibility,fringe_phase_rad,offset,residual_rms");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.00000000000e0,0.00000000000e0,1.00000000000e0"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn global_spin_flip_keeps_visibility() {
        use crate::sequence::Instruction;
        let chain = Chain::ring(6);
        for phi in [0.3, 1.7, PI, 5.0] {
            let base = ProtocolBuilder::new(chain.clone(), phi).entangling();
            let mut flipped = vec![Instruction::Rotate { area: PI, axis_phase: 0.0 }];
            flipped.extend_from_slice(base.instructions());
            let flipped = PulseSequence::new(flipped, chain.clone());
            let vis = |seq: &PulseSequence| {
                let s = crate::statevec::run(seq, &CalibrationModel::unit()).unwrap();
                let rhos = single_atom_matrices(&s).unwrap();
                2.0 * rhos.iter().map(|r| r[0][1]).sum::<Complex64>().norm() / rhos.len() as f64
            };
            assert!((vis(&base) - vis(&flipped)).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_counts_in_total() {
        // φ = 0 and every atom either perfect or lost: V = 1 − lost fraction.
        let noise = NoiseModel { loss_per_atom: 0.05, ensemble_size: 400, seed: 3, ..NoiseModel::default() };
        let sc = ideal(Chain::ring(8)).with_noise(noise.clone());
        let fringe = ramsey_scan(&sc, 0.0, &alpha_grid(16)).unwrap();
        let lost: usize = (0..400).map(|m| noise.realize(8, m).lost_count()).sum();
        let expect = 1.0 - lost as f64 / (400.0 * 8.0);
        let v = fringe.fit().unwrap().visibility;
        assert!((v - expect).abs() < 1e-9, "{v} vs {expect}");
        assert!((v - 0.95).abs() < 0.02);
    }

    #[test]
    fn dephasing_ceiling_follows_gaussian() {
        let sigma = 0.8;
        let noise = NoiseModel { dephasing_sigma: sigma, ensemble_size: 1000, seed: 17, ..NoiseModel::default() };
        let sc = ideal(Chain::ring(3)).with_noise(noise);
        let v = ramsey_scan(&sc, 0.0, &alpha_grid(16)).unwrap().fit().unwrap().visibility;
        // Each member contributes cos(σz) per atom; stderr of the mean of
        // 3000 draws is about 0.4/√3000.
        let expect = (-sigma * sigma / 2.0).exp();
        assert!((v - expect).abs() < 4.0 * 0.4 / 3000f64.sqrt(), "{v} vs {expect}");
    }
}
