//! Imperfections of the experiment and the ensemble runner that averages
//! over them.
//!
//! Channels:
//! * vacancies: each site is filled independently with probability `p_fill`;
//! * pulse area: every rotation area is scaled by `1 + ε` (systematic), plus
//!   optional per-pulse Gaussian jitter;
//! * dephasing: each atom picks up a Gaussian Z phase of standard deviation
//!   `σ(t) = √(σ₀² + (g·t)²)` right before the readout pulse;
//! * loss: an atom is lost with probability `loss_per_atom`; it takes no part
//!   in the collisions and is read out as depolarized (P(|1⟩) = ½) but still
//!   counts towards the total atom number.
//!
//! Member `m` draws its site randomness from stream `2m` and its pulse
//! randomness from stream `2m+1` of the master seed (see [`crate::rng`]).
//! Draws are taken in a fixed order whether or not a channel is active, so
//! switching one channel on does not reshuffle the others.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sequence::PulseSequence;

/// Number of per-pulse jitter draws reserved for every member.
const PULSE_DRAWS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub p_fill: f64,
    /// Systematic fractional pulse-area error ε.
    pub pulse_area_error: f64,
    /// Standard deviation of an additional random fractional area error per pulse.
    pub pulse_area_jitter: f64,
    /// σ₀, rad.
    pub dephasing_sigma: f64,
    /// g, rad/s: growth of the dephasing width with hold time.
    pub dephasing_growth: f64,
    pub loss_per_atom: f64,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p_fill: 1.0,
            pulse_area_error: 0.0,
            pulse_area_jitter: 0.0,
            dephasing_sigma: 0.0,
            dephasing_growth: 0.0,
            loss_per_atom: 0.0,
            ensemble_size: 1,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("p_fill", self.p_fill)?;
        prob("loss_per_atom", self.loss_per_atom)?;
        if !(self.pulse_area_error > -1.0) || !self.pulse_area_error.is_finite() {
            return Err(Error::Domain(format!("pulse_area_error must be > -1, got {}", self.pulse_area_error)));
        }
        for (name, v) in [
            ("pulse_area_jitter", self.pulse_area_jitter),
            ("dephasing_sigma", self.dephasing_sigma),
            ("dephasing_growth", self.dephasing_growth),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.ensemble_size == 0 {
            return Err(Error::Domain("ensemble_size must be >= 1".into()));
        }
        Ok(())
    }

    /// No channel is active, every member would be identical.
    pub fn is_noiseless(&self) -> bool {
        self.p_fill == 1.0
            && self.pulse_area_error == 0.0
            && self.pulse_area_jitter == 0.0
            && self.dephasing_sigma == 0.0
            && self.dephasing_growth == 0.0
            && self.loss_per_atom == 0.0
    }

    /// Members actually simulated.
    pub fn members(&self) -> usize {
        if self.is_noiseless() { 1 } else { self.ensemble_size }
    }

    pub fn dephasing_width(&self, t_hold: f64) -> f64 {
        self.dephasing_sigma.hypot(self.dephasing_growth * t_hold)
    }

    /// σ that caps the visibility at `ceiling`: exp(−σ²/2) = ceiling.
    pub fn sigma_for_ceiling(ceiling: f64) -> f64 {
        (-2.0 * ceiling.ln()).sqrt()
    }

    /// Draw the randomness of member `m` for a row of `sites` sites.
    pub fn realize(&self, sites: usize, member: u64) -> NoiseRealization {
        let mut r = rng::member_sites(self.seed, member);
        let fill_u: Vec<f64> = (0..sites).map(|_| r.random()).collect();
        let loss_u: Vec<f64> = (0..sites).map(|_| r.random()).collect();
        let dephasing: Vec<f64> = (0..sites).map(|_| r.sample(StandardNormal)).collect();
        let mut p = rng::member_pulses(self.seed, member);
        let pulse: Vec<f64> = (0..PULSE_DRAWS).map(|_| p.sample(StandardNormal)).collect();

        let fill: Vec<bool> = fill_u.iter().map(|&u| u < self.p_fill).collect();
        let lost = fill.iter().zip(&loss_u).map(|(&f, &u)| f && u < self.loss_per_atom).collect();
        NoiseRealization { fill, lost, dephasing, pulse }
    }

    /// Area multiplier of the `k`-th rotation for this member.
    pub fn pulse_scale(&self, member: &NoiseRealization, k: usize) -> f64 {
        (1.0 + self.pulse_area_error) * (1.0 + self.pulse_area_jitter * member.pulse_draw(k))
    }

    /// Apply the systematic area error and this member's jitter to a sequence.
    pub fn perturb_sequence(&self, seq: &PulseSequence, member: &NoiseRealization) -> Result<PulseSequence> {
        if self.pulse_area_jitter == 0.0 {
            return apply_pulse_error(seq, self.pulse_area_error);
        }
        if !(self.pulse_area_error > -1.0) {
            return Err(Error::Domain(format!("pulse area error must be > -1, got {}", self.pulse_area_error)));
        }
        Ok(seq.map_areas(|k, area| area * self.pulse_scale(member, k)))
    }
}

/// One member's draws.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRealization {
    /// Site filled by the Mott insulator.
    pub fill: Vec<bool>,
    /// Filled site whose atom is lost.
    pub lost: Vec<bool>,
    /// Standard normal per site, scaled by σ(t) at use.
    pub dephasing: Vec<f64>,
    pulse: Vec<f64>,
}

impl NoiseRealization {
    pub fn ideal(sites: usize) -> Self {
        Self { fill: vec![true; sites], lost: vec![false; sites], dephasing: vec![0.0; sites], pulse: vec![0.0; PULSE_DRAWS] }
    }

    /// Sites holding an atom that takes part in the gate.
    pub fn active(&self) -> Vec<bool> {
        self.fill.iter().zip(&self.lost).map(|(&f, &l)| f && !l).collect()
    }

    pub fn lost_count(&self) -> usize {
        self.lost.iter().filter(|&&l| l).count()
    }

    /// Atoms counted in N_tot.
    pub fn atom_count(&self) -> usize {
        self.fill.iter().filter(|&&f| f).count()
    }

    /// Per-atom readout Z phases for the active atoms, at dephasing width `sigma`.
    pub fn readout_phases(&self, sigma: f64) -> Vec<f64> {
        self.active()
            .iter()
            .zip(&self.dephasing)
            .filter(|(&a, _)| a)
            .map(|(_, &z)| sigma * z)
            .collect()
    }

    fn pulse_draw(&self, k: usize) -> f64 {
        self.pulse.get(k).copied().unwrap_or(0.0)
    }
}

/// Scale every rotation area by `1 + ε`.
pub fn apply_pulse_error(seq: &PulseSequence, epsilon: f64) -> Result<PulseSequence> {
    if !(epsilon > -1.0) {
        return Err(Error::Domain(format!("pulse area error must be > -1, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(seq.clone());
    }
    Ok(seq.map_areas(|_, a| a * (1.0 + epsilon)))
}

/// Independent Bernoulli(p_fill) occupation of `sites` sites; identical to
/// the fill mask of ensemble member 0 under the same seed.
pub fn sample_vacancies(sites: usize, p_fill: f64, seed: u64) -> Result<Vec<bool>> {
    let model = NoiseModel { p_fill, seed, ..NoiseModel::default() };
    model.validate()?;
    Ok(model.realize(sites, 0).fill)
}

/// Per-atom Z phases for member `m` at hold time `t_hold`.
pub fn apply_dephasing(model: &NoiseModel, member: &NoiseRealization, t_hold: f64) -> Vec<f64> {
    member.readout_phases(model.dephasing_width(t_hold))
}

/// Mean of a scalar over the ensemble with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, samples: n }
    }
}

/// Evaluate `f` on every member in parallel; results come back in member order.
/// The first error aborts the ensemble.
pub fn ensemble_map<T, F>(model: &NoiseModel, sites: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &NoiseRealization) -> Result<T> + Sync,
{
    model.validate()?;
    if model.is_noiseless() {
        return Ok(vec![f(0, &NoiseRealization::ideal(sites))?]);
    }
    (0..model.ensemble_size as u64)
        .into_par_iter()
        .map(|m| f(m, &model.realize(sites, m)))
        .collect()
}

pub fn ensemble_average<F>(model: &NoiseModel, sites: usize, observable: F) -> Result<Estimate>
where
    F: Fn(u64, &NoiseRealization) -> Result<f64> + Sync,
{
    let xs = ensemble_map(model, sites, observable)?;
    Ok(Estimate::from_samples(&xs))
}
