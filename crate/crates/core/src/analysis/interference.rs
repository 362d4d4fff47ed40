//! Double-slit patterns of the delocalized variant after time of flight.
//!
//! After the further transport each atom's |0⟩ and |1⟩ components sit two
//! sites apart; a fixed π/2 pulse then maps both onto |1⟩, and the
//! far-field image of the |1⟩ atoms is a two-slit pattern whose contrast is
//! set by the single-atom coherence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{fit_points, single_atom_matrices, CurvePoint, FitResult, Scenario};
use crate::error::{Error, Result};
use crate::noise::{ensemble_map, NoiseRealization};
use crate::physics::{HBAR, MASS_RB87};
use crate::sequence::{PulseSequence, READOUT_AXIS};
use crate::statevec::rotation;

/// Far-field imaging parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TofOptics {
    /// Transport-lattice wavelength λ_x; the slit separation of two sites is λ_x.
    pub wavelength_x: f64,
    pub mass: f64,
    /// Standard deviation of the on-site Gaussian amplitude.
    pub envelope_width: f64,
    pub tof: f64,
}

impl Default for TofOptics {
    fn default() -> Self {
        let wavelength_x = 785e-9;
        Self { wavelength_x, mass: MASS_RB87, envelope_width: wavelength_x / 8.0, tof: 11e-3 }
    }
}

impl TofOptics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength_x", self.wavelength_x),
            ("mass", self.mass),
            ("envelope_width", self.envelope_width),
            ("tof", self.tof),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Slit separation of sites j and j+2 (two lattice spacings of λ_x/2).
    pub fn slit_separation(&self) -> f64 {
        self.wavelength_x
    }

    /// Fringe wavenumber in the image plane, m·d/(ħ·t).
    pub fn fringe_wavenumber(&self) -> f64 {
        self.mass * self.slit_separation() / (HBAR * self.tof)
    }

    /// Width of the far-field envelope, ħ·t/(2·m·w).
    pub fn envelope_far_field(&self) -> f64 {
        HBAR * self.tof / (2.0 * self.mass * self.envelope_width)
    }

    pub fn envelope(&self, x: f64) -> f64 {
        let s = self.envelope_far_field();
        (-x * x / (2.0 * s * s)).exp()
    }

    /// Default image grid: ±3 envelope widths, 121 points.
    pub fn default_grid(&self) -> Vec<f64> {
        let s = self.envelope_far_field();
        super::linspace(-3.0 * s, 3.0 * s, 121)
    }
}

/// Summed two-slit parameters of all atoms: `I(x) = G(x)·[P + 2|C|·cos(q·x + arg C)]`,
/// normalised by the number of atoms counted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interferogram {
    pub optics: TofOptics,
    /// ρ_LL + ρ_RR summed over atoms, per counted atom.
    pub population: f64,
    /// ρ_LR summed over atoms, per counted atom.
    pub coherence: Complex64,
}

impl Interferogram {
    pub fn intensity(&self, x: f64) -> f64 {
        let q = self.optics.fringe_wavenumber();
        let c = self.coherence;
        self.optics.envelope(x) * (self.population + 2.0 * c.norm() * (q * x + c.arg()).cos())
    }

    pub fn sample(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&x| self.intensity(x)).collect()
    }

    /// `2|C|/P`, the contrast of the envelope-divided pattern.
    pub fn analytic_visibility(&self) -> f64 {
        if self.population <= 0.0 { 0.0 } else { 2.0 * self.coherence.norm() / self.population }
    }
}

/// |1⟩-sector two-slit amplitudes of one member: `(Σ ρ_LL+ρ_RR, Σ ρ_LR)`.
fn pattern_member(
    sc: &Scenario,
    t_hold: f64,
    r: &NoiseRealization,
) -> Result<(f64, Complex64, usize)> {
    let (counted, lost) = sc.member_counts(r);
    let chain = sc.member_chain(r);
    let seq = sc.builder(chain, t_hold).delocalizing();
    let n_rot = seq.instructions().iter().filter(|i| matches!(i, crate::sequence::Instruction::Rotate { .. })).count();
    let seq: PulseSequence = sc.noise.perturb_sequence(&seq, r)?;
    let mut population = 0.5 * lost as f64;
    let mut coherence = Complex64::new(0.0, 0.0);
    if let Some(state) = sc.run_member(&seq, r, t_hold)? {
        let u = rotation(PI / 2.0 * sc.noise.pulse_scale(r, n_rot), READOUT_AXIS);
        let ring = 2 * seq.n_sites() as i64;
        for (rho, tag) in single_atom_matrices(&state)?.iter().zip(state.tags()) {
            // Signed spin-0 minus spin-1 displacement, unwrapped on a ring.
            let mut d = tag.spin0 - tag.spin1;
            if seq.chain().boundary == crate::sequence::Boundary::Ring {
                d = d.rem_euclid(ring);
                if d > ring / 2 {
                    d -= ring;
                }
            }
            let (left, right) = if d > 0 { (1, 0) } else { (0, 1) };
            let amp = |s: usize| u[1][s];
            population += (amp(0).norm_sqr() * rho[0][0].re) + (amp(1).norm_sqr() * rho[1][1].re);
            if d != 0 {
                coherence += amp(left) * rho[left][right] * amp(right).conj();
            }
        }
    }
    Ok((population, coherence, counted))
}

/// Ensemble-averaged two-slit pattern of the delocalized variant.
pub fn interference_pattern(sc: &Scenario, t_hold: f64, optics: &TofOptics) -> Result<Interferogram> {
    if !(t_hold >= 0.0) {
        return Err(Error::Domain(format!("hold time must be >= 0, got {t_hold}")));
    }
    optics.validate()?;
    let members = ensemble_map(&sc.noise, sc.chain.sites(), |_, r| pattern_member(sc, t_hold, r))?;
    let (mut pop, mut coh, mut den) = (0.0, Complex64::new(0.0, 0.0), 0usize);
    for (p, c, n) in members {
        pop += p;
        coh += c;
        den += n;
    }
    if den == 0 {
        return Err(Error::Domain("no atoms in any ensemble member".into()));
    }
    Ok(Interferogram { optics: *optics, population: pop / den as f64, coherence: coh / den as f64 })
}

/// Visibility of a sampled pattern: divide out the envelope and fit a
/// sinusoid in the fringe phase `q·x`.
pub fn pattern_visibility(x: &[f64], intensity: &[f64], optics: &TofOptics) -> Result<FitResult> {
    let q = optics.fringe_wavenumber();
    let phase: Vec<f64> = x.iter().map(|&x| q * x).collect();
    let flat: Vec<f64> = x.iter().zip(intensity).map(|(&x, &i)| i / optics.envelope(x)).collect();
    fit_points(&phase, &flat)
}

pub fn interference_visibility_curve(sc: &Scenario, t_grid: &[f64], optics: &TofOptics) -> Result<Vec<CurvePoint>> {
    if t_grid.is_empty() {
        return Err(Error::Domain("hold-time grid is empty".into()));
    }
    let x = optics.default_grid();
    t_grid
        .par_iter()
        .map(|&t| {
            let pattern = interference_pattern(sc, t, optics)?;
            let fit = pattern_visibility(&x, &pattern.sample(&x), optics)?;
            Ok(CurvePoint { t_hold: t, phase: sc.cal.phase(t), fit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{alpha_grid, linspace, ramsey_scan};
    use crate::physics::CalibrationModel;
    use crate::sequence::Chain;

    fn ideal(chain: Chain) -> Scenario {
        Scenario::new(chain, CalibrationModel::unit())
    }

    #[test]
    fn fringe_period_matches_de_broglie() {
        let o = TofOptics::default();
        // Period h·t/(m·d).
        let period = 2.0 * PI / o.fringe_wavenumber();
        let expect = crate::physics::PLANCK * o.tof / (o.mass * o.slit_separation());
        assert!((period - expect).abs() < 1e-12 * expect);
        // The default grid spans several fringes.
        let g = o.default_grid();
        assert!((g[120] - g[0]) / period > 3.0);
    }

    #[test]
    fn pattern_equals_ramsey_visibility() {
        for chain in [Chain::ring(6), Chain::open(5), Chain::open(7).with_fill(vec![true, true, false, true, true, true, false])] {
            let sc = ideal(chain);
            for phi in linspace(0.0, 2.0 * PI, 7) {
                let o = TofOptics::default();
                let pat = interference_pattern(&sc, phi, &o).unwrap();
                let x = o.default_grid();
                let v_pat = pattern_visibility(&x, &pat.sample(&x), &o).unwrap().visibility;
                let v_ram = ramsey_scan(&sc, phi, &alpha_grid(16)).unwrap().fit().unwrap().visibility;
                assert!((v_pat - v_ram).abs() < 1e-8, "{phi}: {v_pat} vs {v_ram}");
                assert!((pat.analytic_visibility() - v_ram).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn single_atom_is_a_perfect_double_slit() {
        let sc = ideal(Chain::open(1));
        let o = TofOptics::default();
        let p = interference_pattern(&sc, 0.3, &o).unwrap();
        assert!((p.analytic_visibility() - 1.0).abs() < 1e-12);
        assert!((p.population - 0.5).abs() < 1e-12);
    }

    #[test]
    fn visibility_invariant_under_translation_and_scale() {
        let sc = ideal(Chain::ring(5));
        let o = TofOptics::default();
        let pat = interference_pattern(&sc, 1.2, &o).unwrap();
        let x = o.default_grid();
        let base = pattern_visibility(&x, &pat.sample(&x), &o).unwrap().visibility;
        let scaled: Vec<f64> = pat.sample(&x).iter().map(|i| 3.7 * i).collect();
        assert!((pattern_visibility(&x, &scaled, &o).unwrap().visibility - base).abs() < 1e-10);
        let shift = 0.37 * o.envelope_far_field();
        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        assert!((pattern_visibility(&xs, &pat.sample(&xs), &o).unwrap().visibility - base).abs() < 1e-10);
    }

    #[test]
    fn ideal_curve_has_period_two_pi_over_slope() {
        let cal = CalibrationModel::experiment();
        let sc = Scenario::new(Chain::ring(6), cal.clone());
        let period = 2.0 * PI / cal.slope;
        let t = [100e-6, 100e-6 + period, 170e-6, 170e-6 + 2.0 * period];
        let c = interference_visibility_curve(&sc, &t, &TofOptics::default()).unwrap();
        assert!((c[0].fit.visibility - c[1].fit.visibility).abs() < 1e-8);
        assert!((c[2].fit.visibility - c[3].fit.visibility).abs() < 1e-8);
    }

    #[test]
    fn contrast_vanishes_at_pi() {
        let sc = Scenario::new(Chain::ring(8), CalibrationModel::experiment());
        let o = TofOptics::default();
        assert!(interference_pattern(&sc, 210e-6, &o).unwrap().analytic_visibility() < 1e-9);
        assert!(interference_pattern(&sc, 450e-6, &o).unwrap().analytic_visibility() > 1.0 - 1e-9);
    }
}
