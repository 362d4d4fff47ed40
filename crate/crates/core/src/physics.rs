//! Lattice physics: constants, recoil energy, the lin-∠-lin potential pair,
//! harmonic well frequencies, and the hold-time → collisional-phase map.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant (exact SI value), J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_07e-27;
/// Mass of a single ⁸⁷Rb atom, kg.
pub const MASS_RB87: f64 = 86.909_180_5 * ATOMIC_MASS_UNIT;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub h: f64,
    pub mass_rb87: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            h: PLANCK,
            mass_rb87: MASS_RB87,
        }
    }
}

/// One standing-wave axis of the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeAxis {
    /// Laser wavelength, m.
    pub wavelength: f64,
    /// Depth in units of the recoil energy of this axis.
    pub depth: f64,
    /// Beam waist, m. Informational only.
    pub waist: f64,
}

impl LatticeAxis {
    pub fn new(wavelength: f64, depth: f64, waist: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::Domain(format!("wavelength must be > 0, got {wavelength}")));
        }
        if !(depth >= 0.0) {
            return Err(Error::Domain(format!("depth must be >= 0, got {depth}")));
        }
        Ok(Self { wavelength, depth, waist })
    }

    /// The two 820 nm axes of the experiment at 25 Er.
    pub fn transverse() -> Self {
        Self { wavelength: 820e-9, depth: 25.0, waist: 210e-6 }
    }

    /// The 785 nm spin-dependent transport axis at 34 Er.
    pub fn transport() -> Self {
        Self { wavelength: 785e-9, depth: 34.0, waist: 150e-6 }
    }

    pub fn wavevector(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Lattice spacing λ/2.
    pub fn spacing(&self) -> f64 {
        self.wavelength / 2.0
    }

    pub fn recoil(&self, mass: f64) -> Result<f64> {
        recoil_energy(self.wavelength, mass)
    }

    pub fn trap_frequency(&self, mass: f64) -> Result<f64> {
        trap_frequency(self.depth, self.recoil(mass)?)
    }
}

/// Recoil energy `ħ²k²/2m` with `k = 2π/λ`, in joules.
pub fn recoil_energy(wavelength: f64, mass: f64) -> Result<f64> {
    if !(wavelength > 0.0) || !(mass > 0.0) {
        return Err(Error::Domain(format!(
            "recoil energy needs positive wavelength and mass, got λ={wavelength}, m={mass}"
        )));
    }
    let k = 2.0 * PI / wavelength;
    Ok(HBAR * HBAR * k * k / (2.0 * mass))
}

/// σ⁺/σ⁻ standing-wave potentials `V± = V₀ cos²(k x ± θ/2)` of a lin-∠-lin lattice.
pub fn potential_pair(x: f64, theta: f64, depth: f64, k_x: f64) -> (f64, f64) {
    let plus = (k_x * x + theta / 2.0).cos();
    let minus = (k_x * x - theta / 2.0).cos();
    (depth * plus * plus, depth * minus * minus)
}

/// Displacement between the V₊ and V₋ lattices at polarization angle θ.
pub fn minima_separation(theta: f64, wavelength_x: f64) -> f64 {
    theta / PI * wavelength_x / 2.0
}

/// Angular frequency of the harmonic approximation to a cos² well of depth
/// `s` recoils: ω = 2√s·Er/ħ.
pub fn trap_frequency(depth_in_recoils: f64, recoil: f64) -> Result<f64> {
    if !(depth_in_recoils >= 0.0) {
        return Err(Error::Domain(format!("negative lattice depth {depth_in_recoils}")));
    }
    if !(recoil > 0.0) {
        return Err(Error::Domain(format!("recoil energy must be > 0, got {recoil}")));
    }
    Ok(2.0 * depth_in_recoils.sqrt() * recoil / HBAR)
}

/// Affine map φ(t) = slope·t + offset between hold time and collisional phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    /// rad/s, equal to U₀₁/ħ.
    pub slope: f64,
    /// rad.
    pub offset: f64,
    /// (t_hold [s], phase [rad]) pairs used for the fit.
    pub anchors: Vec<(f64, f64)>,
}

impl CalibrationModel {
    /// Pure linear map through the origin, φ = slope·t.
    pub fn from_slope(slope: f64) -> Result<Self> {
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::Calibration(format!("slope must be positive, got {slope}")));
        }
        Ok(Self { slope, offset: 0.0, anchors: Vec::new() })
    }

    /// Unit map: a hold of `t` seconds acquires exactly `t` radians. Handy
    /// for driving the engine directly in phase.
    pub fn unit() -> Self {
        Self { slope: 1.0, offset: 0.0, anchors: Vec::new() }
    }

    /// The experiment's two extremum anchors: φ=π at 210 μs, φ=2π at 450 μs.
    pub fn experiment() -> Self {
        calibrate_affine(&[(210e-6, PI), (450e-6, 2.0 * PI)])
            .expect("fixed anchors are well-posed")
    }

    /// U₀₁/h in Hz.
    pub fn interaction_hz(&self) -> f64 {
        self.slope / (2.0 * PI)
    }

    pub fn phase(&self, t_hold: f64) -> f64 {
        phase_from_hold(t_hold, self)
    }

    /// Hold time that maps to `phase`.
    pub fn hold_for_phase(&self, phase: f64) -> f64 {
        (phase - self.offset) / self.slope
    }
}

/// Least-squares affine fit through `(t_hold, phase)` anchors.
pub fn calibrate_affine(anchors: &[(f64, f64)]) -> Result<CalibrationModel> {
    if anchors.len() < 2 {
        return Err(Error::Calibration(format!(
            "affine calibration needs at least 2 anchors, got {}",
            anchors.len()
        )));
    }
    if anchors.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
        return Err(Error::Calibration("non-finite anchor".into()));
    }
    let n = anchors.len() as f64;
    let t_mean = anchors.iter().map(|a| a.0).sum::<f64>() / n;
    let p_mean = anchors.iter().map(|a| a.1).sum::<f64>() / n;
    let stt: f64 = anchors.iter().map(|a| (a.0 - t_mean).powi(2)).sum();
    let stp: f64 = anchors.iter().map(|a| (a.0 - t_mean) * (a.1 - p_mean)).sum();
    let scale = anchors.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
    if stt <= (1e-12 * scale).powi(2) * n {
        return Err(Error::Calibration("anchor hold times are degenerate".into()));
    }
    let slope = stp / stt;
    if !(slope > 0.0) {
        return Err(Error::Calibration(format!(
            "fitted slope {slope} is not positive; phase must grow with hold time"
        )));
    }
    Ok(CalibrationModel {
        slope,
        offset: p_mean - slope * t_mean,
        anchors: anchors.to_vec(),
    })
}

/// Zero-intercept calibration through one anchor, φ = (phase/t)·t.
pub fn calibrate_through_origin(t_hold: f64, phase: f64) -> Result<CalibrationModel> {
    if !(t_hold > 0.0) || !(phase > 0.0) {
        return Err(Error::Calibration(format!(
            "single-anchor calibration needs t>0 and phase>0, got ({t_hold}, {phase})"
        )));
    }
    Ok(CalibrationModel {
        slope: phase / t_hold,
        offset: 0.0,
        anchors: vec![(t_hold, phase)],
    })
}

pub fn phase_from_hold(t_hold: f64, cal: &CalibrationModel) -> f64 {
    cal.slope * t_hold + cal.offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn planck_pair_is_consistent() {
        let c = PhysicalConstants::default();
        assert_relative_eq!(c.h, 2.0 * PI * c.hbar, max_relative = 1e-15);
        assert!(c.hbar > 0.0 && c.h > 0.0 && c.mass_rb87 > 0.0);
    }

    #[test]
    fn recoil_frequencies_of_the_two_lattices() {
        // Independent route: Er/h = h / (2 m λ²).
        for (lambda, khz) in [(820e-9, 3.41), (785e-9, 3.73)] {
            let er = recoil_energy(lambda, MASS_RB87).unwrap();
            let hand = PLANCK / (2.0 * MASS_RB87 * lambda * lambda);
            assert_relative_eq!(er / PLANCK, hand, max_relative = 1e-12);
            assert!((er / PLANCK / 1e3 - khz).abs() < 0.01, "{}", er / PLANCK);
        }
    }

    #[test]
    fn recoil_quarter_at_double_wavelength() {
        let a = recoil_energy(800e-9, MASS_RB87).unwrap();
        let b = recoil_energy(1600e-9, MASS_RB87).unwrap();
        assert_relative_eq!(b, a / 4.0, max_relative = 1e-14);
    }

    #[test]
    fn recoil_rejects_bad_input() {
        assert!(recoil_energy(0.0, 1.0).is_err());
        assert!(recoil_energy(1e-6, -1.0).is_err());
        assert!(recoil_energy(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn potentials_coincide_at_zero_angle() {
        let k = LatticeAxis::transport().wavevector();
        for i in 0..50 {
            let x = i as f64 * 17e-9;
            let (p, m) = potential_pair(x, 0.0, 1.0, k);
            assert_eq!(p, m);
        }
    }

    #[test]
    fn pi_angle_displaces_by_half_wavelength() {
        let axis = LatticeAxis::transport();
        let k = axis.wavevector();
        for i in 0..50 {
            let x = i as f64 * 13e-9;
            let (p, _) = potential_pair(x, PI, 2.0, k);
            let (_, m) = potential_pair(x + axis.wavelength / 2.0, PI, 2.0, k);
            assert!((p - m).abs() < 1e-12);
        }
        assert_relative_eq!(minima_separation(PI, axis.wavelength), axis.wavelength / 2.0);
    }

    #[test]
    fn minima_separation_matches_potential_minima() {
        let axis = LatticeAxis::transport();
        let k = axis.wavevector();
        let theta = 0.7;
        // V₊ minimum near k x + θ/2 = π/2, V₋ near k x − θ/2 = π/2.
        let x_plus = (PI / 2.0 - theta / 2.0) / k;
        let x_minus = (PI / 2.0 + theta / 2.0) / k;
        assert!(potential_pair(x_plus, theta, 1.0, k).0 < 1e-20);
        assert!(potential_pair(x_minus, theta, 1.0, k).1 < 1e-20);
        assert_relative_eq!(
            x_minus - x_plus,
            minima_separation(theta, axis.wavelength),
            max_relative = 1e-12
        );
    }

    #[test]
    fn trap_frequencies_within_fifteen_percent_of_quoted() {
        let t = LatticeAxis::transverse();
        let f25 = t.trap_frequency(MASS_RB87).unwrap() / (2.0 * PI);
        assert!((f25 - 34.1e3).abs() < 0.2e3, "{f25}");
        assert!((f25 - 30e3).abs() / 30e3 < 0.15);

        let x = LatticeAxis::transport();
        let f34 = x.trap_frequency(MASS_RB87).unwrap() / (2.0 * PI);
        assert!((f34 - 43.5e3).abs() < 0.3e3, "{f34}");
        assert!((f34 - 39e3).abs() / 39e3 < 0.15);

        assert_eq!(trap_frequency(0.0, 1e-30).unwrap(), 0.0);
        assert!(trap_frequency(-1.0, 1e-30).is_err());
    }

    #[test]
    fn two_anchor_calibration() {
        let cal = CalibrationModel::experiment();
        assert_relative_eq!(cal.slope, PI / 240e-6, max_relative = 1e-12);
        assert_relative_eq!(cal.offset, PI / 8.0, max_relative = 1e-9);
        assert!((cal.interaction_hz() - 2083.3).abs() < 0.1);
        assert!((cal.phase(210e-6) - PI).abs() < 1e-12);
        assert!((cal.phase(450e-6) - 2.0 * PI).abs() < 1e-12);
        assert!((cal.phase(330e-6) - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn origin_anchor_calibration() {
        let t = 1e-3;
        let cal = calibrate_affine(&[(0.0, 0.0), (t, 2.0 * PI)]).unwrap();
        assert_relative_eq!(cal.slope, 2.0 * PI / t, max_relative = 1e-12);
        assert!(cal.offset.abs() < 1e-12);

        let single = calibrate_through_origin(210e-6, PI).unwrap();
        assert!((single.interaction_hz() - 2380.95).abs() < 0.01);
    }

    #[test]
    fn calibration_errors() {
        assert!(calibrate_affine(&[(1e-4, 1.0)]).is_err());
        assert!(calibrate_affine(&[(1e-4, 1.0), (1e-4, 2.0)]).is_err());
        assert!(calibrate_affine(&[(1e-4, 2.0), (2e-4, 1.0)]).is_err());
    }

    #[test]
    fn least_squares_with_three_anchors() {
        let cal = calibrate_affine(&[(0.0, 0.1), (1.0, 1.1), (2.0, 2.1)]).unwrap();
        assert_relative_eq!(cal.slope, 1.0, max_relative = 1e-12);
        assert_relative_eq!(cal.offset, 0.1, max_relative = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn recoil_is_homogeneous(lambda in 200e-9..2e-6f64, c in 0.1..10.0f64) {
                let a = recoil_energy(lambda / c, MASS_RB87).unwrap();
                let b = recoil_energy(lambda, MASS_RB87).unwrap();
                prop_assert!((a - c * c * b).abs() <= 1e-12 * a);
            }

            #[test]
            fn potential_is_periodic(x in -1e-6..1e-6f64, theta in -10.0..10.0f64) {
                let axis = LatticeAxis::transport();
                let k = axis.wavevector();
                let (p0, m0) = potential_pair(x, theta, 1.0, k);
                let (p1, m1) = potential_pair(x, theta + 2.0 * PI, 1.0, k);
                let (p2, m2) = potential_pair(x + axis.wavelength, theta, 1.0, k);
                prop_assert!((p0 - p1).abs() < 1e-9 && (m0 - m1).abs() < 1e-9);
                prop_assert!((p0 - p2).abs() < 1e-9 && (m0 - m2).abs() < 1e-9);
            }

            #[test]
            fn two_anchors_are_reproduced(
                t1 in 0.0..1e-3f64, dt in 1e-6..1e-3f64, p1 in 0.0..10.0f64, dp in 0.01..10.0f64
            ) {
                let anchors = [(t1, p1), (t1 + dt, p1 + dp)];
                let cal = calibrate_affine(&anchors).unwrap();
                for (t, p) in anchors {
                    prop_assert!((cal.phase(t) - p).abs() < 1e-12 * (1.0 + p.abs()) * 10.0);
                }
                // Affine and increasing.
                let (a, b) = (t1, t1 + dt);
                prop_assert!(cal.phase(b) > cal.phase(a));
                prop_assert!(
                    (cal.phase(a) + cal.phase(b) - cal.phase(0.0) - cal.phase(a + b)).abs() < 1e-9
                );
            }
        }
    }
}
