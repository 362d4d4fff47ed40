//! Sinusoid fit `p(α) = C + A·cos(α − α₀)` by Levenberg–Marquardt.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const MIN_OFFSET: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub visibility: f64,
    pub amplitude: f64,
    pub fringe_phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Wrap to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI { PI } else { y }
}

fn sse(alpha: &[f64], p: &[f64], th: &Vector3<f64>) -> f64 {
    alpha
        .iter()
        .zip(p)
        .map(|(&a, &y)| {
            let r = y - (th[0] + th[1] * (a - th[2]).cos());
            r * r
        })
        .sum()
}

/// Least-squares Fourier coefficients at the fundamental; for a uniform
/// full-period grid this is the plain DFT.
fn seed(alpha: &[f64], p: &[f64]) -> Vector3<f64> {
    let mut m = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for (&a, &y) in alpha.iter().zip(p) {
        let b = Vector3::new(1.0, a.cos(), a.sin());
        m += b * b.transpose();
        rhs += b * y;
    }
    let coef = m.lu().solve(&rhs).unwrap_or_else(|| {
        let n = alpha.len() as f64;
        let dft = |f: fn(f64) -> f64| 2.0 / n * alpha.iter().zip(p).map(|(&a, &y)| y * f(a)).sum::<f64>();
        Vector3::new(p.iter().sum::<f64>() / n, dft(f64::cos), dft(f64::sin))
    });
    Vector3::new(coef[0], coef[1].hypot(coef[2]), coef[2].atan2(coef[1]))
}

/// Fit the fringe; at least 4 points.
pub fn fit_points(alpha: &[f64], p: &[f64]) -> Result<FitResult> {
    if alpha.len() != p.len() {
        return Err(Error::Domain(format!("{} phases but {} values", alpha.len(), p.len())));
    }
    if alpha.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 fringe points, got {}", alpha.len())));
    }
    if alpha.iter().chain(p).any(|v| !v.is_finite()) {
        return Err(Error::Domain("fringe contains non-finite values".into()));
    }
    let n = alpha.len() as f64;
    let mut th = seed(alpha, p);
    let mut cost = sse(alpha, p, &th);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = cost <= 1e-30 * n;

    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&a, &y) in alpha.iter().zip(p) {
            let (s, c) = (a - th[2]).sin_cos();
            let r = y - (th[0] + th[1] * c);
            let j = Vector3::new(1.0, c, th[1] * s);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        loop {
            let mut damped = jtj;
            for k in 0..3 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = th + step;
            let trial_cost = sse(alpha, p, &trial);
            if trial_cost <= cost {
                let small_step = step.norm() <= 1e-13 * (1.0 + th.norm());
                let small_gain = cost - trial_cost <= 1e-14 * cost;
                th = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                converged = small_step || small_gain || cost <= 1e-30 * n;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent direction left at machine precision.
                converged = true;
                break;
            }
        }
    }
    let residual_rms = (cost / n).sqrt();
    if !converged {
        return Err(Error::FitNotConverged { iterations, residual_rms });
    }

    let (mut amplitude, mut phase) = (th[1], th[2]);
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += PI;
    }
    let offset = th[0];
    if offset <= MIN_OFFSET {
        return Err(Error::DegenerateFringe { offset });
    }
    Ok(FitResult {
        visibility: amplitude / offset,
        amplitude,
        fringe_phase: wrap_phase(phase),
        offset,
        residual_rms,
        iterations,
    })
}

/// `(max − min)/(max + min)` of a sampled signal.
pub fn contrast(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 { 0.0 } else { (max - min) / (max + min) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn recovers_synthetic_fringe() {
        let a = grid(32);
        let p: Vec<f64> = a.iter().map(|&x| 0.5 + 0.25 * (x - 1.0).cos()).collect();
        let f = fit_points(&a, &p).unwrap();
        assert!((f.visibility - 0.5).abs() < 1e-9);
        assert!((f.fringe_phase - 1.0).abs() < 1e-9);
        assert!((f.offset - 0.5).abs() < 1e-9);
        assert!(f.residual_rms < 1e-9);
    }

    #[test]
    fn constant_fringe_has_zero_visibility() {
        let a = grid(16);
        let f = fit_points(&a, &[0.5; 16]).unwrap();
        assert!(f.visibility.abs() < 1e-12);
    }

    #[test]
    fn nonuniform_grid_and_negative_seed_amplitude() {
        // Points on an irregular grid; true phase near π so the raw cosine
        // coefficient is negative.
        let a: Vec<f64> = (0..20).map(|k| 0.1 + 0.33 * k as f64 + 0.05 * ((k * 7) % 3) as f64).collect();
        let p: Vec<f64> = a.iter().map(|&x| 0.4 + 0.1 * (x - 3.0).cos()).collect();
        let f = fit_points(&a, &p).unwrap();
        assert!((f.visibility - 0.25).abs() < 1e-9);
        assert!((f.fringe_phase - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_offset_is_an_error() {
        let a = grid(8);
        let p: Vec<f64> = a.iter().map(|&x| 0.1 * x.cos()).collect();
        assert!(matches!(fit_points(&a, &p), Err(Error::DegenerateFringe { .. })));
        assert!(fit_points(&a[..3], &p[..3]).is_err());
    }

    #[test]
    fn noisy_recovery_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = grid(64);
        let trials = 400;
        let mut ok = 0;
        for _ in 0..trials {
            let p: Vec<f64> = a
                .iter()
                .map(|&x| 0.5 + 0.2 * (x - 0.7).cos() + 0.01 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let f = fit_points(&a, &p).unwrap();
            if (f.visibility - 0.4).abs() <= 0.02 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * trials as f64, "{ok}/{trials}");
    }

    #[test]
    fn contrast_of_pure_sinusoid_equals_visibility() {
        let a = grid(400);
        let p: Vec<f64> = a.iter().map(|&x| 2.0 + 0.6 * (x - 0.2).cos()).collect();
        let f = fit_points(&a, &p).unwrap();
        assert!((contrast(&p) - f.visibility).abs() < 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shift_equivariance(
                c in 0.2..0.8f64, v in 0.0..0.9f64, a0 in -3.0..3.0f64, delta in -2.0..2.0f64,
            ) {
                let a = grid(24);
                let p: Vec<f64> = a.iter().map(|&x| c + c * v * (x - a0).cos()).collect();
                let shifted: Vec<f64> = a.iter().map(|x| x + delta).collect();
                let f = fit_points(&a, &p).unwrap();
                let g = fit_points(&shifted, &p).unwrap();
                prop_assert!((f.visibility - g.visibility).abs() < 1e-9);
                prop_assert!((f.offset - g.offset).abs() < 1e-9);
                if v > 1e-3 {
                    prop_assert!(wrap_phase(g.fringe_phase - f.fringe_phase - delta).abs() < 1e-9);
                }
            }
        }
    }
}
