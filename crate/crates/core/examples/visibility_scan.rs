//! Entangling-disentangling oscillation: Ramsey visibility versus hold
//! time, ideal and with vacancies plus dephasing.
//!
//!     cargo run --release --example visibility_scan

use std::f64::consts::PI;

use latticegate::analysis::{alpha_grid, linspace, visibility_curve, Scenario};
use latticegate::noise::NoiseModel;
use latticegate::physics::calibrate_affine;
use latticegate::sequence::Chain;

fn main() -> latticegate::Result<()> {
    let cal = calibrate_affine(&[(210e-6, PI), (450e-6, 2.0 * PI)])?;
    let t = linspace(0.0, 600e-6, 21);
    let alpha = alpha_grid(32);
    let ideal = visibility_curve(&Scenario::new(Chain::ring(10), cal.clone()), &t, &alpha)?;
    let noise = NoiseModel { p_fill: 0.7, dephasing_sigma: 1.0935, ensemble_size: 200, seed: 1, ..NoiseModel::default() };
    let noisy = visibility_curve(&Scenario::new(Chain::ring(12), cal).with_noise(noise), &t, &alpha)?;
    println!("t_hold_us  phase/π  V_ideal  V_noisy");
    for (a, b) in ideal.iter().zip(&noisy) {
        let bar = "#".repeat((b.fit.visibility * 60.0).round() as usize);
        println!("{:>9.0}  {:>7.3}  {:>7.3}  {:>7.3} {bar}", a.t_hold * 1e6, a.phase / PI, a.fit.visibility, b.fit.visibility);
    }
    Ok(())
}
