//! How imperfections lift the minimum visibility at φ = π: pulse-area
//! errors, vacancies and atom loss, each on its own.
//!
//!     cargo run --release --example noise_ensemble

use std::f64::consts::PI;

use latticegate::analysis::{alpha_grid, ramsey_scan, Scenario};
use latticegate::noise::{sample_vacancies, NoiseModel};
use latticegate::physics::CalibrationModel;
use latticegate::sequence::Chain;

fn min_visibility(noise: NoiseModel) -> latticegate::Result<f64> {
    let sc = Scenario::new(Chain::ring(8), CalibrationModel::unit()).with_noise(noise);
    Ok(ramsey_scan(&sc, PI, &alpha_grid(32))?.fit()?.visibility)
}

fn main() -> latticegate::Result<()> {
    println!("systematic pulse-area error:");
    for eps in [0.0, 0.02, 0.05, 0.1] {
        let v = min_visibility(NoiseModel { pulse_area_error: eps, ..NoiseModel::default() })?;
        println!("  ε = {eps:.2}: V(π) = {v:.4}");
    }

    println!("vacancies (ensemble of 400):");
    for p in [1.0, 0.9, 0.7, 0.5] {
        let v = min_visibility(NoiseModel { p_fill: p, ensemble_size: 400, seed: 11, ..NoiseModel::default() })?;
        println!("  p_fill = {p:.1}: V(π) = {v:.4}");
    }

    println!("atom loss during the sequence (ensemble of 400):");
    for loss in [0.0, 0.05, 0.2] {
        let v = min_visibility(NoiseModel { loss_per_atom: loss, ensemble_size: 400, seed: 11, ..NoiseModel::default() })?;
        println!("  loss = {loss:.2}: V(π) = {v:.4}");
    }

    let fill = sample_vacancies(20, 0.7, 3)?;
    println!("one vacancy draw: {}", fill.iter().map(|&f| if f { '●' } else { '·' }).collect::<String>());
    Ok(())
}
