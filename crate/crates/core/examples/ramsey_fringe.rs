//! Ramsey fringes of a defective ring at the three hold times of the
//! experiment, with a sinusoidal fit of each.
//!
//!     cargo run --release --example ramsey_fringe

use std::f64::consts::PI;

use latticegate::analysis::{alpha_grid, ramsey_scan, write_fringe_csv, Scenario};
use latticegate::noise::NoiseModel;
use latticegate::physics::calibrate_affine;
use latticegate::sequence::Chain;

fn main() -> latticegate::Result<()> {
    let cal = calibrate_affine(&[(210e-6, PI), (450e-6, 2.0 * PI)])?;
    let noise = NoiseModel { p_fill: 0.7, dephasing_sigma: 1.0935, ensemble_size: 200, seed: 2024, ..NoiseModel::default() };
    let sc = Scenario::new(Chain::ring(12), cal).with_noise(noise);
    let alpha = alpha_grid(32);
    for t in [30e-6, 210e-6, 450e-6] {
        let data = ramsey_scan(&sc, t, &alpha)?;
        let fit = data.fit()?;
        println!(
            "t_hold = {:>3.0} μs: visibility {:.3}, offset {:.3}, fringe phase {:+.3} rad, rms residual {:.1e}",
            t * 1e6,
            fit.visibility,
            fit.offset,
            fit.fringe_phase,
            fit.residual_rms
        );
        if t == 210e-6 {
            let mut csv = Vec::new();
            write_fringe_csv(&mut csv, &data)?;
            print!("{}", String::from_utf8_lossy(&csv).lines().take(5).collect::<Vec<_>>().join("\n"));
            println!("\n...");
        }
    }
    Ok(())
}
