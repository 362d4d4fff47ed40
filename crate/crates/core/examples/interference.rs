//! Double-slit picture of the delocalized variant: far-field patterns after
//! time of flight, drawn as text, and their fitted contrast.
//!
//!     cargo run --release --example interference

use std::f64::consts::PI;

use latticegate::analysis::{interference_pattern, pattern_visibility, write_pattern_csv, Scenario, TofOptics};
use latticegate::noise::NoiseModel;
use latticegate::physics::calibrate_affine;
use latticegate::sequence::Chain;

fn main() -> latticegate::Result<()> {
    let cal = calibrate_affine(&[(210e-6, PI), (450e-6, 2.0 * PI)])?;
    let noise = NoiseModel { p_fill: 0.7, dephasing_sigma: 1.0935, ensemble_size: 200, seed: 5, ..NoiseModel::default() };
    let sc = Scenario::new(Chain::ring(12), cal).with_noise(noise);
    let optics = TofOptics::default();
    println!(
        "slits {:.0} nm apart, fringe period {:.1} μm, envelope width {:.1} μm",
        optics.slit_separation() * 1e9,
        2.0 * PI / optics.fringe_wavenumber() * 1e6,
        optics.envelope_far_field() * 1e6
    );
    let x = optics.default_grid();
    for t in [30e-6, 210e-6, 450e-6] {
        let pattern = interference_pattern(&sc, t, &optics)?;
        let intensity = pattern.sample(&x);
        let fit = pattern_visibility(&x, &intensity, &optics)?;
        let peak = intensity.iter().copied().fold(0.0, f64::max);
        let row: String = intensity
            .iter()
            .step_by(2)
            .map(|&i| match (i / peak * 4.0) as usize {
                0 => ' ',
                1 => '.',
                2 => ':',
                3 => '+',
                _ => '#',
            })
            .collect();
        println!("{:>3.0} μs  V = {:.3}  |{row}|", t * 1e6, fit.visibility);
        if t == 30e-6 {
            let mut csv = Vec::new();
            write_pattern_csv(&mut csv, &x, &intensity)?;
            println!("         ({} CSV rows for the first pattern)", String::from_utf8_lossy(&csv).lines().count() - 1);
        }
    }
    Ok(())
}
