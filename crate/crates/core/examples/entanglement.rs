//! Exact state-vector runs: Bell pair, GHZ state and cluster-state stabilizers.
//!
//!     cargo run --example entanglement

use std::f64::consts::PI;

use latticegate::physics::CalibrationModel;
use latticegate::sequence::{build_entangling_sequence, build_return_sequence, Chain};
use latticegate::statevec::{entanglement_entropy, populations_one, reduced_density, run, stabilizer_check};

fn main() -> latticegate::Result<()> {
    // Hold times are phases directly under the unit calibration.
    let cal = CalibrationModel::unit();

    println!("two atoms, final state at α = 0:");
    for phi in [0.0, PI / 2.0, PI] {
        let s = run(&build_return_sequence(&Chain::open(2), phi, 0.0), &cal)?;
        let amps: Vec<String> = s.amplitudes().iter().map(|a| format!("{:+.3}{:+.3}i", a.re, a.im)).collect();
        println!("  φ = {:.2}π: [{}]", phi / PI, amps.join(", "));
    }

    println!("φ = π, P(|1⟩) per atom for several readout phases α:");
    for alpha in [0.0, 0.7, 2.0] {
        let s = run(&build_return_sequence(&Chain::open(2), PI, alpha), &cal)?;
        println!("  α = {alpha:.1}: {:?}", populations_one(&s));
    }

    let ghz = run(&build_entangling_sequence(&Chain::open(3), PI), &cal)?;
    for q in 0..3 {
        let rho = reduced_density(&ghz, &[q])?;
        println!("three atoms, atom {q}: purity {:.3}, entropy {:.3} bit", rho.purity(), entanglement_entropy(&ghz, &[q])?);
    }

    let ring = run(&build_entangling_sequence(&Chain::ring(8), PI), &cal)?;
    println!("ring of 8, half-ring entropy {:.3} bits", entanglement_entropy(&ring, &[0, 1, 2, 3])?);
    let k = stabilizer_check(&ring);
    println!("graph-state generators after local correction: {k:.3?}");

    let half = run(&build_entangling_sequence(&Chain::ring(8), PI / 2.0), &cal)?;
    println!("same at φ = π/2: {:.3?}", stabilizer_check(&half));
    Ok(())
}
