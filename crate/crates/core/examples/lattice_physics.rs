//! Lattice parameters of the experiment and the hold-time calibration.
//!
//!     cargo run --example lattice_physics

use std::f64::consts::PI;

use latticegate::physics::{
    calibrate_affine, minima_separation, potential_pair, LatticeAxis, MASS_RB87,
};

fn main() -> latticegate::Result<()> {
    for (name, axis) in [("transverse", LatticeAxis::transverse()), ("transport", LatticeAxis::transport())] {
        let er = axis.recoil(MASS_RB87)?;
        let f = axis.trap_frequency(MASS_RB87)? / (2.0 * PI);
        println!(
            "{name:>10}: λ = {:.0} nm, Er/h = {:.2} kHz, {:.0} Er deep, ν = {:.1} kHz",
            axis.wavelength * 1e9,
            er / latticegate::physics::PLANCK / 1e3,
            axis.depth,
            f / 1e3
        );
    }

    // Rotating the polarization moves the σ± lattices apart.
    let lx = LatticeAxis::transport().wavelength;
    let k = 2.0 * PI / lx;
    for theta in [0.0, PI / 2.0, PI] {
        let (vp, vm) = potential_pair(0.0, theta, 1.0, k);
        println!(
            "θ = {:.2}π: V+(0) = {vp:.3} V0, V-(0) = {vm:.3} V0, separation {:.1} nm",
            theta / PI,
            minima_separation(theta, lx) * 1e9
        );
    }

    // Collisional phase versus hold time from the two fringe minima/maxima.
    let cal = calibrate_affine(&[(210e-6, PI), (450e-6, 2.0 * PI)])?;
    println!(
        "calibration: φ(t) = {:.4e} rad/s · t + {:.4} rad (U01/h = {:.0} Hz)",
        cal.slope,
        cal.offset,
        cal.interaction_hz()
    );
    for t in [30e-6, 210e-6, 450e-6, 690e-6] {
        println!("  t = {:>3.0} μs → φ = {:.3}π", t * 1e6, cal.phase(t) / PI);
    }
    Ok(())
}
