//! Site percolation on the simple-cubic lattice: spanning probability
//! around the threshold and a bisection estimate of p_c.
//!
//!     cargo run --release --example percolation

use latticegate::lattice::Dims;
use latticegate::percolation::{cluster_size_stats, estimate_threshold};

fn main() -> latticegate::Result<()> {
    let dims = Dims::cube(3, 32)?;
    println!("    p  spanning  giant fraction  mean size");
    for p in [0.25, 0.29, 0.31, 0.33, 0.40, 0.60] {
        let s = cluster_size_stats(dims, p, 200, 1)?;
        println!("{p:.2}  {:>8.3}  {:>14.3}  {:>9.1}", s.spanning_prob, s.giant_fraction, s.mean_size);
    }
    let est = estimate_threshold(3, 32, 200, 0.005, 42)?;
    println!("p_c ≈ {:.4} ± {:.4} from {} evaluations", est.p_c, est.stderr, est.evaluations.len());
    Ok(())
}
