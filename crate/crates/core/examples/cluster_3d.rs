//! Stabilizer simulation of three-axis cluster generation on a large cubic
//! lattice, with and without vacancies.
//!
//!     cargo run --release --example cluster_3d

use std::time::Instant;

use latticegate::clifford::{component_sizes, generate_cluster, verify_generators, SiteLattice};
use latticegate::lattice::{Axis, Dims};
use latticegate::noise::sample_vacancies;

fn main() -> latticegate::Result<()> {
    let dims = Dims::cube(3, 50)?;
    let start = Instant::now();
    let full = SiteLattice::full(dims);
    let (tableau, graph) = generate_cluster(&full, &Axis::ALL)?;
    println!(
        "50³ lattice: {} qubits, {} bonds, verified = {}, {:.2} s",
        tableau.n(),
        graph.edge_count(),
        verify_generators(&tableau, &full, &Axis::ALL)?,
        start.elapsed().as_secs_f64()
    );

    // One operational step per axis: sizes after each.
    let lattice = SiteLattice::with_occupancy(dims, sample_vacancies(dims.sites(), 0.5, 8)?)?;
    for axes in [&[Axis::X][..], &[Axis::X, Axis::Y], &Axis::ALL] {
        let (_, g) = generate_cluster(&lattice, axes)?;
        let sizes = component_sizes(&g);
        println!(
            "p_fill 0.5, axes {axes:?}: {} clusters, largest {} of {} atoms",
            sizes.len(),
            sizes[0],
            lattice.occupied()
        );
    }

    let small = SiteLattice::full(Dims::new(3, 2, 1)?);
    let (t, _) = generate_cluster(&small, &[Axis::X, Axis::Y])?;
    println!("3×2 cluster generators:\n{}", t.dump()?);
    Ok(())
}
