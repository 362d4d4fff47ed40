//! Simulation of collisional entanglement of neutral atoms in a
//! spin-dependent optical lattice.
//!
//! * [`physics`]: lattice formulas and the hold-time → phase calibration.
//! * [`sequence`]: the pulse/shift/hold protocols and their validation.
//! * [`statevec`]: exact state-vector engine and entanglement diagnostics.
//! * [`noise`]: vacancies, pulse-area errors, dephasing, loss; ensembles.
//! * [`analysis`]: Ramsey fringes, fits, visibility curves, interference patterns.
//! * [`clifford`]: stabilizer engine for cluster states on large lattices.
//! * [`percolation`]: defect-limited cluster sizes and the site-percolation threshold.
//! * [`cli`]: config-driven runner used by the `latticegate` binary.

pub mod analysis;
pub mod cli;
pub mod clifford;
pub mod error;
pub mod lattice;
pub mod noise;
pub mod percolation;
pub mod physics;
pub mod rng;
pub mod sequence;
pub mod statevec;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
