//! Regenerate the data behind every figure from the bundled recipes,
//! writing CSVs and JSON sidecars into a directory.
//!
//!     cargo run --release --example figures -- out/

use std::path::PathBuf;

use latticegate::cli::{recipes, run_figure_recipes};

fn main() -> latticegate::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("figures"));
    for (name, text) in recipes::sources() {
        println!("recipe {name}: {} lines", text.lines().count());
    }
    let artifacts = run_figure_recipes(&out, None)?;
    for line in &artifacts.summary {
        println!("{line}");
    }
    println!("{} files in {}", artifacts.files.len(), out.display());
    Ok(())
}
