//! Build the return and delocalize sequences and follow where each spin
//! component of every atom ends up.
//!
//!     cargo run --example protocol

use latticegate::sequence::{final_layout, Chain, Instruction, ProtocolBuilder, PulseSequence};

fn main() -> latticegate::Result<()> {
    let chain = Chain::open(4).with_fill(vec![true, true, false, true]);
    let builder = ProtocolBuilder::new(chain, 210e-6);

    let ret = builder.returning(0.3);
    println!("return variant:\n{}", ret.to_text());
    ret.validate().expect("builder output is valid");

    let deloc = builder.delocalizing();
    println!("delocalize variant:\n{}", deloc.to_text());
    for (atom, tag) in final_layout(&deloc).tags().iter().enumerate() {
        println!("  atom {atom}: |0⟩ at {}, |1⟩ at {} (half sites), {:+} sites apart", tag.spin0, tag.spin1, tag.separation_sites());
    }

    // Sequences round-trip through their text form.
    let parsed: PulseSequence = ret.to_text().parse()?;
    assert_eq!(parsed.instructions(), ret.instructions());

    // Holding without ever shifting, and never returning, is rejected.
    let bad = PulseSequence::new(vec![Instruction::Rotate { area: 1.0, axis_phase: 0.0 }, Instruction::Hold(1e-4)], Chain::open(3));
    if let Err(violations) = bad.validate() {
        for v in violations {
            println!("invalid sequence: {v}");
        }
    }
    Ok(())
}
