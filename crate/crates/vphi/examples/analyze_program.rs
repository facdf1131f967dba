//! End-to-end analysis of one program: parse, validate, lower the phis,
//! run the data-flow analysis to a fixpoint, and report redundancies.
//!
//! Run with: cargo run --example analyze_program

use vphi::analysis::Reason;
use vphi::partition::Renumberer;
use vphi::{lower_phis, parse_program, validate_ssa, Analysis};

const SOURCE: &str = include_str!("data/diamond.ir");

fn main() {
    println!("source program:\n{SOURCE}");

    let program = parse_program(SOURCE).expect("parses");
    let violations = validate_ssa(&program);
    assert!(violations.is_empty(), "valid SSA: {violations}");

    // Phis become copies at the end of each predecessor, so the analysis
    // itself never sees a phi.
    let lowered = lower_phis(&program);
    println!("after phi lowering:\n{}", lowered.render());

    let analysis = Analysis::run(&lowered).expect("converges");
    println!(
        "converged in {} sweeps (cap {}), deepest merge derivation {}",
        analysis.iterations,
        lowered.blocks.len() + 2,
        analysis.max_merge_depth
    );

    // Value numbers are arbitrary internal names; renumber them densely in
    // reading order — report witnesses first, then the partitions — so the
    // whole dump uses one coherent numbering.
    let mut report = analysis.detect_redundancies(&lowered);
    let mut ren = Renumberer::new();
    for entry in &mut report.entries {
        if let Reason::ValuePhi { vpf } = &mut entry.reason {
            ren.rewrite_standalone_vpf(vpf);
        }
    }
    println!("\nredundancies:");
    for entry in &report.entries {
        println!("  {entry}");
    }
    assert_eq!(report.entries.len(), 1, "the diamond recomputes one sum at the join");

    println!("\npartitions at block boundaries:");
    for block in &lowered.blocks {
        let mut pin = analysis.block_in[&block.id].clone();
        let mut pout = analysis.block_out[&block.id].clone();
        ren.rewrite_partition(&mut pin);
        ren.rewrite_partition(&mut pout);
        println!("  {} in:  {}", block.name, pin.render_text());
        println!("  {} out: {}", block.name, pout.render_text());
    }
}
