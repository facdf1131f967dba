//! Iteration to a fixpoint on a cyclic CFG.
//!
//! `data/loop.ir` increments a counter through a back edge. The first
//! sweep sees the loop header with only one predecessor computed (the
//! other is still ⊤, the "not yet known" partition, which the join treats
//! as its identity); the second sweep folds the back edge in; the third
//! confirms nothing changes. A sweep cap turns a diverging analysis into
//! an error — here we demonstrate the error by capping below what the
//! loop needs.
//!
//! Run with: cargo run --example loop_fixpoint

use vphi::{lower_phis, parse_program, validate_ssa, Analysis, AnalysisError};

const SOURCE: &str = include_str!("data/loop.ir");

fn main() {
    println!("source program:\n{SOURCE}");

    let program = parse_program(SOURCE).expect("parses");
    assert!(validate_ssa(&program).is_empty());
    let lowered = lower_phis(&program);

    // Too tight a cap: the run reports non-convergence instead of looping.
    match Analysis::run_with_cap(&lowered, 2) {
        Err(AnalysisError::NonConvergence { iterations, .. }) => {
            println!("cap 2: no fixpoint within {iterations} sweeps (expected — the loop needs 3)")
        }
        other => panic!("expected non-convergence under cap 2, got {other:?}"),
    }

    // The default cap is |blocks| + 2, comfortably enough.
    let analysis = Analysis::run(&lowered).expect("converges");
    println!(
        "default cap {}: fixpoint after {} sweeps",
        lowered.blocks.len() + 2,
        analysis.iterations
    );

    // At the header, i2 merges the initial value with the incremented
    // value flowing around the back edge; they differ, so i2 sits in its
    // own class and nothing is redundant.
    let header = lowered.block_by_name("H").expect("loop header");
    let at_header = &analysis.block_in[&header.id];
    println!("partition entering the loop header: {}", at_header.render_text());
    let i2 = at_header.class_of_var("i2").expect("i2 has a class");
    assert!(!i2.vars.contains("i1"), "i2 is not the same value as i1");

    let report = analysis.detect_redundancies(&lowered);
    assert!(report.entries.is_empty());
    println!("no redundancies — the increment genuinely produces new values");
}
