//! Render a program's CFG as Graphviz, marking redundant statements.
//!
//! Pipe the output into dot, e.g.:
//!   cargo run --example emit_dot | dot -Tsvg > diamond.svg
//!
//! Run with: cargo run --example emit_dot

use vphi::cli::render_dot;
use vphi::{lower_phis, parse_program, validate_ssa, Analysis};

const SOURCE: &str = include_str!("data/diamond.ir");

fn main() {
    let program = parse_program(SOURCE).expect("parses");
    assert!(validate_ssa(&program).is_empty());
    let lowered = lower_phis(&program);
    let analysis = Analysis::run(&lowered).expect("converges");
    let report = analysis.detect_redundancies(&lowered);

    // The graph shows the source program (phis intact); the statement the
    // analysis proved redundant carries a [REDUNDANT] marker.
    print!("{}", render_dot(&program, &report));
}
