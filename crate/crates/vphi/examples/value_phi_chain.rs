//! A redundancy whose witness nests one value phi-function inside
//! another: the value reaching the second join was itself merged at the
//! first join on one side.
//!
//! In `data/two_joins.ir`, both B1 and B2 compute a sum, J1 merges them,
//! D computes another sum, and J2 merges J1's path with D's. The final
//! `w = g + h` recomputes, on every path, a value that is already
//! available — but naming that value takes a *chain*:
//! phi.J2(phi.J1(p1, p2), q).
//!
//! Run with: cargo run --example value_phi_chain

use vphi::analysis::Reason;
use vphi::{lower_phis, parse_program, validate_ssa, Analysis};

const SOURCE: &str = include_str!("data/two_joins.ir");

fn main() {
    println!("source program:\n{SOURCE}");

    let program = parse_program(SOURCE).expect("parses");
    assert!(validate_ssa(&program).is_empty());
    let lowered = lower_phis(&program);
    let analysis = Analysis::run(&lowered).expect("converges");

    let report = analysis.detect_redundancies(&lowered);
    assert_eq!(report.entries.len(), 1, "only the final sum is redundant");

    for entry in &report.entries {
        println!("{entry}");
        if entry.target == "w" {
            let Reason::ValuePhi { vpf } = &entry.reason else {
                panic!("w's witness is a value phi-function");
            };
            println!("  -> witness nests {} level(s): {vpf}", depth(vpf) - 1);
            assert_eq!(depth(vpf), 2, "one value phi-function inside another");
        }
    }
    println!(
        "deepest merge derivation during the run: {}",
        analysis.max_merge_depth
    );
    assert_eq!(analysis.max_merge_depth, 2);
}

fn depth(vpf: &vphi::ValuePhiFunction) -> usize {
    use vphi::partition::VpfOperand;
    let of = |op: &VpfOperand| match op {
        VpfOperand::Number(_) => 0,
        VpfOperand::Phi(p) => depth(p),
    };
    1 + of(&vpf.left).max(of(&vpf.right))
}
