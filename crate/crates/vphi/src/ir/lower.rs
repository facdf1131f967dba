//! Phi lowering: rewrite `x = phi(a, b)` into copies in the predecessors.

use super::{Program, Rhs, Statement};

/// Replaces every `x = phi(a, b)` in a join block with `x = a` appended to
/// the first predecessor and `x = b` appended to the second. The relative
/// order of multiple phis is preserved in both predecessors, and each copy
/// is tagged with [`Statement::phi_copy`]. Programs without phis come back
/// unchanged, so the rewrite is idempotent.
///
/// Expects a program with an empty [`super::validate_ssa`] report. Note
/// that a join fed directly by `entry` receives its copies in `entry`;
/// the analysis accepts that, and validation exempts lowered copies from
/// the empty-boundary rule.
pub fn lower_phis(p: &Program) -> Program {
    let mut out = p.clone();
    for bi in 0..out.blocks.len() {
        let phis: Vec<Statement> = out.blocks[bi]
            .stmts
            .iter()
            .filter(|s| matches!(s.rhs, Rhs::Phi { .. }))
            .cloned()
            .collect();
        if phis.is_empty() {
            continue;
        }
        out.blocks[bi].stmts.retain(|s| !matches!(s.rhs, Rhs::Phi { .. }));
        let preds = out.blocks[bi].preds.clone();
        for phi in phis {
            let Rhs::Phi { left, right } = phi.rhs else { unreachable!() };
            for (pred, source) in preds.iter().zip([left, right]) {
                let id = out.fresh_stmt_id();
                out.blocks[pred.0 as usize].stmts.push(Statement {
                    id,
                    target: phi.target.clone(),
                    rhs: Rhs::Var(source),
                    phi_copy: true,
                });
            }
        }
    }
    out
}
