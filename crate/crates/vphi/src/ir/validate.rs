//! Structural and SSA validation.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use super::{BlockId, Operand, Program, Rhs, StmtId};

/// Where a violation was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Block(BlockId),
    Stmt(StmtId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// A variable has more than one definition.
    DoubleAssignment,
    /// A defined variable is used on some entry-to-use path that does not
    /// pass its definition first.
    UseBeforeDef,
    /// `phi` in a block that does not have exactly two predecessors.
    PhiOutsideJoin,
    /// `phi` after a non-phi statement in the same block.
    PhiNotAtTop,
    /// More than two predecessors.
    TooManyPreds,
    /// The same block listed twice in one `preds:` clause.
    DuplicatePreds,
    /// Statements in `entry` or `exit`.
    NonEmptyBoundary,
    /// Block unreachable from `entry`.
    Unreachable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub site: Site,
    pub kind: ViolationKind,
    pub message: String,
}

/// All violations found in a program. Empty iff the program is well-formed
/// SSA: single assignment, definitions cover every use path, phis only at
/// the top of two-predecessor blocks, empty boundary blocks, and every
/// block reachable from `entry`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}", v.message)?;
        }
        Ok(())
    }
}

/// Validates `p`. Copies introduced by [`super::lower_phis`] are exempt
/// from the empty-boundary rule, and the two copies lowered from one phi
/// count as a single definition, so lowering a valid program yields a
/// program that still validates.
pub fn validate_ssa(p: &Program) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |site: Site, kind: ViolationKind, message: String| {
        report.violations.push(Violation { site, kind, message });
    };

    // Structure: predecessor counts, boundary blocks, reachability.
    for b in &p.blocks {
        if b.preds.len() > 2 {
            push(
                Site::Block(b.id),
                ViolationKind::TooManyPreds,
                format!("block {}: {} predecessors, at most 2 allowed", b.name, b.preds.len()),
            );
        }
        let distinct: HashSet<_> = b.preds.iter().collect();
        if distinct.len() != b.preds.len() {
            push(
                Site::Block(b.id),
                ViolationKind::DuplicatePreds,
                format!("block {}: duplicate predecessor", b.name),
            );
        }
        if b.id == p.entry || b.id == p.exit {
            for s in &b.stmts {
                if !s.phi_copy {
                    push(
                        Site::Stmt(s.id),
                        ViolationKind::NonEmptyBoundary,
                        format!("block {} must be empty but contains `{s}`", b.name),
                    );
                }
            }
        }
    }
    let reachable = reachable_from_entry(p);
    for b in &p.blocks {
        if b.id != p.entry && !reachable.contains(&b.id) {
            push(
                Site::Block(b.id),
                ViolationKind::Unreachable,
                format!("block {} is unreachable from entry", b.name),
            );
        }
    }

    // Single assignment. The two copies lowered from one phi are a single
    // logical definition when they sit in two different blocks.
    let mut defs: HashMap<&str, Vec<(StmtId, bool, BlockId)>> = HashMap::new();
    for (b, s) in p.statements() {
        defs.entry(&s.target).or_default().push((s.id, s.phi_copy, b.id));
    }
    for (var, sites) in {
        let mut v: Vec<_> = defs.iter().collect();
        v.sort_by_key(|(_, sites)| sites[0].0);
        v
    } {
        let ok = match sites.as_slice() {
            [_] => true,
            [(_, true, b1), (_, true, b2)] => b1 != b2,
            _ => false,
        };
        if !ok {
            for (id, _, _) in &sites[1..] {
                push(
                    Site::Stmt(*id),
                    ViolationKind::DoubleAssignment,
                    format!("variable {var} is assigned more than once"),
                );
            }
        }
    }

    // Phi placement.
    for b in &p.blocks {
        let mut seen_non_phi = false;
        for s in &b.stmts {
            if let Rhs::Phi { .. } = s.rhs {
                if b.preds.len() != 2 {
                    push(
                        Site::Stmt(s.id),
                        ViolationKind::PhiOutsideJoin,
                        format!(
                            "`{s}` in block {} with {} predecessors, phis need exactly 2",
                            b.name,
                            b.preds.len()
                        ),
                    );
                }
                if seen_non_phi {
                    push(
                        Site::Stmt(s.id),
                        ViolationKind::PhiNotAtTop,
                        format!("`{s}` appears after a non-phi statement in block {}", b.name),
                    );
                }
            } else {
                seen_non_phi = true;
            }
        }
    }

    // Definition coverage: a use of a defined variable needs the definition
    // on every entry-to-use path. Must-defined sets via a forward fixpoint;
    // unreachable blocks are skipped (already reported above).
    let defined = p.defined_vars();
    let universe: BTreeSet<String> = defined.iter().cloned().collect();
    let order = p.reverse_postorder();
    let mut out: HashMap<BlockId, BTreeSet<String>> =
        p.blocks.iter().map(|b| (b.id, universe.clone())).collect();
    loop {
        let mut changed = false;
        for &bid in &order {
            let b = p.block(bid);
            let mut cur = block_in(p, bid, &out, &universe);
            for s in &b.stmts {
                cur.insert(s.target.clone());
            }
            if out[&bid] != cur {
                out.insert(bid, cur);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for &bid in &order {
        let b = p.block(bid);
        let mut cur = block_in(p, bid, &out, &universe);
        for s in &b.stmts {
            let mut check = |var: &str, from: Option<BlockId>| {
                if !defined.contains(var) {
                    return; // program input
                }
                let covered = match from {
                    None => cur.contains(var),
                    Some(pred) => out[&pred].contains(var),
                };
                if !covered {
                    push(
                        Site::Stmt(s.id),
                        ViolationKind::UseBeforeDef,
                        format!("`{s}`: {var} may be used before it is defined"),
                    );
                }
            };
            match &s.rhs {
                Rhs::Const(_) => {}
                Rhs::Var(v) => check(v, None),
                Rhs::BinOp { left, right, .. } => {
                    for o in [left, right] {
                        if let Operand::Var(v) = o {
                            check(v, None);
                        }
                    }
                }
                Rhs::Phi { left, right } => {
                    // Each operand flows in along one edge and must be
                    // defined at the end of that predecessor.
                    if b.preds.len() == 2 {
                        check(left, Some(b.preds[0]));
                        check(right, Some(b.preds[1]));
                    }
                }
            }
            cur.insert(s.target.clone());
        }
    }

    report
}

fn block_in(
    p: &Program,
    bid: BlockId,
    out: &HashMap<BlockId, BTreeSet<String>>,
    universe: &BTreeSet<String>,
) -> BTreeSet<String> {
    if bid == p.entry {
        return BTreeSet::new();
    }
    let b = p.block(bid);
    let mut sets = b.preds.iter().map(|pr| &out[pr]);
    match sets.next() {
        None => BTreeSet::new(),
        Some(first) => {
            let mut acc = first.clone();
            for s in sets {
                acc = acc.intersection(s).cloned().collect();
            }
            let _ = universe;
            acc
        }
    }
}

fn reachable_from_entry(p: &Program) -> HashSet<BlockId> {
    let mut seen = HashSet::new();
    let mut stack = vec![p.entry];
    seen.insert(p.entry);
    while let Some(b) = stack.pop() {
        for s in p.successors(b) {
            if seen.insert(s) {
                stack.push(s);
            }
        }
    }
    seen
}
