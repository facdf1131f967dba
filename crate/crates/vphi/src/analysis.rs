//! The global value numbering analysis.
//!
//! A forward data-flow pass over a φ-lowered SSA program. Every program
//! point carries a [`Partition`]; non-entry points start at ⊤ ("not seen
//! yet") and are refined by repeated reverse-postorder sweeps until the
//! block-out partitions stop changing.
//!
//! * [`join`] meets two predecessor partitions at a join block by
//!   intersecting every pair of classes. Members that survive under
//!   different value numbers form a fresh class annotated with a value
//!   phi-function recording which value arrives from which side.
//! * Transfer evaluates one statement: the target moves into the class
//!   holding the right-hand side's value, creating a class when the value
//!   is new. New expression classes are additionally annotated with a
//!   derived value phi-function when the expression's value can be shown
//!   to merge two values already present in the predecessors.
//! * [`Analysis::detect_redundancies`] then reads redundancy straight off
//!   the converged partitions: a binary statement is redundant iff its
//!   class holds another variable or a value phi-function witness.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{BlockId, Program, Rhs, Statement, StmtId};
use crate::partition::{
    intersect_classes, value_expr, AllocationKey, Allocator, Class, LookupError, Partition,
    RhsValue, ValuePhiFunction, VpfOperand,
};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("statement {stmt} is a phi; lower the program before analysing it")]
    PhiPresent { stmt: StmtId },
    #[error("transfer of statement {stmt} failed: {source}")]
    Transfer { stmt: StmtId, source: LookupError },
    #[error("no fixpoint after {iterations} sweeps (cap {cap})")]
    NonConvergence { iterations: usize, cap: usize },
}

/// Meet of two predecessor partitions at the join block named `block`.
///
/// ⊤ is the identity. Otherwise every pair of classes is intersected
/// member-wise (see [`intersect_classes`]); pairs sharing their value
/// number keep it, pairs with different numbers get a fresh number and a
/// `phi.block(left, right)` annotation.
pub fn join(left: &Partition, right: &Partition, block: &str, alloc: &mut Allocator) -> Partition {
    match (left, right) {
        (Partition::Top, r) => r.clone(),
        (l, Partition::Top) => l.clone(),
        (Partition::Classes(ls), Partition::Classes(rs)) => {
            let mut acc: BTreeMap<crate::partition::ValueNumber, Class> = BTreeMap::new();
            for c1 in ls {
                for c2 in rs {
                    let Some(c) = intersect_classes(c1, c2, block, alloc) else { continue };
                    match acc.entry(c.vn) {
                        std::collections::btree_map::Entry::Vacant(e) => {
                            e.insert(c);
                        }
                        std::collections::btree_map::Entry::Occupied(mut e) => {
                            // Two pairs can land on one number only when that
                            // number already flowed around a cycle into both
                            // predecessors; equal numbers mean equal values,
                            // so the memberships combine.
                            let t = e.get_mut();
                            t.vars.extend(c.vars);
                            t.consts.extend(c.consts);
                            t.exprs.extend(c.exprs);
                            if t.vpf.is_none() {
                                t.vpf = c.vpf;
                            }
                        }
                    }
                }
            }
            let p = Partition::Classes(acc.into_values().collect());
            debug_assert!(p.check_invariants().is_ok(), "{:?}", p.check_invariants());
            p
        }
    }
}

/// Key for the in-progress set guarding [`MergeDeriver`] against cycles:
/// the partition being searched (`None` is the statement's own point) and
/// the operation with its operands.
type VisitKey = (Option<BlockId>, char, VpfOperand, VpfOperand);

/// Derives a value phi-function for `op(left, right)` by walking join
/// annotations backwards through the CFG.
///
/// The derivation asks, for a candidate join block `k`: what is each
/// operand's value on `k`'s two sides? (An operand annotated at `k`
/// splits into its annotation's sides; an operand whose value is present
/// unannotated — or is a constant or input, which mean the same value
/// everywhere — is the same on both.) Then `op` over the side values is
/// resolved against the side's block-out partition: if some class there
/// computes that expression the side resolves to its value number,
/// otherwise the derivation recurses to express the side as a nested
/// merge. Cycles are cut by an in-progress set; re-entering an open query
/// fails that branch only.
struct MergeDeriver<'a> {
    program: &'a Program,
    block_out: &'a BTreeMap<BlockId, Partition>,
    alloc: &'a Allocator,
    in_progress: HashSet<VisitKey>,
    depth: usize,
    max_depth: usize,
}

impl<'a> MergeDeriver<'a> {
    fn new(
        program: &'a Program,
        block_out: &'a BTreeMap<BlockId, Partition>,
        alloc: &'a Allocator,
    ) -> Self {
        MergeDeriver {
            program,
            block_out,
            alloc,
            in_progress: HashSet::new(),
            depth: 0,
            max_depth: 0,
        }
    }

    /// Join blocks worth trying for `operand` under `part`: the block of
    /// its own annotation (for a nested phi, its merge block).
    fn candidate_blocks(&self, part: &Partition, operand: &VpfOperand, out: &mut Vec<String>) {
        let block = match operand {
            VpfOperand::Phi(p) => Some(p.block.clone()),
            VpfOperand::Number(v) => part
                .class_of_vn(*v)
                .and_then(|c| c.vpf.as_ref())
                .map(|f| f.block.clone()),
        };
        if let Some(b) = block {
            if !out.contains(&b) {
                out.push(b);
            }
        }
    }

    /// The operand's value as seen from the two sides of join block `k`,
    /// or `None` when the operand's value cannot be tracked through `k`.
    fn split(&self, part: &Partition, operand: &VpfOperand, k: &str) -> Option<(VpfOperand, VpfOperand)> {
        match operand {
            VpfOperand::Phi(p) if p.block == k => Some((p.left.clone(), p.right.clone())),
            VpfOperand::Phi(_) => None,
            VpfOperand::Number(v) => match part.class_of_vn(*v) {
                Some(c) => match &c.vpf {
                    Some(f) if f.block == k => Some((f.left.clone(), f.right.clone())),
                    // Present but not merged at k: one value on both sides.
                    _ => Some((operand.clone(), operand.clone())),
                },
                // Not tracked here; constants and inputs still denote the
                // same value on every path.
                None if self.alloc.is_global_value(*v) => Some((operand.clone(), operand.clone())),
                None => None,
            },
        }
    }

    /// Value of `op(x, y)` at the out-point of `pred`: the number of a
    /// class already computing it there, or a nested merge.
    fn resolve(&mut self, pred: BlockId, op: char, x: VpfOperand, y: VpfOperand) -> Option<VpfOperand> {
        let part = self.block_out.get(&pred)?;
        if part.is_top() {
            // Predecessor not reached yet in this sweep order; a later
            // sweep will retry with real facts.
            return None;
        }
        if let (VpfOperand::Number(l), VpfOperand::Number(r)) = (&x, &y) {
            let e = crate::partition::ValueExpression::new(op, *l, *r);
            if let Some(c) = part.class_with_expr(&e) {
                return Some(VpfOperand::Number(c.vn));
            }
        }
        let part = part.clone();
        self.derive(&part, Some(pred), op, x, y).map(|f| VpfOperand::Phi(Box::new(f)))
    }

    /// Expresses `op(left, right)` under `part` as a value phi-function,
    /// if some candidate join block lets both sides be resolved.
    fn derive(
        &mut self,
        part: &Partition,
        part_key: Option<BlockId>,
        op: char,
        left: VpfOperand,
        right: VpfOperand,
    ) -> Option<ValuePhiFunction> {
        let key: VisitKey = (part_key, op, left.clone(), right.clone());
        if !self.in_progress.insert(key.clone()) {
            return None;
        }
        self.depth += 1;
        self.max_depth = self.max_depth.max(self.depth);

        let mut candidates = Vec::new();
        self.candidate_blocks(part, &left, &mut candidates);
        self.candidate_blocks(part, &right, &mut candidates);

        let mut found = None;
        for k in candidates {
            let Some(block) = self.program.block_by_name(&k) else { continue };
            if block.preds.len() != 2 {
                continue;
            }
            let Some((ll, lr)) = self.split(part, &left, &k) else { continue };
            let Some((rl, rr)) = self.split(part, &right, &k) else { continue };
            let Some(on_left) = self.resolve(block.preds[0], op, ll, rl) else { continue };
            let Some(on_right) = self.resolve(block.preds[1], op, lr, rr) else { continue };
            found = Some(ValuePhiFunction { block: k, left: on_left, right: on_right });
            break;
        }

        self.depth -= 1;
        self.in_progress.remove(&key);
        found
    }
}

/// Why a statement is redundant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Reason {
    /// Another variable already holds the value.
    #[serde(rename = "equivalent-variable")]
    EquivalentVariable { var: String },
    /// The value is a merge of values computed on every incoming path.
    #[serde(rename = "value-phi")]
    ValuePhi { vpf: ValuePhiFunction },
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::EquivalentVariable { var } => write!(f, "equal to variable {var}"),
            Reason::ValuePhi { vpf } => write!(f, "merges already-computed values: {vpf}"),
        }
    }
}

/// One redundant binary statement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Redundancy {
    pub stmt: StmtId,
    pub block: String,
    pub target: String,
    pub expr: String,
    pub reason: Reason,
}

impl fmt::Display for Redundancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {} = {} is redundant: {}",
            self.stmt, self.block, self.target, self.expr, self.reason
        )
    }
}

/// All redundant statements of a program, in source order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub entries: Vec<Redundancy>,
}

impl RedundancyReport {
    pub fn is_redundant(&self, stmt: StmtId) -> bool {
        self.entries.iter().any(|e| e.stmt == stmt)
    }
}

/// Converged analysis state for one program.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub block_in: BTreeMap<BlockId, Partition>,
    pub block_out: BTreeMap<BlockId, Partition>,
    pub stmt_in: BTreeMap<StmtId, Partition>,
    pub stmt_out: BTreeMap<StmtId, Partition>,
    pub allocator: Allocator,
    /// Sweeps executed, including the final confirming sweep.
    pub iterations: usize,
    /// Deepest nesting reached while deriving value phi-functions.
    pub max_merge_depth: usize,
}

impl Analysis {
    /// Runs the fixpoint with the default sweep cap of `blocks + 2`.
    pub fn run(program: &Program) -> Result<Analysis, AnalysisError> {
        Self::run_with_cap(program, program.blocks.len() + 2)
    }

    /// Runs the fixpoint, failing with [`AnalysisError::NonConvergence`]
    /// if the partitions still change after `cap` sweeps.
    pub fn run_with_cap(program: &Program, cap: usize) -> Result<Analysis, AnalysisError> {
        for (_, stmt) in program.statements() {
            if matches!(stmt.rhs, Rhs::Phi { .. }) {
                return Err(AnalysisError::PhiPresent { stmt: stmt.id });
            }
        }
        let mut fx = Fixpoint::new(program);
        let rpo = program.reverse_postorder();
        let mut iterations = 0;
        loop {
            let mut changed = false;
            for &b in &rpo {
                let pin = fx.block_input(b);
                let pout = fx.transfer_block(b, &pin)?;
                fx.block_in.insert(b, pin);
                if fx.block_out.get(&b) != Some(&pout) {
                    changed = true;
                }
                fx.block_out.insert(b, pout);
            }
            iterations += 1;
            if !changed {
                break;
            }
            if iterations >= cap {
                return Err(AnalysisError::NonConvergence { iterations, cap });
            }
        }
        Ok(Analysis {
            block_in: fx.block_in,
            block_out: fx.block_out,
            stmt_in: fx.stmt_in,
            stmt_out: fx.stmt_out,
            allocator: fx.alloc,
            iterations,
            max_merge_depth: fx.max_depth,
        })
    }

    /// Reads redundancies off the converged partitions: a binary
    /// statement is redundant iff, right after it executes, its target's
    /// class holds another variable (preferred witness, lexicographically
    /// least) or carries a value phi-function.
    pub fn detect_redundancies(&self, program: &Program) -> RedundancyReport {
        let mut entries = Vec::new();
        for (block, stmt) in program.statements() {
            if !matches!(stmt.rhs, Rhs::BinOp { .. }) {
                continue;
            }
            let Some(pout) = self.stmt_out.get(&stmt.id) else { continue };
            if pout.is_top() {
                continue;
            }
            let Some(class) = pout.class_of_var(&stmt.target) else { continue };
            let witness_var = class.vars.iter().find(|v| **v != stmt.target);
            let reason = if let Some(var) = witness_var {
                Reason::EquivalentVariable { var: var.clone() }
            } else if let Some(vpf) = &class.vpf {
                Reason::ValuePhi { vpf: vpf.clone() }
            } else {
                continue;
            };
            entries.push(Redundancy {
                stmt: stmt.id,
                block: block.name.clone(),
                target: stmt.target.clone(),
                expr: stmt.rhs.to_string(),
                reason,
            });
        }
        RedundancyReport { entries }
    }

    /// Variables equivalent to `var` at the out-point of `block`.
    pub fn equivalent_at_block_out(&self, block: BlockId, var: &str) -> BTreeSet<String> {
        match self.block_out.get(&block) {
            Some(p) => p
                .class_of_var(var)
                .map(|c| c.vars.iter().filter(|v| *v != var).cloned().collect())
                .unwrap_or_default(),
            None => BTreeSet::new(),
        }
    }
}

/// Mutable sweep state.
struct Fixpoint<'p> {
    program: &'p Program,
    defined: HashSet<String>,
    alloc: Allocator,
    block_in: BTreeMap<BlockId, Partition>,
    block_out: BTreeMap<BlockId, Partition>,
    stmt_in: BTreeMap<StmtId, Partition>,
    stmt_out: BTreeMap<StmtId, Partition>,
    max_depth: usize,
}

impl<'p> Fixpoint<'p> {
    fn new(program: &'p Program) -> Self {
        Fixpoint {
            program,
            defined: program.defined_vars(),
            alloc: Allocator::new(),
            block_in: BTreeMap::new(),
            block_out: BTreeMap::new(),
            stmt_in: BTreeMap::new(),
            stmt_out: BTreeMap::new(),
            max_depth: 0,
        }
    }

    fn out_of(&self, b: BlockId) -> Partition {
        self.block_out.get(&b).cloned().unwrap_or(Partition::Top)
    }

    /// In-partition of `b` for the current sweep: empty at entry, the
    /// predecessor's out through a straight edge, the join of both outs
    /// at a join block.
    fn block_input(&mut self, b: BlockId) -> Partition {
        if b == self.program.entry {
            return Partition::empty();
        }
        let block = self.program.block(b);
        match block.preds.as_slice() {
            [p] => self.out_of(*p),
            [l, r] => {
                let (lo, ro) = (self.out_of(*l), self.out_of(*r));
                join(&lo, &ro, &block.name, &mut self.alloc)
            }
            // Validation guarantees only the entry block has no
            // predecessors and none has more than two.
            other => panic!("block {} has {} predecessors", block.name, other.len()),
        }
    }

    fn transfer_block(&mut self, b: BlockId, pin: &Partition) -> Result<Partition, AnalysisError> {
        let block = self.program.block(b);
        let mut p = pin.clone();
        for stmt in &block.stmts {
            self.stmt_in.insert(stmt.id, p.clone());
            if !p.is_top() {
                p = self.transfer_statement(stmt, p)?;
            }
            self.stmt_out.insert(stmt.id, p.clone());
        }
        Ok(p)
    }

    /// One statement's transfer. Order matters: evaluate the right-hand
    /// side under the incoming partition (possibly adding constant/input
    /// classes), drop the target from its old class, then file the target
    /// under the right-hand side's value.
    fn transfer_statement(&mut self, stmt: &Statement, mut p: Partition) -> Result<Partition, AnalysisError> {
        let rv = value_expr(&stmt.rhs, &mut p, &mut self.alloc, &self.defined)
            .map_err(|source| AnalysisError::Transfer { stmt: stmt.id, source })?;

        // A copy like the lowered `x = x` around a loop drops its own
        // class below; remember the annotation so it survives.
        let kept_vpf = match &rv {
            RhsValue::Number(v) => p.class_of_vn(*v).and_then(|c| c.vpf.clone()),
            RhsValue::Expr(_) => None,
        };
        p.remove_var(&stmt.target);

        match rv {
            RhsValue::Number(v) => {
                let inserted = p.update_class(v, |c| {
                    c.vars.insert(stmt.target.clone());
                });
                if !inserted {
                    let mut c = Class::new(v).with_var(stmt.target.clone());
                    c.vpf = kept_vpf;
                    p.push_class(c);
                }
            }
            RhsValue::Expr(ve) => {
                let vpf = {
                    let mut d = MergeDeriver::new(self.program, &self.block_out, &self.alloc);
                    let got = d.derive(&p, None, ve.op, ve.left.into(), ve.right.into());
                    self.max_depth = self.max_depth.max(d.max_depth);
                    got
                };
                if let Some(vn) = p.class_with_expr(&ve).map(|c| c.vn) {
                    // The value was computed before; join the class.
                    p.update_class(vn, |c| {
                        c.vars.insert(stmt.target.clone());
                    });
                } else if let Some(vn) =
                    vpf.as_ref().and_then(|f| p.class_with_vpf(f)).map(|c| c.vn)
                {
                    // Same merge value as an existing annotated class.
                    p.update_class(vn, |c| {
                        c.vars.insert(stmt.target.clone());
                        c.exprs.insert(ve);
                    });
                } else {
                    let vn = self.alloc.number(AllocationKey::Def(stmt.target.clone()));
                    // A class numbered for this target in an earlier sweep
                    // can survive into the incoming partition through a
                    // cycle; it describes the previous iteration's value,
                    // so retire it before reusing the number.
                    p.remove_class(vn);
                    let mut c = Class::new(vn).with_var(stmt.target.clone()).with_expr(ve);
                    c.vpf = vpf;
                    p.push_class(c);
                }
            }
        }
        debug_assert!(p.check_invariants().is_ok(), "after {}: {:?}", stmt, p.check_invariants());
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{DIAMOND, DIAMOND_MUL, LOOP, STRAIGHTLINE, TWO_JOINS};
    use crate::ir::{lower_phis, parse_program};
    use crate::partition::tests::worked_join_inputs;
    use crate::partition::ValueNumber;

    fn analyse(src: &str) -> (Program, Analysis) {
        let program = lower_phis(&parse_program(src).unwrap());
        let analysis = Analysis::run(&program).unwrap();
        (program, analysis)
    }

    fn out_of<'a>(p: &Program, a: &'a Analysis, name: &str) -> &'a Partition {
        &a.block_out[&p.block_by_name(name).unwrap().id]
    }

    fn in_of<'a>(p: &Program, a: &'a Analysis, name: &str) -> &'a Partition {
        &a.block_in[&p.block_by_name(name).unwrap().id]
    }

    #[test]
    fn join_of_worked_example_merges_exactly_the_three_pairs() {
        let (mut alloc, p1, p2) = worked_join_inputs();
        let j = join(&p1, &p2, "B3", &mut alloc);
        assert_eq!(j.classes().len(), 3);
        for (var, l, r) in [("x3", "x1", "x2"), ("y3", "y1", "y2"), ("z3", "z1", "z2")] {
            let c = j.class_of_var(var).expect(var);
            assert_eq!(c.vars.iter().map(|s| s.as_str()).collect::<Vec<_>>(), [var]);
            assert!(c.consts.is_empty() && c.exprs.is_empty());
            let vl = p1.class_of_var(l).unwrap().vn;
            let vr = p2.class_of_var(r).unwrap().vn;
            assert_eq!(c.vpf, Some(ValuePhiFunction::new("B3", vl, vr)));
            assert!(c.vn != vl && c.vn != vr, "merged pair gets a fresh number");
        }
    }

    #[test]
    fn join_with_top_is_identity_and_join_is_idempotent() {
        let (mut alloc, p1, _) = worked_join_inputs();
        assert_eq!(join(&Partition::Top, &p1, "J", &mut alloc), p1);
        assert_eq!(join(&p1, &Partition::Top, "J", &mut alloc), p1);
        assert!(join(&Partition::Top, &Partition::Top, "J", &mut alloc).is_top());
        // Same partition on both sides: every pair either keeps its class
        // (same number) or is disjoint, so the join is exact identity.
        assert_eq!(join(&p1, &p1, "J", &mut alloc), p1);
    }

    #[test]
    fn join_commutes_up_to_fresh_numbers_and_swapped_annotations() {
        let (mut alloc, p1, p2) = worked_join_inputs();
        let a = join(&p1, &p2, "B3", &mut alloc);
        let b = join(&p2, &p1, "B3", &mut alloc);
        assert_eq!(a.classes().len(), b.classes().len());
        for ca in a.classes() {
            let var = ca.vars.iter().next().unwrap();
            let cb = b.class_of_var(var).unwrap();
            assert_eq!(ca.vars, cb.vars);
            assert_eq!(ca.consts, cb.consts);
            assert_eq!(ca.exprs, cb.exprs);
            assert_eq!(ca.vpf.as_ref().map(|f| f.swapped()), cb.vpf);
            assert_ne!(ca.vn, cb.vn, "operand order is part of the merge identity");
        }
    }

    #[test]
    fn diamond_branch_transfer_builds_expression_classes() {
        let (p, a) = analyse(DIAMOND);
        let b1 = out_of(&p, &a, "B1");
        // x3 was copied from x1, so they share a class; p1 carries the sum.
        assert!(b1.same_class("x1", "x3"));
        assert!(b1.same_class("y1", "y3"));
        let c = b1.class_of_var("p1").unwrap();
        let vx = b1.class_of_var("x1").unwrap().vn;
        let vy = b1.class_of_var("y1").unwrap().vn;
        assert_eq!(c.exprs.iter().collect::<Vec<_>>(), [&crate::partition::ValueExpression::new('+', vx, vy)]);
        assert!(c.vpf.is_none(), "no join above B1");
    }

    #[test]
    fn diamond_join_annotates_phi_targets_and_derives_the_sum_merge() {
        let (p, a) = analyse(DIAMOND);
        let b1 = out_of(&p, &a, "B1");
        let b2 = out_of(&p, &a, "B2");
        let b3in = in_of(&p, &a, "B3");

        let x3 = b3in.class_of_var("x3").unwrap();
        let expected_x = ValuePhiFunction::new(
            "B3",
            b1.class_of_var("x3").unwrap().vn,
            b2.class_of_var("x3").unwrap().vn,
        );
        assert_eq!(x3.vpf, Some(expected_x));
        assert!(b3in.class_of_var("y3").unwrap().vpf.is_some());
        assert!(b3in.class_of_var("p1").is_none(), "p1 exists on one path only");

        // w3 = x3 + y3 resolves to the values p1 and q2 computed on the
        // two branches.
        let w3 = out_of(&p, &a, "B3").class_of_var("w3").unwrap();
        let vp1 = b1.class_of_var("p1").unwrap().vn;
        let vq2 = b2.class_of_var("q2").unwrap().vn;
        assert_eq!(w3.vpf, Some(ValuePhiFunction::new("B3", vp1, vq2)));
        assert_eq!(a.iterations, 2, "acyclic: one working sweep plus confirmation");
        assert_eq!(a.max_merge_depth, 1);
    }

    #[test]
    fn diamond_redundancy_is_reported_with_a_value_phi_witness() {
        let (p, a) = analyse(DIAMOND);
        let report = a.detect_redundancies(&p);
        assert_eq!(report.entries.len(), 1);
        let r = &report.entries[0];
        assert_eq!((r.target.as_str(), r.block.as_str(), r.expr.as_str()), ("w3", "B3", "x3 + y3"));
        assert!(matches!(&r.reason, Reason::ValuePhi { vpf } if vpf.block == "B3"));
    }

    #[test]
    fn mutated_diamond_with_a_star_branch_is_not_redundant() {
        let (p, a) = analyse(DIAMOND_MUL);
        let report = a.detect_redundancies(&p);
        assert!(report.entries.is_empty(), "{:?}", report.entries);
        let w3 = out_of(&p, &a, "B3").class_of_var("w3").unwrap();
        assert!(w3.vpf.is_none(), "the * branch never computed x2 + y2");
    }

    #[test]
    fn straightline_recomputation_names_the_equivalent_variable() {
        let (p, a) = analyse(STRAIGHTLINE);
        let report = a.detect_redundancies(&p);
        assert_eq!(report.entries.len(), 1);
        let r = &report.entries[0];
        assert_eq!(r.target, "d1");
        assert_eq!(r.reason, Reason::EquivalentVariable { var: "e1".into() });
        // e1 computed it first and f1 feeds on fresh values: not redundant.
        assert!(!report.is_redundant(p.statements().next().unwrap().1.id));
    }

    #[test]
    fn loop_converges_with_an_annotated_induction_variable() {
        let (p, a) = analyse(LOOP);
        assert_eq!(a.iterations, 3, "one extra sweep to stabilise the back edge");
        let h_in = in_of(&p, &a, "H");
        let i2 = h_in.class_of_var("i2").unwrap();
        let vpf = i2.vpf.as_ref().expect("i2 merges the init and the increment");
        assert_eq!(vpf.block, "H");
        // i2's merge joins i1 (entry side) with the class holding i3.
        let entry_out = out_of(&p, &a, "entry");
        let l_out = out_of(&p, &a, "L");
        assert_eq!(vpf.left, VpfOperand::Number(entry_out.class_of_var("i1").unwrap().vn));
        assert_eq!(vpf.right, VpfOperand::Number(l_out.class_of_var("i3").unwrap().vn));
        // After the latch copy i2 = i3 they agree.
        assert!(l_out.same_class("i2", "i3"));
        // The increment is genuinely new each iteration.
        assert!(a.detect_redundancies(&p).entries.is_empty());
    }

    #[test]
    fn nested_joins_derive_a_nested_value_phi() {
        let (p, a) = analyse(TWO_JOINS);
        let report = a.detect_redundancies(&p);
        assert_eq!(report.entries.len(), 1);
        let r = &report.entries[0];
        assert_eq!(r.target, "w");
        let Reason::ValuePhi { vpf } = &r.reason else { panic!("expected a merge witness") };
        assert_eq!(vpf.block, "J2");
        // Left side: the value of g + h along C, itself a merge at J1 of
        // the sums p1 and p2; right side: q's number from D.
        let VpfOperand::Phi(inner) = &vpf.left else { panic!("expected a nested merge") };
        assert_eq!(inner.block, "J1");
        let b1 = out_of(&p, &a, "B1");
        let b2 = out_of(&p, &a, "B2");
        let d = out_of(&p, &a, "D");
        assert_eq!(inner.left, VpfOperand::Number(b1.class_of_var("p1").unwrap().vn));
        assert_eq!(inner.right, VpfOperand::Number(b2.class_of_var("p2").unwrap().vn));
        assert_eq!(vpf.right, VpfOperand::Number(d.class_of_var("q").unwrap().vn));
        assert_eq!(a.max_merge_depth, 2, "one nested derivation below the top-level one");
    }

    #[test]
    fn sweep_cap_reports_nonconvergence() {
        let program = lower_phis(&parse_program(LOOP).unwrap());
        let err = Analysis::run_with_cap(&program, 2).unwrap_err();
        assert_eq!(err, AnalysisError::NonConvergence { iterations: 2, cap: 2 });
    }

    #[test]
    fn phi_statements_are_rejected_before_lowering() {
        let program = parse_program(DIAMOND).unwrap();
        let err = Analysis::run(&program).unwrap_err();
        assert!(matches!(err, AnalysisError::PhiPresent { .. }));
    }

    #[test]
    fn reports_serialize_with_tagged_reasons() {
        let (p, a) = analyse(DIAMOND);
        let report = a.detect_redundancies(&p);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"kind\":\"value-phi\""), "{json}");
        let back: RedundancyReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);

        let (p, a) = analyse(STRAIGHTLINE);
        let json = serde_json::to_string(&a.detect_redundancies(&p)).unwrap();
        assert!(json.contains("\"kind\":\"equivalent-variable\""), "{json}");
        assert!(json.contains("\"var\":\"e1\""), "{json}");
    }

    #[test]
    fn all_converged_partitions_satisfy_the_invariants() {
        for src in [DIAMOND, DIAMOND_MUL, LOOP, STRAIGHTLINE, TWO_JOINS] {
            let (_, a) = analyse(src);
            for p in a.block_in.values().chain(a.block_out.values()) {
                assert!(p.check_invariants().is_ok(), "{:?}", p.check_invariants());
            }
            for p in a.stmt_in.values().chain(a.stmt_out.values()) {
                assert!(p.check_invariants().is_ok(), "{:?}", p.check_invariants());
            }
        }
    }

    #[test]
    fn rerun_is_deterministic() {
        for src in [DIAMOND, LOOP, TWO_JOINS] {
            let (p, a) = analyse(src);
            let (_, b) = analyse(src);
            assert_eq!(a.block_out, b.block_out);
            assert_eq!(
                serde_json::to_string(&a.detect_redundancies(&p)).unwrap(),
                serde_json::to_string(&b.detect_redundancies(&p)).unwrap()
            );
        }
    }

    #[test]
    fn value_numbers_are_never_reused_across_keys() {
        let (_, a) = analyse(TWO_JOINS);
        let n = a.allocator.len();
        let mut seen = std::collections::HashSet::new();
        for i in 0..n {
            let v = ValueNumber(i as u32);
            assert!(seen.insert(format!("{:?}", a.allocator.key_of(v).unwrap())));
        }
    }
}
