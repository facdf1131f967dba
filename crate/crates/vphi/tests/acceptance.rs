//! Acceptance criteria for the analysis, one test per criterion.
//!
//! Each test prints a single `PASS criterion N` line on success so a full
//! run reads as a checklist. Golden comparisons that involve internal
//! value numbers go through an explicit isomorphism check (a bijection on
//! value numbers that preserves class structure, expressions, and
//! annotations) so they do not depend on allocation order.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use vphi::analysis::{join, Analysis, Reason};
use vphi::generator::{diamond_stress_program, random_acyclic_program, random_loop_program};
use vphi::ir::{lower_phis, parse_program, validate_ssa, Program};
use vphi::oracle::{
    differential_check, oracle_equivalent, oracle_redundant, CheckMode, DEFAULT_PATH_CAP,
};
use vphi::partition::{
    AllocationKey, Allocator, Class, Partition, ValueExpression, ValueNumber, ValuePhiFunction,
    VpfOperand,
};

const DIAMOND: &str = include_str!("../examples/data/diamond.ir");
const DIAMOND_MUL: &str = include_str!("../examples/data/diamond_mul.ir");
const LOOP: &str = include_str!("../examples/data/loop.ir");
const STRAIGHTLINE: &str = include_str!("../examples/data/straightline.ir");
const TWO_JOINS: &str = include_str!("../examples/data/two_joins.ir");
const EMPTY: &str = include_str!("../examples/data/empty.ir");

fn parsed(src: &str) -> Program {
    let p = parse_program(src).expect("fixture parses");
    assert!(validate_ssa(&p).is_empty(), "fixture validates");
    p
}

fn analyzed(src: &str) -> (Program, Analysis) {
    let lowered = lower_phis(&parsed(src));
    let analysis = Analysis::run(&lowered).expect("fixture converges");
    (lowered, analysis)
}

fn vn_of(p: &Partition, var: &str) -> ValueNumber {
    p.class_of_var(var).unwrap_or_else(|| panic!("{var} has a class")).vn
}

// ---------------------------------------------------------------------
// Value-number isomorphism between partitions.
// ---------------------------------------------------------------------

#[derive(Clone, Default)]
struct VnBijection {
    fwd: BTreeMap<u32, u32>,
    rev: BTreeMap<u32, u32>,
}

impl VnBijection {
    fn bind(&mut self, a: ValueNumber, b: ValueNumber) -> bool {
        match (self.fwd.get(&a.0), self.rev.get(&b.0)) {
            (None, None) => {
                self.fwd.insert(a.0, b.0);
                self.rev.insert(b.0, a.0);
                true
            }
            (Some(&x), Some(&y)) => x == b.0 && y == a.0,
            _ => false,
        }
    }
}

fn match_vpf(a: &ValuePhiFunction, b: &ValuePhiFunction, m: &VnBijection) -> Option<VnBijection> {
    if a.block != b.block {
        return None;
    }
    let m = match_operand(&a.left, &b.left, m)?;
    match_operand(&a.right, &b.right, &m)
}

fn match_operand(a: &VpfOperand, b: &VpfOperand, m: &VnBijection) -> Option<VnBijection> {
    match (a, b) {
        (VpfOperand::Number(x), VpfOperand::Number(y)) => {
            let mut m = m.clone();
            m.bind(*x, *y).then_some(m)
        }
        (VpfOperand::Phi(p), VpfOperand::Phi(q)) => match_vpf(p, q, m),
        _ => None,
    }
}

/// All ways to match `a`'s expressions one-to-one with `b`'s.
fn match_exprs_all(a: &[ValueExpression], b: &[ValueExpression], m: &VnBijection) -> Vec<VnBijection> {
    let Some((first, rest)) = a.split_first() else {
        return if b.is_empty() { vec![m.clone()] } else { Vec::new() };
    };
    let mut out = Vec::new();
    for (i, cand) in b.iter().enumerate() {
        if cand.op != first.op {
            continue;
        }
        let mut m2 = m.clone();
        if m2.bind(first.left, cand.left) && m2.bind(first.right, cand.right) {
            let mut remaining = b.to_vec();
            remaining.remove(i);
            out.extend(match_exprs_all(rest, &remaining, &m2));
        }
    }
    out
}

fn match_class_all(a: &Class, b: &Class, m: &VnBijection) -> Vec<VnBijection> {
    if a.vars != b.vars || a.consts != b.consts || a.exprs.len() != b.exprs.len() {
        return Vec::new();
    }
    let mut m = m.clone();
    if !m.bind(a.vn, b.vn) {
        return Vec::new();
    }
    let ea: Vec<_> = a.exprs.iter().copied().collect();
    let eb: Vec<_> = b.exprs.iter().copied().collect();
    let with_exprs = match_exprs_all(&ea, &eb, &m);
    let mut out = Vec::new();
    for m2 in with_exprs {
        match (&a.vpf, &b.vpf) {
            (None, None) => out.push(m2),
            (Some(p), Some(q)) => out.extend(match_vpf(p, q, &m2)),
            _ => {}
        }
    }
    out
}

/// True when there is a value-number bijection under which the two
/// partitions are identical (same classes, expressions, annotations).
fn isomorphic(a: &Partition, b: &Partition) -> bool {
    match (a, b) {
        (Partition::Top, Partition::Top) => return true,
        (Partition::Top, _) | (_, Partition::Top) => return false,
        _ => {}
    }
    let ca = a.classes();
    let cb = b.classes();
    if ca.len() != cb.len() {
        return false;
    }
    fn go(ca: &[Class], cb: &[Class], used: &mut Vec<bool>, i: usize, m: &VnBijection) -> bool {
        if i == ca.len() {
            return true;
        }
        for j in 0..cb.len() {
            if used[j] {
                continue;
            }
            for m2 in match_class_all(&ca[i], &cb[j], m) {
                used[j] = true;
                if go(ca, cb, used, i + 1, &m2) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    go(ca, cb, &mut vec![false; cb.len()], 0, &VnBijection::default())
}

// ---------------------------------------------------------------------
// Criterion 1: the join golden.
// ---------------------------------------------------------------------

/// The worked example: the left branch ends with x1/x3 together, y1/y3
/// computing x's value plus one, and z1/z3; the right branch mirrors it
/// with the plus-one on z instead of y.
fn worked_inputs() -> (Allocator, Partition, Partition) {
    let mut a = Allocator::new();
    let mut v = |name: &str| a.number(AllocationKey::Input(name.to_string()));
    let x1 = v("x1");
    let y1 = v("y1");
    let z1 = v("z1");
    let x2 = v("x2");
    let y2 = v("y2");
    let z2 = v("z2");
    let one = a.number(AllocationKey::Const(1));
    let p1 = Partition::from_classes(vec![
        Class::new(x1).with_var("x1").with_var("x3"),
        Class::new(y1).with_var("y1").with_var("y3").with_expr(ValueExpression::new('+', x1, one)),
        Class::new(z1).with_var("z1").with_var("z3"),
    ]);
    let p2 = Partition::from_classes(vec![
        Class::new(x2).with_var("x2").with_var("x3"),
        Class::new(y2).with_var("y2").with_var("y3"),
        Class::new(z2).with_var("z2").with_var("z3").with_expr(ValueExpression::new('+', x2, one)),
    ]);
    (a, p1, p2)
}

#[test]
fn criterion_1_join_matches_the_worked_golden() {
    let started = Instant::now();
    let (mut alloc, p1, p2) = worked_inputs();
    let (x1, y1, z1) = (ValueNumber(0), ValueNumber(1), ValueNumber(2));
    let (x2, y2, z2) = (ValueNumber(3), ValueNumber(4), ValueNumber(5));

    let joined = join(&p1, &p2, "B", &mut alloc);

    // Only the phi-targets survive; each class is annotated with the merge
    // of the two source classes. The expressions do not survive because
    // neither branch's expression is computed on the other.
    let c = |var: &str| joined.class_of_var(var).unwrap_or_else(|| panic!("{var} survives"));
    assert_eq!(joined.classes().len(), 3, "exactly the three phi-targets survive");
    for (var, l, r) in [("x3", x1, x2), ("y3", y1, y2), ("z3", z1, z2)] {
        let class = c(var);
        assert_eq!(class.vars.iter().collect::<Vec<_>>(), [var]);
        assert!(class.consts.is_empty() && class.exprs.is_empty());
        assert_eq!(class.vpf, Some(ValuePhiFunction::new("B", l, r)), "{var} annotation");
    }

    // The same shape, stated as a golden partition compared up to
    // value-number isomorphism.
    let golden = Partition::from_classes(vec![
        Class::new(ValueNumber(100)).with_var("x3").with_vpf(ValuePhiFunction::new("B", x1, x2)),
        Class::new(ValueNumber(101)).with_var("y3").with_vpf(ValuePhiFunction::new("B", y1, y2)),
        Class::new(ValueNumber(102)).with_var("z3").with_vpf(ValuePhiFunction::new("B", z1, z2)),
    ]);
    assert!(isomorphic(&joined, &golden), "join result is isomorphic to the golden");
    assert!(!isomorphic(&joined, &p1), "isomorphism is not trivially true");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "join golden took {elapsed:?}");
    println!("PASS criterion 1: worked join golden isomorphic in {elapsed:?}");
}

// ---------------------------------------------------------------------
// Criterion 2: the transfer golden and a nested value-phi chain.
// ---------------------------------------------------------------------

#[test]
fn criterion_2_transfer_golden_and_value_phi_chain() {
    // Diamond: transferring `w3 = x3 + y3` at the join must produce a class
    // that carries the expression over the operand classes *and* the value
    // phi-function merging the two branch computations.
    let (lowered, analysis) = analyzed(DIAMOND);
    let block = |name: &str| lowered.block_by_name(name).unwrap().id;
    let b1_out = &analysis.block_out[&block("B1")];
    let b2_out = &analysis.block_out[&block("B2")];
    let b3_in = &analysis.block_in[&block("B3")];
    let b3_out = &analysis.block_out[&block("B3")];

    // p1's class computes x1 + y1.
    let p1 = b1_out.class_of_var("p1").unwrap();
    assert_eq!(
        p1.exprs.iter().copied().collect::<Vec<_>>(),
        [ValueExpression::new('+', vn_of(b1_out, "x1"), vn_of(b1_out, "y1"))]
    );

    // The join annotates the phi targets with merges of the branch classes.
    let x3 = b3_in.class_of_var("x3").unwrap();
    assert_eq!(x3.vpf, Some(ValuePhiFunction::new("B3", vn_of(b1_out, "x1"), vn_of(b2_out, "x2"))));

    // The transfer golden: w3's class after its statement.
    let w3 = b3_out.class_of_var("w3").unwrap();
    assert_eq!(
        w3.exprs.iter().copied().collect::<Vec<_>>(),
        [ValueExpression::new('+', vn_of(b3_in, "x3"), vn_of(b3_in, "y3"))]
    );
    assert_eq!(
        w3.vpf,
        Some(ValuePhiFunction::new("B3", vn_of(b1_out, "p1"), vn_of(b2_out, "q2"))),
        "w3 is annotated with the merge of the two branch computations"
    );

    // Two chained joins: the witness for `w = g + h` nests a value
    // phi-function inside another.
    let (lowered, analysis) = analyzed(TWO_JOINS);
    let block = |name: &str| lowered.block_by_name(name).unwrap().id;
    let b1_out = &analysis.block_out[&block("B1")];
    let b2_out = &analysis.block_out[&block("B2")];
    let d_out = &analysis.block_out[&block("D")];
    let j2_out = &analysis.block_out[&block("J2")];
    let w = j2_out.class_of_var("w").unwrap();
    let inner = ValuePhiFunction::new("J1", vn_of(b1_out, "p1"), vn_of(b2_out, "p2"));
    let expected = ValuePhiFunction::new("J2", inner, vn_of(d_out, "q"));
    assert_eq!(w.vpf, Some(expected), "nested value phi-function chain");
    assert_eq!(analysis.max_merge_depth, 2, "the chain needed one recursive derivation");

    println!("PASS criterion 2: transfer golden and nested value-phi chain hold");
}

// ---------------------------------------------------------------------
// Criterion 3: detection on the flagship example and its mutation.
// ---------------------------------------------------------------------

#[test]
fn criterion_3_flagship_detection_and_mutated_negative() {
    let (lowered, analysis) = analyzed(DIAMOND);
    let report = analysis.detect_redundancies(&lowered);
    assert_eq!(report.entries.len(), 1, "exactly one redundancy: {:?}", report.entries);
    let e = &report.entries[0];
    assert_eq!((e.block.as_str(), e.target.as_str()), ("B3", "w3"));
    let Reason::ValuePhi { vpf } = &e.reason else {
        panic!("witnessed by a value phi-function, got {:?}", e.reason);
    };
    let block = |name: &str| lowered.block_by_name(name).unwrap().id;
    let b1_out = &analysis.block_out[&block("B1")];
    let b2_out = &analysis.block_out[&block("B2")];
    assert_eq!(*vpf, ValuePhiFunction::new("B3", vn_of(b1_out, "p1"), vn_of(b2_out, "q2")));

    // The oracle agrees: w3's value is computed on every path.
    let (_, stmt) = lowered.statements().find(|(_, s)| s.target == "w3").unwrap();
    assert!(oracle_redundant(&lowered, stmt.id, 0, DEFAULT_PATH_CAP).unwrap());

    // Mutating one branch to a different operator kills the redundancy.
    let (lowered_mul, analysis_mul) = analyzed(DIAMOND_MUL);
    let report_mul = analysis_mul.detect_redundancies(&lowered_mul);
    assert!(report_mul.entries.is_empty(), "mutated diamond: {:?}", report_mul.entries);
    let (_, stmt) = lowered_mul.statements().find(|(_, s)| s.target == "w3").unwrap();
    assert!(!oracle_redundant(&lowered_mul, stmt.id, 0, DEFAULT_PATH_CAP).unwrap());

    println!("PASS criterion 3: flagship redundancy found, mutated variant clean");
}

// ---------------------------------------------------------------------
// Criterion 4: the differential campaign.
// ---------------------------------------------------------------------

#[test]
fn criterion_4_differential_campaign_is_clean() {
    let started = Instant::now();
    let mut stmts = 0usize;
    let mut pairs = 0usize;
    for seed in 0..500 {
        let program = random_acyclic_program(seed);
        let report = differential_check(&program, 3, DEFAULT_PATH_CAP)
            .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(report.mode, CheckMode::Exact);
        assert!(report.mismatches.is_empty(), "seed {seed}: {:?}", report.mismatches);
        stmts += report.stmts_checked;
        pairs += report.pairs_checked;
    }
    let acyclic_elapsed = started.elapsed();
    assert!(
        acyclic_elapsed < Duration::from_secs(60),
        "500 acyclic programs took {acyclic_elapsed:?}"
    );

    for seed in 0..150 {
        let program = random_loop_program(seed);
        let report = differential_check(&program, 3, DEFAULT_PATH_CAP)
            .unwrap_or_else(|e| panic!("loop seed {seed}: {e}"));
        assert_eq!(report.mode, CheckMode::SoundnessOnly);
        assert!(report.mismatches.is_empty(), "loop seed {seed}: {:?}", report.mismatches);
    }

    println!(
        "PASS criterion 4: 500 acyclic programs exact ({stmts} statements, {pairs} pairs, \
         {acyclic_elapsed:?}) and 150 loop programs sound, zero mismatches"
    );
}

// ---------------------------------------------------------------------
// Criterion 5: the convergence bound.
// ---------------------------------------------------------------------

#[test]
fn criterion_5_convergence_within_blocks_plus_two() {
    let mut checked = 0usize;
    let mut verify = |program: &Program| {
        let lowered = lower_phis(program);
        let analysis = Analysis::run(&lowered).unwrap_or_else(|e| panic!("{e}"));
        assert!(
            analysis.iterations <= lowered.blocks.len() + 2,
            "{} sweeps for {} blocks",
            analysis.iterations,
            lowered.blocks.len()
        );
        checked += 1;
    };
    for src in [DIAMOND, DIAMOND_MUL, LOOP, STRAIGHTLINE, TWO_JOINS, EMPTY] {
        verify(&parsed(src));
    }
    for seed in 0..200 {
        verify(&random_acyclic_program(seed));
        verify(&random_loop_program(seed));
    }
    println!("PASS criterion 5: {checked} programs converged within |blocks| + 2 sweeps");
}

// ---------------------------------------------------------------------
// Criterion 6: linear scaling on chained diamonds.
// ---------------------------------------------------------------------

#[test]
fn criterion_6_diamond_chain_scales_linearly() {
    let ks = [4usize, 8, 16, 32];
    let mut measured = Vec::new();
    for &k in &ks {
        let lowered = lower_phis(&diamond_stress_program(k));
        let started = Instant::now();
        let analysis = Analysis::run(&lowered).unwrap_or_else(|e| panic!("k = {k}: {e}"));
        let wall = started.elapsed();
        let max_classes = analysis
            .block_in
            .values()
            .chain(analysis.block_out.values())
            .map(|p| p.classes().len())
            .max()
            .unwrap();
        assert!(
            analysis.detect_redundancies(&lowered).entries.is_empty(),
            "the stress chain has no redundancies"
        );
        measured.push((k, max_classes, wall));
    }
    let (k0, m0, _) = measured[0];
    let base = m0 as f64 / k0 as f64;
    for &(k, m, _) in &measured[1..] {
        let per_diamond = m as f64 / k as f64;
        assert!(
            per_diamond <= 1.5 * base,
            "k = {k}: {m} classes ({per_diamond:.2} per diamond) vs baseline {base:.2}"
        );
    }
    let (_, _, wall32) = measured[3];
    assert!(wall32 < Duration::from_secs(5), "k = 32 took {wall32:?}");
    println!(
        "PASS criterion 6: max classes {:?} for k {:?}, k=32 in {wall32:?}",
        measured.iter().map(|&(_, m, _)| m).collect::<Vec<_>>(),
        ks
    );
}

// ---------------------------------------------------------------------
// Criterion 7: the property suite.
// ---------------------------------------------------------------------

#[test]
fn criterion_7_property_suite() {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};

    let config = |cases| Config { cases, failure_persistence: None, ..Config::default() };

    // Partition invariants hold at every point of every converged analysis:
    // classes are non-empty, member sets are disjoint, and class order
    // follows the value numbers.
    TestRunner::new(config(48))
        .run(&(0u64..1_000_000), |seed| {
            for program in [random_acyclic_program(seed), random_loop_program(seed)] {
                let lowered = lower_phis(&program);
                let analysis = Analysis::run(&lowered).unwrap();
                for p in analysis
                    .block_in
                    .values()
                    .chain(analysis.block_out.values())
                    .chain(analysis.stmt_in.values())
                    .chain(analysis.stmt_out.values())
                {
                    prop_assert!(p.check_invariants().is_ok(), "{:?}", p.check_invariants());
                }
            }
            Ok(())
        })
        .unwrap();

    // Join is idempotent, exactly: joining a converged partition with
    // itself is the identity, annotations included.
    TestRunner::new(config(48))
        .run(&(0u64..1_000_000), |seed| {
            let lowered = lower_phis(&random_acyclic_program(seed));
            let mut analysis = Analysis::run(&lowered).unwrap();
            for p in analysis.block_out.values() {
                let j = join(p, p, "self", &mut analysis.allocator);
                prop_assert_eq!(&j, p);
            }
            Ok(())
        })
        .unwrap();

    // Join commutes up to fresh names: swapping the operands yields the
    // same classes, with every merge annotation swapped (or unchanged
    // where it was inherited identically from both sides).
    TestRunner::new(config(48))
        .run(&(0u64..1_000_000), |seed| {
            let lowered = lower_phis(&random_acyclic_program(seed));
            let mut analysis = Analysis::run(&lowered).unwrap();
            let joins: Vec<_> = lowered
                .blocks
                .iter()
                .filter(|b| b.preds.len() == 2)
                .map(|b| (analysis.block_out[&b.preds[0]].clone(), analysis.block_out[&b.preds[1]].clone()))
                .collect();
            for (left, right) in joins {
                let lr = join(&left, &right, "J", &mut analysis.allocator);
                let rl = join(&right, &left, "J", &mut analysis.allocator);
                prop_assert_eq!(lr.classes().len(), rl.classes().len());
                for c in lr.classes() {
                    let key = (&c.vars, &c.consts, &c.exprs);
                    let mirror = rl
                        .classes()
                        .iter()
                        .find(|d| (&d.vars, &d.consts, &d.exprs) == key)
                        .expect("same members appear in the swapped join");
                    let ok = match (&c.vpf, &mirror.vpf) {
                        (None, None) => true,
                        (Some(p), Some(q)) => *p == *q || *p == q.swapped(),
                        _ => false,
                    };
                    prop_assert!(ok, "{:?} vs {:?}", c.vpf, mirror.vpf);
                }
            }
            Ok(())
        })
        .unwrap();

    // Determinism: re-running the analysis reproduces every partition, the
    // sweep count, and the allocator, byte for byte.
    TestRunner::new(config(32))
        .run(&(0u64..1_000_000), |seed| {
            let fingerprint = |program: &Program| {
                let lowered = lower_phis(program);
                let a = Analysis::run(&lowered).unwrap();
                let mut s = format!("sweeps {} depth {} alloc {}\n", a.iterations, a.max_merge_depth, a.allocator.len());
                for (b, p) in a.block_in.iter().chain(a.block_out.iter()) {
                    s.push_str(&format!("b{} {}\n", b.0, p.render_text()));
                }
                for (id, p) in a.stmt_in.iter().chain(a.stmt_out.iter()) {
                    s.push_str(&format!("s{} {}\n", id.0, p.render_text()));
                }
                for e in a.detect_redundancies(&lowered).entries {
                    s.push_str(&format!("{e}\n"));
                }
                s
            };
            for program in [random_acyclic_program(seed), random_loop_program(seed)] {
                prop_assert_eq!(fingerprint(&program), fingerprint(&program));
            }
            Ok(())
        })
        .unwrap();

    // The oracle's equivalence judgment is an equivalence relation.
    TestRunner::new(config(16))
        .run(&(0u64..1_000_000), |seed| {
            let program = lower_phis(&random_acyclic_program(seed));
            let exit = program.exit;
            let mut names: BTreeSet<String> = program.defined_vars().into_iter().collect();
            names.extend(program.input_vars());
            let names: Vec<String> = names.into_iter().take(5).collect();
            let eq = |x: &str, y: &str| {
                oracle_equivalent(&program, exit, x, y, 0, DEFAULT_PATH_CAP).unwrap()
            };
            for x in &names {
                prop_assert!(eq(x, x), "reflexive on {x}");
                for y in &names {
                    prop_assert_eq!(eq(x, y), eq(y, x), "symmetric on {}, {}", x, y);
                    for z in &names {
                        if eq(x, y) && eq(y, z) {
                            prop_assert!(eq(x, z), "transitive on {x}, {y}, {z}");
                        }
                    }
                }
            }
            Ok(())
        })
        .unwrap();

    println!("PASS criterion 7: invariant, idempotence, commutativity, determinism, and oracle-relation properties hold");
}
