//! Seeded program generators for differential and stress testing.
//!
//! The random generators emit concrete IR text and run it through the
//! ordinary parser, so generated programs exercise the same entry path as
//! hand-written ones. All randomness comes from a [`ChaCha8Rng`] seeded
//! explicitly: the same seed always yields byte-identical programs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::ir::{parse_program, Program};

const INPUTS: [&str; 2] = ["a", "b"];
const OPS: [char; 2] = ['+', '*'];
const MAX_BODY_BLOCKS: usize = 4;
const MAX_STMTS: usize = 12;

/// One already-emitted binary right-hand side, kept for the redundancy
/// bias: repeating an earlier `l op r` verbatim plants expressions the
/// analysis should prove redundant.
#[derive(Clone)]
struct SeenBinop {
    op: char,
    left: String,
    right: String,
}

struct Emitter {
    rng: ChaCha8Rng,
    lines: Vec<String>,
    next_var: usize,
    stmts_left: usize,
    seen: Vec<SeenBinop>,
}

impl Emitter {
    fn new(seed: u64, budget: usize) -> Self {
        Emitter {
            rng: ChaCha8Rng::seed_from_u64(seed),
            lines: Vec::new(),
            next_var: 0,
            stmts_left: budget,
            seen: Vec::new(),
        }
    }

    fn fresh(&mut self, prefix: &str) -> String {
        let v = format!("{prefix}{}", self.next_var);
        self.next_var += 1;
        v
    }

    fn header(&mut self, name: &str, preds: &[&str]) {
        self.lines.push(format!("block {name}:"));
        if !preds.is_empty() {
            self.lines.push(format!("  preds: {}", preds.join(", ")));
        }
    }

    /// A random operand over the available variables, the inputs, and
    /// small constants.
    fn operand(&mut self, avail: &[String]) -> String {
        let roll: f64 = self.rng.gen();
        if roll < 0.2 || (avail.is_empty() && roll < 0.6) {
            INPUTS.choose(&mut self.rng).unwrap().to_string()
        } else if roll < 0.35 || avail.is_empty() {
            self.rng.gen_range(0..4).to_string()
        } else {
            avail.choose(&mut self.rng).unwrap().clone()
        }
    }

    fn operand_usable(&self, avail: &[String], operand: &str) -> bool {
        operand.parse::<i64>().is_ok()
            || INPUTS.contains(&operand)
            || avail.iter().any(|v| v == operand)
    }

    /// Emits one non-φ statement with a fresh target and returns the
    /// target; biased towards repeating an earlier binary expression
    /// whose operands are still available.
    fn statement(&mut self, prefix: &str, avail: &[String]) -> String {
        let target = self.fresh(prefix);
        self.stmts_left -= 1;
        let roll: f64 = self.rng.gen();
        let rhs = if roll < 0.25 {
            let reusable: Vec<SeenBinop> = self
                .seen
                .iter()
                .filter(|s| {
                    self.operand_usable(avail, &s.left) && self.operand_usable(avail, &s.right)
                })
                .cloned()
                .collect();
            match reusable.choose(&mut self.rng) {
                Some(s) => format!("{} {} {}", s.left, s.op, s.right),
                None => self.binop(avail),
            }
        } else if roll < 0.75 {
            self.binop(avail)
        } else if roll < 0.9 {
            self.operand(avail)
        } else {
            self.rng.gen_range(0..4).to_string()
        };
        self.lines.push(format!("  {target} = {rhs}"));
        target
    }

    fn binop(&mut self, avail: &[String]) -> String {
        let op = *OPS.choose(&mut self.rng).unwrap();
        let left = self.operand(avail);
        let right = self.operand(avail);
        self.seen.push(SeenBinop { op, left: left.clone(), right: right.clone() });
        format!("{left} {op} {right}")
    }

    fn finish(self) -> Program {
        let text = self.lines.join("\n") + "\n";
        parse_program(&text).expect("generated text must parse")
    }
}

/// A random acyclic program: a chain of up to four body blocks with
/// occasional forward skip edges, φs at the resulting join blocks, and a
/// bias towards re-computing earlier expressions. At most six blocks and
/// twelve statements.
pub fn random_acyclic_program(seed: u64) -> Program {
    let mut e = Emitter::new(seed, MAX_STMTS);
    let n = e.rng.gen_range(1..=MAX_BODY_BLOCKS);
    // preds[i] holds indices into the body chain; usize::MAX marks entry.
    const ENTRY: usize = usize::MAX;
    let mut preds: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let mut ps = if i == 0 { vec![ENTRY] } else { vec![i - 1] };
        if i >= 2 && e.rng.gen_bool(0.45) {
            let skip = e.rng.gen_range(0..i - 1);
            if e.rng.gen_bool(0.5) {
                ps.insert(0, skip);
            } else {
                ps.push(skip);
            }
        }
        preds.push(ps);
    }

    e.header("entry", &[]);
    let mut out_avail: Vec<Vec<String>> = Vec::new();
    for i in 0..n {
        let name = format!("B{}", i + 1);
        let pred_names: Vec<String> = preds[i]
            .iter()
            .map(|&p| if p == ENTRY { "entry".to_string() } else { format!("B{}", p + 1) })
            .collect();
        let pred_refs: Vec<&str> = pred_names.iter().map(|s| s.as_str()).collect();
        e.header(&name, &pred_refs);

        let avail_of = |p: usize| -> Vec<String> {
            if p == ENTRY {
                Vec::new()
            } else {
                out_avail[p].clone()
            }
        };
        let mut avail = match preds[i].as_slice() {
            [p] => avail_of(*p),
            [p, q] => {
                let (pa, qa) = (avail_of(*p), avail_of(*q));
                pa.into_iter().filter(|v| qa.contains(v)).collect()
            }
            _ => unreachable!(),
        };

        // φs at join blocks merge one value from each side.
        if preds[i].len() == 2 && e.rng.gen_bool(0.6) && e.stmts_left > 0 {
            for _ in 0..e.rng.gen_range(1..=2usize.min(e.stmts_left)) {
                let pick = |e: &mut Emitter, p: usize| -> String {
                    let pool = if p == ENTRY { Vec::new() } else { out_avail[p].clone() };
                    match pool.choose(&mut e.rng) {
                        Some(v) => v.clone(),
                        None => INPUTS.choose(&mut e.rng).unwrap().to_string(),
                    }
                };
                let l = pick(&mut e, preds[i][0]);
                let r = pick(&mut e, preds[i][1]);
                let target = e.fresh("m");
                e.stmts_left -= 1;
                e.lines.push(format!("  {target} = phi({l}, {r})"));
                avail.push(target);
            }
        }

        let quota = e.rng.gen_range(0..=3usize).min(e.stmts_left);
        for _ in 0..quota {
            let t = e.statement("t", &avail);
            avail.push(t);
        }
        out_avail.push(avail);
    }
    e.header("exit", &[&format!("B{n}")]);
    e.finish()
}

/// A random single-loop program: `entry → P → H ⇄ (B → L), H → X → exit`,
/// with φs at the header merging the preheader values with the latch's.
pub fn random_loop_program(seed: u64) -> Program {
    let mut e = Emitter::new(seed, MAX_STMTS);

    e.header("entry", &[]);
    e.header("P", &["entry"]);
    let mut p_vars = Vec::new();
    for _ in 0..e.rng.gen_range(1..=2usize) {
        let t = e.statement("p", &p_vars.clone());
        p_vars.push(t);
    }

    let n_phis = e.rng.gen_range(1..=2usize);
    let latch_vars: Vec<String> = (0..n_phis).map(|i| format!("l{i}")).collect();
    e.header("H", &["P", "L"]);
    let mut phi_vars = Vec::new();
    for (i, l) in latch_vars.iter().enumerate() {
        let init = p_vars.choose(&mut e.rng).cloned().unwrap();
        let target = format!("i{i}");
        e.lines.push(format!("  {target} = phi({init}, {l})"));
        phi_vars.push(target);
    }

    let mut body_avail: Vec<String> =
        p_vars.iter().chain(phi_vars.iter()).cloned().collect();
    e.header("B", &["H"]);
    for _ in 0..e.rng.gen_range(0..=2usize).min(e.stmts_left.saturating_sub(n_phis + 1)) {
        let t = e.statement("t", &body_avail);
        body_avail.push(t);
    }

    e.header("L", &["B"]);
    for l in &latch_vars {
        // The latch must redefine every φ's loop operand.
        let rhs = if e.rng.gen_bool(0.7) { e.binop(&body_avail) } else { e.operand(&body_avail) };
        e.lines.push(format!("  {l} = {rhs}"));
    }

    let after_avail: Vec<String> = p_vars.iter().chain(phi_vars.iter()).cloned().collect();
    e.header("X", &["H"]);
    for _ in 0..e.rng.gen_range(0..=2usize).min(e.stmts_left) {
        e.statement("x", &after_avail);
    }

    e.header("exit", &["X"]);
    e.finish()
}

/// A chain of `k` diamonds over one input `x`. Each diamond computes two
/// values per branch — with `+` on the left and `*` on the right, so
/// nothing merges to a common expression — then φ-merges them and sums
/// the φs. Partitions grow linearly in `k`, which makes this the
/// worst-case scaling probe for the analysis.
pub fn diamond_stress_program(k: usize) -> Program {
    let mut lines = vec!["block entry:".to_string()];
    for i in 1..=k {
        let split = if i == 1 { "entry".to_string() } else { format!("J{}", i - 1) };
        let (c0, c1) = (2 * (i - 1), 2 * (i - 1) + 1);
        lines.push(format!("block L{i}:"));
        lines.push(format!("  preds: {split}"));
        lines.push(format!("  aL{i} = x + {c0}"));
        lines.push(format!("  bL{i} = x + {c1}"));
        lines.push(format!("block R{i}:"));
        lines.push(format!("  preds: {split}"));
        lines.push(format!("  aR{i} = x * {c0}"));
        lines.push(format!("  bR{i} = x * {c1}"));
        lines.push(format!("block J{i}:"));
        lines.push(format!("  preds: L{i}, R{i}"));
        lines.push(format!("  a{i} = phi(aL{i}, aR{i})"));
        lines.push(format!("  b{i} = phi(bL{i}, bR{i})"));
        lines.push(format!("  s{i} = a{i} + b{i}"));
    }
    lines.push("block exit:".to_string());
    let last = if k == 0 { "entry".to_string() } else { format!("J{k}") };
    lines.push(format!("  preds: {last}"));
    let text = lines.join("\n") + "\n";
    parse_program(&text).expect("stress text must parse")
}
