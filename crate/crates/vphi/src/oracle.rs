//! Brute-force oracle and differential checker.
//!
//! Independently of the data-flow analysis, this module interprets a
//! lowered program symbolically: it enumerates control-flow paths from
//! entry (bounding each back edge to `unroll` traversals per path) and
//! carries along each path an environment mapping variables to
//! [`HerbrandTerm`]s — uninterpreted syntax trees over inputs, constants,
//! and operators. Two values are equal exactly when their terms are
//! structurally equal; nothing is known about the operators themselves.
//!
//! On top of path enumeration sit the two oracle questions —
//! [`oracle_redundant`] (was an equal term computed earlier on every
//! path?) and [`oracle_equivalent`] (do two variables hold equal terms on
//! every path?) — and [`differential_check`], which compares both answers
//! against the analysis over every statement and block of a program.
//! Acyclic programs are checked in both directions; with loops the
//! truncated path set only supports checking that analysis claims are
//! sound.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{Analysis, AnalysisError};
use crate::ir::{lower_phis, BlockId, Operand, Program, Rhs, StmtId};

/// Default bound on traversals of each back edge along one path.
pub const DEFAULT_UNROLL: usize = 3;
/// Default bound on recorded paths per program point.
pub const DEFAULT_PATH_CAP: usize = 4096;

/// A symbolic value: an input variable, a literal constant, or an
/// operator applied to two values. Equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HerbrandTerm {
    Leaf(String),
    ConstLeaf(i64),
    Node(char, Rc<HerbrandTerm>, Rc<HerbrandTerm>),
}

impl fmt::Display for HerbrandTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HerbrandTerm::Leaf(name) => f.write_str(name),
            HerbrandTerm::ConstLeaf(c) => write!(f, "{c}"),
            HerbrandTerm::Node(op, l, r) => write!(f, "({l} {op} {r})"),
        }
    }
}

/// The symbolic state carried along one path to a program point: what
/// every assigned variable holds, and which binary terms some earlier
/// statement already computed.
#[derive(Clone, Debug, Default)]
pub struct PathEnv {
    pub env: HashMap<String, Rc<HerbrandTerm>>,
    pub computed: HashSet<Rc<HerbrandTerm>>,
}

impl PathEnv {
    /// The variable's term; an unassigned name is a program input and
    /// denotes itself.
    pub fn term_of_var(&self, name: &str) -> Rc<HerbrandTerm> {
        self.env
            .get(name)
            .cloned()
            .unwrap_or_else(|| Rc::new(HerbrandTerm::Leaf(name.to_string())))
    }

    fn term_of_operand(&self, operand: &Operand) -> Rc<HerbrandTerm> {
        match operand {
            Operand::Var(name) => self.term_of_var(name),
            Operand::Const(c) => Rc::new(HerbrandTerm::ConstLeaf(*c)),
        }
    }

    /// The right-hand side's term under this environment; `None` for a φ,
    /// which has no path-independent meaning.
    pub fn term_of_rhs(&self, rhs: &Rhs) -> Option<Rc<HerbrandTerm>> {
        match rhs {
            Rhs::Const(c) => Some(Rc::new(HerbrandTerm::ConstLeaf(*c))),
            Rhs::Var(name) => Some(self.term_of_var(name)),
            Rhs::BinOp { op, left, right } => Some(Rc::new(HerbrandTerm::Node(
                *op,
                self.term_of_operand(left),
                self.term_of_operand(right),
            ))),
            Rhs::Phi { .. } => None,
        }
    }
}

/// A program point the walker records arrivals at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    /// Immediately before the statement executes.
    StmtIn(StmtId),
    /// After the block's last statement.
    BlockOut(BlockId),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("path enumeration exceeded the cap of {cap} paths per point")]
    PathCapExceeded { cap: usize },
    #[error("statement {stmt} is a phi; lower the program before running the oracle")]
    UnloweredPhi { stmt: StmtId },
    #[error("statement {stmt} is not a binary expression")]
    NotBinary { stmt: StmtId },
    #[error("unknown statement {stmt}")]
    UnknownStatement { stmt: StmtId },
}

struct Walker<'p> {
    program: &'p Program,
    back_edges: HashSet<(BlockId, BlockId)>,
    unroll: usize,
    cap: usize,
    arrivals: HashMap<Point, Vec<PathEnv>>,
}

impl<'p> Walker<'p> {
    fn record(&mut self, point: Point, state: &PathEnv) -> Result<(), OracleError> {
        let v = self.arrivals.entry(point).or_default();
        if v.len() >= self.cap {
            return Err(OracleError::PathCapExceeded { cap: self.cap });
        }
        v.push(state.clone());
        Ok(())
    }

    fn walk(
        &mut self,
        b: BlockId,
        mut state: PathEnv,
        counts: &mut HashMap<(BlockId, BlockId), usize>,
    ) -> Result<(), OracleError> {
        let block = self.program.block(b);
        for stmt in &block.stmts {
            self.record(Point::StmtIn(stmt.id), &state)?;
            let Some(term) = state.term_of_rhs(&stmt.rhs) else {
                return Err(OracleError::UnloweredPhi { stmt: stmt.id });
            };
            if matches!(stmt.rhs, Rhs::BinOp { .. }) {
                state.computed.insert(term.clone());
            }
            state.env.insert(stmt.target.clone(), term);
        }
        self.record(Point::BlockOut(b), &state)?;
        for s in self.program.successors(b) {
            let edge = (b, s);
            if self.back_edges.contains(&edge) {
                let c = counts.entry(edge).or_insert(0);
                if *c >= self.unroll {
                    continue;
                }
                *c += 1;
                self.walk(s, state.clone(), counts)?;
                *counts.get_mut(&edge).unwrap() -= 1;
            } else {
                self.walk(s, state.clone(), counts)?;
            }
        }
        Ok(())
    }
}

/// Enumerates every path prefix from entry, recording the symbolic state
/// at each statement-in and block-out point it passes. Each back edge is
/// taken at most `unroll` times per path; each point keeps at most `cap`
/// arrivals before the enumeration fails.
pub fn enumerate_all(
    program: &Program,
    unroll: usize,
    cap: usize,
) -> Result<HashMap<Point, Vec<PathEnv>>, OracleError> {
    let mut walker = Walker {
        program,
        back_edges: program.back_edges().into_iter().collect(),
        unroll,
        cap,
        arrivals: HashMap::new(),
    };
    walker.walk(program.entry, PathEnv::default(), &mut HashMap::new())?;
    Ok(walker.arrivals)
}

/// The recorded arrivals at one point. See [`enumerate_all`].
pub fn enumerate_paths(
    program: &Program,
    point: Point,
    unroll: usize,
    cap: usize,
) -> Result<Vec<PathEnv>, OracleError> {
    let mut all = enumerate_all(program, unroll, cap)?;
    Ok(all.remove(&point).unwrap_or_default())
}

/// True when on every enumerated path to the statement, an earlier
/// statement already computed a structurally equal term. The statement
/// must be a binary expression in a lowered program.
pub fn oracle_redundant(
    program: &Program,
    stmt: StmtId,
    unroll: usize,
    cap: usize,
) -> Result<bool, OracleError> {
    let (_, s) = program.stmt(stmt).ok_or(OracleError::UnknownStatement { stmt })?;
    if !matches!(s.rhs, Rhs::BinOp { .. }) {
        return Err(OracleError::NotBinary { stmt });
    }
    let paths = enumerate_paths(program, Point::StmtIn(stmt), unroll, cap)?;
    Ok(paths.iter().all(|p| {
        let term = p.term_of_rhs(&s.rhs).expect("binary rhs always has a term");
        p.computed.contains(&term)
    }))
}

/// True when the two variables hold structurally equal terms on every
/// enumerated path to the block's out-point.
pub fn oracle_equivalent(
    program: &Program,
    block: BlockId,
    x: &str,
    y: &str,
    unroll: usize,
    cap: usize,
) -> Result<bool, OracleError> {
    let paths = enumerate_paths(program, Point::BlockOut(block), unroll, cap)?;
    Ok(paths.iter().all(|p| p.term_of_var(x) == p.term_of_var(y)))
}

/// How strictly [`differential_check`] compares the two sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Acyclic program: path enumeration is exhaustive, so analysis and
    /// oracle must agree exactly, in both directions.
    Exact,
    /// Cyclic program: paths are truncated at the unroll bound, so only
    /// analysis claims are checked (claimed ⇒ oracle confirms).
    SoundnessOnly,
}

/// One disagreement between the analysis and the oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Mismatch {
    #[serde(rename = "redundancy-mismatch")]
    Redundancy { stmt: StmtId, block: String, target: String, analysis: bool, oracle: bool },
    #[serde(rename = "equivalence-mismatch")]
    Equivalence { block: String, x: String, y: String, analysis: bool, oracle: bool },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Redundancy { stmt, block, target, analysis, oracle } => write!(
                f,
                "redundancy of {stmt} ({target}, block {block}): analysis says {analysis}, oracle says {oracle}"
            ),
            Mismatch::Equivalence { block, x, y, analysis, oracle } => write!(
                f,
                "equivalence of {x} and {y} at out({block}): analysis says {analysis}, oracle says {oracle}"
            ),
        }
    }
}

/// Outcome of one differential run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialReport {
    pub mode: CheckMode,
    /// Binary statements whose redundancy was compared.
    pub stmts_checked: usize,
    /// Variable pairs compared at block out-points.
    pub pairs_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl DifferentialReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DifferentialError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Runs the analysis and the oracle over the same program and compares
/// every answer.
///
/// The program is lowered internally, so both φ-form and lowered programs
/// are accepted. Per binary statement, the analysis's redundancy verdict
/// is compared with the oracle's; per block, every pair over the
/// variables bound on all paths (plus the program inputs) is compared
/// for equivalence at the block's out-point.
pub fn differential_check(
    program: &Program,
    unroll: usize,
    cap: usize,
) -> Result<DifferentialReport, DifferentialError> {
    let lowered = lower_phis(program);
    let analysis = Analysis::run(&lowered)?;
    let redundancies = analysis.detect_redundancies(&lowered);
    let mode = if program.has_cycle() { CheckMode::SoundnessOnly } else { CheckMode::Exact };
    let arrivals = enumerate_all(&lowered, unroll, cap)?;

    let disagree = |analysis: bool, oracle: bool| match mode {
        CheckMode::Exact => analysis != oracle,
        CheckMode::SoundnessOnly => analysis && !oracle,
    };

    let mut mismatches = Vec::new();
    let mut stmts_checked = 0;
    let mut pairs_checked = 0;

    for (block, stmt) in lowered.statements() {
        if !matches!(stmt.rhs, Rhs::BinOp { .. }) {
            continue;
        }
        stmts_checked += 1;
        let analysis_red = redundancies.is_redundant(stmt.id);
        let oracle_red = arrivals
            .get(&Point::StmtIn(stmt.id))
            .map(|paths| {
                paths.iter().all(|p| {
                    let term = p.term_of_rhs(&stmt.rhs).expect("binary rhs");
                    p.computed.contains(&term)
                })
            })
            .unwrap_or(true);
        if disagree(analysis_red, oracle_red) {
            mismatches.push(Mismatch::Redundancy {
                stmt: stmt.id,
                block: block.name.clone(),
                target: stmt.target.clone(),
                analysis: analysis_red,
                oracle: oracle_red,
            });
        }
    }

    let inputs = lowered.input_vars();
    for block in &lowered.blocks {
        let Some(paths) = arrivals.get(&Point::BlockOut(block.id)) else { continue };
        let Some(first) = paths.first() else { continue };
        let mut universe: BTreeSet<String> = inputs.iter().cloned().collect();
        universe.extend(
            first
                .env
                .keys()
                .filter(|k| paths.iter().all(|p| p.env.contains_key(*k)))
                .cloned(),
        );
        let universe: Vec<String> = universe.into_iter().collect();
        let part = analysis.block_out.get(&block.id);
        for i in 0..universe.len() {
            for j in i + 1..universe.len() {
                let (x, y) = (&universe[i], &universe[j]);
                pairs_checked += 1;
                let analysis_eq = part.map_or(false, |p| p.same_class(x, y));
                let oracle_eq = paths.iter().all(|p| p.term_of_var(x) == p.term_of_var(y));
                if disagree(analysis_eq, oracle_eq) {
                    mismatches.push(Mismatch::Equivalence {
                        block: block.name.clone(),
                        x: x.clone(),
                        y: y.clone(),
                        analysis: analysis_eq,
                        oracle: oracle_eq,
                    });
                }
            }
        }
    }

    Ok(DifferentialReport { mode, stmts_checked, pairs_checked, mismatches })
}
