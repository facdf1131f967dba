//! Global value numbering over a small textual SSA IR.
//!
//! The analysis discovers which variables and expressions are guaranteed
//! to hold equal values at each program point, including values that only
//! become equal through control-flow merges. Equalities across a join are
//! represented with *value phi-functions*: a class annotated
//! `phi.B3(v1, v4)` holds the value that is `v1` when control reached the
//! join's first predecessor and `v4` through the second. Chasing these
//! annotations lets the analysis prove an expression redundant even when
//! each path computes it from differently-named operands.
//!
//! The pipeline:
//!
//! 1. [`ir`] — parse a textual SSA program, validate it, and lower
//!    φ-instructions to predecessor-edge copies.
//! 2. [`analysis`] — run the data-flow fixpoint that maintains a
//!    [`partition::Partition`] of value classes at every point, then
//!    report redundant statements with machine-checkable witnesses.
//! 3. [`oracle`] — an independent brute-force checker that enumerates
//!    control-flow paths and compares symbolic Herbrand terms, used to
//!    cross-validate the analysis (see [`oracle::differential_check`]).
//!
//! [`generator`] produces random and parametric stress programs, and
//! [`cli`] wires everything into the `vphi` command-line tool.
//!
//! # Example
//!
//! ```
//! use vphi::analysis::Analysis;
//! use vphi::ir::{lower_phis, parse_program};
//!
//! let source = "
//! block entry:
//! block B1:
//!   preds: entry
//!   u = a + b
//! block B2:
//!   preds: B1
//!   w = a + b
//! block exit:
//!   preds: B2
//! ";
//! let program = lower_phis(&parse_program(source).unwrap());
//! let analysis = Analysis::run(&program).unwrap();
//! let report = analysis.detect_redundancies(&program);
//! // `w` recomputes `a + b`, which `u` already holds.
//! assert_eq!(report.entries.len(), 1);
//! assert_eq!(report.entries[0].target, "w");
//! ```

pub mod analysis;
pub mod cli;
pub mod generator;
pub mod ir;
pub mod oracle;
pub mod partition;

#[cfg(test)]
pub(crate) mod fixtures;

pub use analysis::{Analysis, AnalysisError, Redundancy, RedundancyReport};
pub use ir::{lower_phis, parse_program, validate_ssa, Program};
pub use oracle::{differential_check, DifferentialReport, Mismatch};
pub use partition::{Partition, ValueNumber, ValuePhiFunction};
