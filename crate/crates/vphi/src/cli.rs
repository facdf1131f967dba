//! The `vphi` command-line tool.
//!
//! Three subcommands over the library:
//!
//! * `analyze <file>` — parse, validate, lower, run the analysis, and
//!   report redundant statements (text or JSON, optionally with a
//!   Graphviz dump of the CFG and per-point partitions).
//! * `check [FILE]` — differentially test the analysis against the
//!   brute-force oracle, either on one file or on generated programs.
//! * `stress --diamonds K` — run the k-diamond scaling probe and print
//!   partition-size and timing metrics.
//!
//! Exit codes: `0` success, `1` bad input or mismatches found, `2`
//! non-convergence, `3` oracle path cap exceeded. All output except the
//! stress wall time is byte-identical across reruns on the same input.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::{Analysis, AnalysisError, Reason, RedundancyReport};
use crate::generator::{diamond_stress_program, random_acyclic_program, random_loop_program};
use crate::ir::{lower_phis, parse_program, validate_ssa, Program};
use crate::oracle::{
    differential_check, CheckMode, DifferentialError, OracleError, DEFAULT_PATH_CAP,
    DEFAULT_UNROLL,
};
use crate::partition::{Partition, Renumberer};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_PATH_CAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "vphi",
    version,
    about = "Global value numbering with value phi-functions over a textual SSA IR"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyse a program and report redundant statements
    Analyze {
        /// IR source file
        file: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the CFG (with redundancy markers) as Graphviz to this path
        #[arg(long)]
        dot: Option<PathBuf>,
        /// How much analysis state to dump
        #[arg(long, value_enum, default_value = "redundant")]
        dump: Dump,
        /// Sweep cap before giving up (default: number of blocks + 2)
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Differentially test the analysis against the path-enumeration oracle
    Check {
        /// IR source file; omit to check generated programs instead
        file: Option<PathBuf>,
        /// Check generated programs (implied when no file is given)
        #[arg(long, conflicts_with = "file")]
        random: bool,
        /// Number of generator seeds to check (implies --random)
        #[arg(long, conflicts_with = "file")]
        seeds: Option<usize>,
        /// Back-edge traversals allowed per enumerated path
        #[arg(long, default_value_t = DEFAULT_UNROLL)]
        unroll: usize,
        /// Generate only acyclic programs
        #[arg(long)]
        acyclic: bool,
    },
    /// Analyse a k-diamond chain and print scaling metrics
    Stress {
        /// Number of chained diamonds
        #[arg(long)]
        diamonds: usize,
        /// Output format
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Dump {
    /// Only the redundancy report
    Redundant,
    /// Also the partition at every block and statement point
    AllPoints,
}

/// Runs one parsed command, writing to the given streams, and returns the
/// process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run_inner(cli, out, err) {
        Ok(code) => code,
        Err(_) => EXIT_INPUT,
    }
}

fn run_inner(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    match cli.command {
        Command::Analyze { file, format, dot, dump, max_iters } => {
            cmd_analyze(&file, format, dot.as_deref(), dump, max_iters, out, err)
        }
        Command::Check { file, random, seeds, unroll, acyclic } => {
            cmd_check(file.as_deref(), random, seeds, unroll, acyclic, out, err)
        }
        Command::Stress { diamonds, format } => cmd_stress(diamonds, format, out, err),
    }
}

/// The oracle path cap: `VPHI_PATH_CAP` when set, the default otherwise.
pub fn resolve_path_cap(env: Option<&str>) -> Result<usize, String> {
    match env {
        None => Ok(DEFAULT_PATH_CAP),
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(0) => Err("VPHI_PATH_CAP must be at least 1".to_string()),
            Ok(n) => Ok(n),
            Err(_) => Err(format!("VPHI_PATH_CAP is not a number: {raw:?}")),
        },
    }
}

fn load_program(
    file: &std::path::Path,
    err: &mut dyn Write,
) -> io::Result<Result<Program, i32>> {
    let source = match fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            writeln!(err, "error: cannot read {}: {e}", file.display())?;
            return Ok(Err(EXIT_INPUT));
        }
    };
    let program = match parse_program(&source) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "error: {}: {e}", file.display())?;
            return Ok(Err(EXIT_INPUT));
        }
    };
    let report = validate_ssa(&program);
    if !report.is_empty() {
        writeln!(err, "error: {} is not a valid SSA program:", file.display())?;
        for v in &report.violations {
            writeln!(err, "  {v}")?;
        }
        return Ok(Err(EXIT_INPUT));
    }
    Ok(Ok(program))
}

#[derive(Serialize)]
struct StmtView {
    id: u32,
    text: String,
    phi_copy: bool,
    out: Partition,
}

#[derive(Serialize)]
struct BlockView {
    name: String,
    #[serde(rename = "in")]
    pin: Partition,
    stmts: Vec<StmtView>,
    #[serde(rename = "out")]
    pout: Partition,
}

fn cmd_analyze(
    file: &std::path::Path,
    format: Format,
    dot: Option<&std::path::Path>,
    dump: Dump,
    max_iters: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let program = match load_program(file, err)? {
        Ok(p) => p,
        Err(code) => return Ok(code),
    };
    let lowered = lower_phis(&program);
    let cap = max_iters.unwrap_or(lowered.blocks.len() + 2);
    let analysis = match Analysis::run_with_cap(&lowered, cap) {
        Ok(a) => a,
        Err(e @ AnalysisError::NonConvergence { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_NONCONVERGENCE);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let mut report = analysis.detect_redundancies(&lowered);

    if let Some(path) = dot {
        let text = render_dot(&program, &report);
        if let Err(e) = fs::write(path, text) {
            writeln!(err, "error: cannot write {}: {e}", path.display())?;
            return Ok(EXIT_INPUT);
        }
    }

    // Renumber value numbers densely in output order: redundancy
    // witnesses first, then partitions block by block.
    let mut ren = Renumberer::new();
    for e in &mut report.entries {
        if let Reason::ValuePhi { vpf } = &mut e.reason {
            ren.rewrite_standalone_vpf(vpf);
        }
    }
    let mut views = Vec::new();
    if dump == Dump::AllPoints {
        for block in &lowered.blocks {
            let mut pin =
                analysis.block_in.get(&block.id).cloned().unwrap_or(Partition::Top);
            ren.rewrite_partition(&mut pin);
            let stmts = block
                .stmts
                .iter()
                .map(|s| {
                    let mut pout =
                        analysis.stmt_out.get(&s.id).cloned().unwrap_or(Partition::Top);
                    ren.rewrite_partition(&mut pout);
                    StmtView { id: s.id.0, text: s.to_string(), phi_copy: s.phi_copy, out: pout }
                })
                .collect();
            let mut pout =
                analysis.block_out.get(&block.id).cloned().unwrap_or(Partition::Top);
            ren.rewrite_partition(&mut pout);
            views.push(BlockView { name: block.name.clone(), pin, stmts, pout });
        }
    }

    match format {
        Format::Text => {
            writeln!(
                out,
                "program {}: {} blocks, {} statements ({} after phi lowering)",
                file.display(),
                program.blocks.len(),
                program.statements().count(),
                lowered.statements().count()
            )?;
            writeln!(
                out,
                "converged in {} sweeps; max merge depth {}",
                analysis.iterations, analysis.max_merge_depth
            )?;
            writeln!(out)?;
            if report.entries.is_empty() {
                writeln!(out, "no redundant statements")?;
            } else {
                writeln!(out, "redundant statements:")?;
                for e in &report.entries {
                    writeln!(out, "  {e}")?;
                }
            }
            if dump == Dump::AllPoints {
                writeln!(out)?;
                writeln!(out, "partitions:")?;
                for v in &views {
                    writeln!(out, "block {}:", v.name)?;
                    writeln!(out, "  in:  {}", v.pin.render_text())?;
                    for s in &v.stmts {
                        let mark = if s.phi_copy { " [phi copy]" } else { "" };
                        writeln!(out, "  after s{} ({}{}): {}", s.id, s.text, mark, s.out.render_text())?;
                    }
                    writeln!(out, "  out: {}", v.pout.render_text())?;
                }
            }
        }
        Format::Json => {
            let mut value = json!({
                "program": {
                    "file": file.display().to_string(),
                    "blocks": program.blocks.len(),
                    "statements": program.statements().count(),
                    "lowered_statements": lowered.statements().count(),
                    "inputs": program.input_vars(),
                },
                "iterations": analysis.iterations,
                "max_merge_depth": analysis.max_merge_depth,
                "redundancies": report.entries,
            });
            if dump == Dump::AllPoints {
                value.as_object_mut().unwrap().insert(
                    "points".to_string(),
                    serde_json::to_value(&views).map_err(io::Error::other)?,
                );
            }
            serde_json::to_writer_pretty(&mut *out, &value)?;
            writeln!(out)?;
        }
    }
    Ok(EXIT_OK)
}

/// Graphviz rendering of the source CFG; statements found redundant are
/// suffixed `[REDUNDANT]`.
pub fn render_dot(program: &Program, report: &RedundancyReport) -> String {
    let mut s = String::from("digraph cfg {\n  node [shape=box, fontname=\"monospace\"];\n");
    for b in &program.blocks {
        let mut label = format!("{}\\l", b.name);
        for stmt in &b.stmts {
            let mark = if report.is_redundant(stmt.id) { " [REDUNDANT]" } else { "" };
            label.push_str(&format!("  {stmt}{mark}\\l"));
        }
        s.push_str(&format!("  \"{}\" [label=\"{label}\"];\n", b.name));
    }
    for b in &program.blocks {
        for p in &b.preds {
            s.push_str(&format!("  \"{}\" -> \"{}\";\n", program.block(*p).name, b.name));
        }
    }
    s.push_str("}\n");
    s
}

fn differential_exit(e: &DifferentialError) -> i32 {
    match e {
        DifferentialError::Analysis(AnalysisError::NonConvergence { .. }) => EXIT_NONCONVERGENCE,
        DifferentialError::Oracle(OracleError::PathCapExceeded { .. }) => EXIT_PATH_CAP,
        _ => EXIT_INPUT,
    }
}

fn cmd_check(
    file: Option<&std::path::Path>,
    random: bool,
    seeds: Option<usize>,
    unroll: usize,
    acyclic: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let cap = match resolve_path_cap(std::env::var("VPHI_PATH_CAP").ok().as_deref()) {
        Ok(c) => c,
        Err(m) => {
            writeln!(err, "error: {m}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let random_mode = random || seeds.is_some() || file.is_none();

    if random_mode {
        let n = seeds.unwrap_or(100);
        let mut programs_checked = 0usize;
        let mut total_mismatches = 0usize;
        for seed in 0..n as u64 {
            let mut programs = vec![("acyclic", random_acyclic_program(seed))];
            if !acyclic {
                programs.push(("loop", random_loop_program(seed)));
            }
            for (shape, program) in programs {
                let report = match differential_check(&program, unroll, cap) {
                    Ok(r) => r,
                    Err(e) => {
                        writeln!(err, "error: seed {seed} ({shape}): {e}")?;
                        return Ok(differential_exit(&e));
                    }
                };
                programs_checked += 1;
                total_mismatches += report.mismatches.len();
                for m in &report.mismatches {
                    let mut v = serde_json::to_value(m).map_err(io::Error::other)?;
                    let obj = v.as_object_mut().expect("mismatch serializes to an object");
                    obj.insert("seed".to_string(), json!(seed));
                    obj.insert("shape".to_string(), json!(shape));
                    writeln!(out, "{}", serde_json::to_string(&v).map_err(io::Error::other)?)?;
                }
            }
        }
        let shapes = if acyclic { "acyclic" } else { "acyclic and loop" };
        writeln!(
            out,
            "checked {programs_checked} generated programs ({n} seeds, {shapes}): {total_mismatches} mismatches"
        )?;
        Ok(if total_mismatches > 0 { EXIT_INPUT } else { EXIT_OK })
    } else {
        let file = file.expect("non-random mode always has a file");
        let program = match load_program(file, err)? {
            Ok(p) => p,
            Err(code) => return Ok(code),
        };
        let report = match differential_check(&program, unroll, cap) {
            Ok(r) => r,
            Err(e) => {
                writeln!(err, "error: {}: {e}", file.display())?;
                return Ok(differential_exit(&e));
            }
        };
        for m in &report.mismatches {
            writeln!(out, "{}", serde_json::to_string(m).map_err(io::Error::other)?)?;
        }
        let mode = match report.mode {
            CheckMode::Exact => "exact",
            CheckMode::SoundnessOnly => "soundness-only",
        };
        writeln!(
            out,
            "checked {} ({mode}, {} statements, {} variable pairs): {} mismatches",
            file.display(),
            report.stmts_checked,
            report.pairs_checked,
            report.mismatches.len()
        )?;
        Ok(if report.mismatches.is_empty() { EXIT_OK } else { EXIT_INPUT })
    }
}

fn cmd_stress(
    diamonds: usize,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<i32> {
    let program = diamond_stress_program(diamonds);
    let lowered = lower_phis(&program);
    let started = Instant::now();
    let analysis = match Analysis::run(&lowered) {
        Ok(a) => a,
        Err(e @ AnalysisError::NonConvergence { .. }) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_NONCONVERGENCE);
        }
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(EXIT_INPUT);
        }
    };
    let wall = started.elapsed();
    let max_classes = analysis
        .block_in
        .values()
        .chain(analysis.block_out.values())
        .map(|p| p.classes().len())
        .max()
        .unwrap_or(0);
    let total_classes: usize =
        analysis.block_out.values().map(|p| p.classes().len()).sum();
    match format {
        Format::Text => {
            writeln!(out, "diamonds: {diamonds}")?;
            writeln!(out, "blocks: {}", lowered.blocks.len())?;
            writeln!(out, "statements: {}", lowered.statements().count())?;
            writeln!(out, "sweeps: {}", analysis.iterations)?;
            writeln!(out, "max classes at a point: {max_classes}")?;
            writeln!(out, "total classes across block outs: {total_classes}")?;
            writeln!(out, "wall: {:.3} ms", wall.as_secs_f64() * 1000.0)?;
        }
        Format::Json => {
            let value = json!({
                "diamonds": diamonds,
                "blocks": lowered.blocks.len(),
                "statements": lowered.statements().count(),
                "sweeps": analysis.iterations,
                "max_classes": max_classes,
                "total_classes": total_classes,
                "wall_ms": wall.as_secs_f64() * 1000.0,
            });
            serde_json::to_writer_pretty(&mut *out, &value)?;
            writeln!(out)?;
        }
    }
    Ok(EXIT_OK)
}
