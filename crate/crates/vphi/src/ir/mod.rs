//! Textual SSA intermediate representation.
//!
//! A program is a list of named basic blocks. Each block declares its
//! predecessors (at most two) and holds straight-line statements. Blocks
//! named `entry` and `exit` are mandatory and must be empty in source
//! programs. Variables that are used but never defined are treated as
//! opaque program inputs.
//!
//! The concrete syntax is line oriented:
//!
//! ```text
//! # diamond with a redundant sum after the join
//! block entry:
//! block B1:
//!   preds: entry
//!   p1 = x1 + y1
//! block B2:
//!   preds: entry
//!   q2 = x2 + y2
//! block B3:
//!   preds: B1, B2
//!   x3 = phi(x1, x2)
//!   y3 = phi(y1, y2)
//!   w3 = x3 + y3
//! block exit:
//!   preds: B3
//! ```

mod lower;
mod parse;
mod validate;

pub use lower::lower_phis;
pub use parse::{parse_program, ParseError};
pub use validate::{validate_ssa, Site, ValidationReport, Violation, ViolationKind};

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a block within [`Program::blocks`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub u32);

/// Globally unique statement identifier, stable across phi lowering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StmtId(pub u32);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Operand of a binary expression: a variable name or an integer literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Var(String),
    Const(i64),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "{v}"),
            Operand::Const(c) => write!(f, "{c}"),
        }
    }
}

/// Right-hand side of a statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    Const(i64),
    Var(String),
    BinOp { op: char, left: Operand, right: Operand },
    /// `phi(a, b)`: `a` flows in from the first predecessor, `b` from the
    /// second. Only valid at the top of a two-predecessor block.
    Phi { left: String, right: String },
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Const(c) => write!(f, "{c}"),
            Rhs::Var(v) => write!(f, "{v}"),
            Rhs::BinOp { op, left, right } => write!(f, "{left} {op} {right}"),
            Rhs::Phi { left, right } => write!(f, "phi({left}, {right})"),
        }
    }
}

/// A single `target = rhs` statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Statement {
    pub id: StmtId,
    pub target: String,
    pub rhs: Rhs,
    /// True for copies that [`lower_phis`] appended to a predecessor block.
    /// The pair of copies produced from one phi counts as a single
    /// definition for SSA validation purposes.
    pub phi_copy: bool,
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.target, self.rhs)
    }
}

/// A basic block: a name, predecessor list, and statements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub name: String,
    pub preds: Vec<BlockId>,
    pub stmts: Vec<Statement>,
}

/// A whole program. Blocks appear in source order; `entry` and `exit`
/// always exist. Successor lists are derived from predecessor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub blocks: Vec<Block>,
    pub entry: BlockId,
    pub exit: BlockId,
    next_stmt: u32,
}

impl Program {
    pub(crate) fn new(blocks: Vec<Block>, entry: BlockId, exit: BlockId, next_stmt: u32) -> Self {
        Program { blocks, entry, exit, next_stmt }
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id.0 as usize]
    }

    pub fn block_by_name(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Allocates a fresh statement id (used by phi lowering).
    pub(crate) fn fresh_stmt_id(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        id
    }

    /// Successors of `id`, in source order of the successor blocks.
    pub fn successors(&self, id: BlockId) -> Vec<BlockId> {
        self.blocks
            .iter()
            .filter(|b| b.preds.contains(&id))
            .map(|b| b.id)
            .collect()
    }

    /// All statements in block order, with their owning block.
    pub fn statements(&self) -> impl Iterator<Item = (&Block, &Statement)> {
        self.blocks.iter().flat_map(|b| b.stmts.iter().map(move |s| (b, s)))
    }

    pub fn stmt(&self, id: StmtId) -> Option<(&Block, &Statement)> {
        self.statements().find(|(_, s)| s.id == id)
    }

    /// Set of variables that have at least one definition.
    pub fn defined_vars(&self) -> HashSet<String> {
        self.statements().map(|(_, s)| s.target.clone()).collect()
    }

    /// Variables that are used but never defined: the program inputs.
    pub fn input_vars(&self) -> Vec<String> {
        let defined = self.defined_vars();
        let mut seen = HashSet::new();
        let mut inputs = Vec::new();
        let mut consider = |name: &String| {
            if !defined.contains(name) && seen.insert(name.clone()) {
                inputs.push(name.clone());
            }
        };
        for (_, s) in self.statements() {
            match &s.rhs {
                Rhs::Const(_) => {}
                Rhs::Var(v) => consider(v),
                Rhs::BinOp { left, right, .. } => {
                    for o in [left, right] {
                        if let Operand::Var(v) = o {
                            consider(v);
                        }
                    }
                }
                Rhs::Phi { left, right } => {
                    consider(left);
                    consider(right);
                }
            }
        }
        inputs.sort();
        inputs
    }

    /// Reverse postorder of the blocks reachable from `entry`, with DFS
    /// child order equal to source order. Every forward-edge source
    /// precedes its target; `entry` comes first.
    pub fn reverse_postorder(&self) -> Vec<BlockId> {
        let succs: Vec<Vec<BlockId>> =
            self.blocks.iter().map(|b| self.successors(b.id)).collect();
        let mut visited = vec![false; self.blocks.len()];
        let mut post = Vec::new();
        // Iterative DFS that mirrors the recursive visit order.
        let mut stack: Vec<(BlockId, usize)> = vec![(self.entry, 0)];
        visited[self.entry.0 as usize] = true;
        while let Some(&mut (b, ref mut next)) = stack.last_mut() {
            let children = &succs[b.0 as usize];
            if *next < children.len() {
                let c = children[*next];
                *next += 1;
                if !visited[c.0 as usize] {
                    visited[c.0 as usize] = true;
                    stack.push((c, 0));
                }
            } else {
                post.push(b);
                stack.pop();
            }
        }
        post.reverse();
        post
    }

    /// Edges `(from, to)` whose target is an ancestor on the DFS stack,
    /// i.e. the loop back edges for reducible graphs. Any cycle in the
    /// graph contains at least one of these.
    pub fn back_edges(&self) -> Vec<(BlockId, BlockId)> {
        let succs: Vec<Vec<BlockId>> =
            self.blocks.iter().map(|b| self.successors(b.id)).collect();
        let mut visited = vec![false; self.blocks.len()];
        let mut on_stack = vec![false; self.blocks.len()];
        let mut edges = Vec::new();
        let mut stack: Vec<(BlockId, usize)> = vec![(self.entry, 0)];
        visited[self.entry.0 as usize] = true;
        on_stack[self.entry.0 as usize] = true;
        while let Some(&mut (b, ref mut next)) = stack.last_mut() {
            let children = &succs[b.0 as usize];
            if *next < children.len() {
                let c = children[*next];
                *next += 1;
                if on_stack[c.0 as usize] {
                    edges.push((b, c));
                } else if !visited[c.0 as usize] {
                    visited[c.0 as usize] = true;
                    on_stack[c.0 as usize] = true;
                    stack.push((c, 0));
                }
            } else {
                on_stack[b.0 as usize] = false;
                stack.pop();
            }
        }
        edges
    }

    pub fn has_cycle(&self) -> bool {
        !self.back_edges().is_empty()
    }

    /// Canonical text form; `parse_program(p.render())` reproduces `p` for
    /// programs that came from the parser.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&format!("block {}:\n", b.name));
            if !b.preds.is_empty() {
                let names: Vec<&str> =
                    b.preds.iter().map(|&p| self.block(p).name.as_str()).collect();
                out.push_str(&format!("  preds: {}\n", names.join(", ")));
            }
            for s in &b.stmts {
                out.push_str(&format!("  {s}\n"));
            }
        }
        out
    }

    /// Map from block name to id, for parsers and tests.
    pub fn name_map(&self) -> HashMap<String, BlockId> {
        self.blocks.iter().map(|b| (b.name.clone(), b.id)).collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
