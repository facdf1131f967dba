//! Partitions of value-numbered equivalence classes.
//!
//! At every program point the analysis keeps a [`Partition`]: either ⊤
//! (point not reached yet, the identity of the join) or a set of disjoint
//! [`Class`]es. A class holds one value number, the variables and at most
//! one constant currently known to hold that value, the value expressions
//! known to compute it, and optionally a [`ValuePhiFunction`] describing
//! the value as a merge of two predecessor values at a join block.
//!
//! Value numbers are handed out by an [`Allocator`] that memoizes on
//! structural keys, so re-running a join or transfer during fixpoint
//! iteration reproduces the same numbers and the iteration can settle.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::ir::{Operand, Rhs};

/// An opaque name for a runtime value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueNumber(pub u32);

impl fmt::Display for ValueNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A binary expression over value numbers, e.g. `v1 + v2`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ValueExpression {
    pub op: char,
    #[serde(rename = "l")]
    pub left: ValueNumber,
    #[serde(rename = "r")]
    pub right: ValueNumber,
}

impl ValueExpression {
    pub fn new(op: char, left: ValueNumber, right: ValueNumber) -> Self {
        ValueExpression { op, left, right }
    }
}

impl fmt::Display for ValueExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.left, self.op, self.right)
    }
}

/// Operand of a value phi-function: a plain value number, or a nested
/// merge that has no value number of its own.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VpfOperand {
    Number(ValueNumber),
    Phi(Box<ValuePhiFunction>),
}

impl fmt::Display for VpfOperand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VpfOperand::Number(v) => write!(f, "{v}"),
            VpfOperand::Phi(p) => write!(f, "{p}"),
        }
    }
}

impl From<ValueNumber> for VpfOperand {
    fn from(v: ValueNumber) -> Self {
        VpfOperand::Number(v)
    }
}

impl From<ValuePhiFunction> for VpfOperand {
    fn from(p: ValuePhiFunction) -> Self {
        VpfOperand::Phi(Box::new(p))
    }
}

/// A merge of two values at a join block: the value is `left` when control
/// arrives through the block's first predecessor and `right` through the
/// second. Rendered as `phi.B3(v1,v4)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValuePhiFunction {
    pub block: String,
    #[serde(rename = "l")]
    pub left: VpfOperand,
    #[serde(rename = "r")]
    pub right: VpfOperand,
}

impl ValuePhiFunction {
    pub fn new(block: impl Into<String>, left: impl Into<VpfOperand>, right: impl Into<VpfOperand>) -> Self {
        ValuePhiFunction { block: block.into(), left: left.into(), right: right.into() }
    }

    /// Swaps the two sides, recursively. Joining in the opposite operand
    /// order produces annotations related by this swap.
    pub fn swapped(&self) -> Self {
        let flip = |o: &VpfOperand| match o {
            VpfOperand::Number(v) => VpfOperand::Number(*v),
            VpfOperand::Phi(p) => VpfOperand::Phi(Box::new(p.swapped())),
        };
        ValuePhiFunction { block: self.block.clone(), left: flip(&self.right), right: flip(&self.left) }
    }
}

impl fmt::Display for ValuePhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi.{}({},{})", self.block, self.left, self.right)
    }
}

/// One equivalence class. Non-empty in every partition: it has at least
/// one variable, constant, or expression.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Class {
    pub vn: ValueNumber,
    pub vars: BTreeSet<String>,
    pub consts: BTreeSet<i64>,
    pub exprs: BTreeSet<ValueExpression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vpf: Option<ValuePhiFunction>,
}

impl Class {
    pub fn new(vn: ValueNumber) -> Self {
        Class { vn, vars: BTreeSet::new(), consts: BTreeSet::new(), exprs: BTreeSet::new(), vpf: None }
    }

    pub fn with_var(mut self, var: impl Into<String>) -> Self {
        self.vars.insert(var.into());
        self
    }

    pub fn with_const(mut self, c: i64) -> Self {
        self.consts.insert(c);
        self
    }

    pub fn with_expr(mut self, e: ValueExpression) -> Self {
        self.exprs.insert(e);
        self
    }

    pub fn with_vpf(mut self, vpf: ValuePhiFunction) -> Self {
        self.vpf = Some(vpf);
        self
    }

    /// True when the class has no member left (annotations do not count).
    pub fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.consts.is_empty() && self.exprs.is_empty()
    }
}

/// A partition of values at one program point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Partition {
    /// Point not reached yet. `join(⊤, p) = p`; distinct from the empty
    /// partition, which means "reached, nothing known equivalent".
    Top,
    /// Disjoint classes, kept sorted by value number.
    Classes(Vec<Class>),
}

impl Partition {
    pub fn empty() -> Self {
        Partition::Classes(Vec::new())
    }

    /// Builds a partition from classes, sorting them into normal form.
    pub fn from_classes(mut classes: Vec<Class>) -> Self {
        classes.sort_by_key(|c| c.vn);
        let p = Partition::Classes(classes);
        debug_assert!(p.check_invariants().is_ok(), "{:?}", p.check_invariants());
        p
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Partition::Top)
    }

    pub fn classes(&self) -> &[Class] {
        match self {
            Partition::Top => &[],
            Partition::Classes(cs) => cs,
        }
    }

    fn classes_mut(&mut self) -> &mut Vec<Class> {
        match self {
            Partition::Top => panic!("mutating ⊤ partition"),
            Partition::Classes(cs) => cs,
        }
    }

    pub fn class_of_vn(&self, vn: ValueNumber) -> Option<&Class> {
        self.classes().iter().find(|c| c.vn == vn)
    }

    pub fn class_of_var(&self, var: &str) -> Option<&Class> {
        self.classes().iter().find(|c| c.vars.contains(var))
    }

    pub fn class_of_const(&self, c: i64) -> Option<&Class> {
        self.classes().iter().find(|cl| cl.consts.contains(&c))
    }

    pub fn class_with_expr(&self, e: &ValueExpression) -> Option<&Class> {
        self.classes().iter().find(|c| c.exprs.contains(e))
    }

    pub fn class_with_vpf(&self, vpf: &ValuePhiFunction) -> Option<&Class> {
        self.classes().iter().find(|c| c.vpf.as_ref() == Some(vpf))
    }

    /// Two variables are equivalent at this point iff they share a class.
    pub fn same_class(&self, x: &str, y: &str) -> bool {
        self.classes().iter().any(|c| c.vars.contains(x) && c.vars.contains(y))
    }

    /// Removes `var` from its class, dropping the class if that leaves it
    /// without members.
    pub fn remove_var(&mut self, var: &str) {
        let cs = self.classes_mut();
        if let Some(i) = cs.iter().position(|c| c.vars.contains(var)) {
            cs[i].vars.remove(var);
            if cs[i].is_empty() {
                cs.remove(i);
            }
        }
    }

    /// Removes the class with number `vn`, if present.
    pub fn remove_class(&mut self, vn: ValueNumber) {
        let cs = self.classes_mut();
        if let Some(i) = cs.iter().position(|c| c.vn == vn) {
            cs.remove(i);
        }
    }

    /// Inserts a class at its sorted position. The value number must not
    /// already be present.
    pub fn push_class(&mut self, class: Class) {
        debug_assert!(self.class_of_vn(class.vn).is_none(), "duplicate {}", class.vn);
        let cs = self.classes_mut();
        let at = cs.partition_point(|c| c.vn < class.vn);
        cs.insert(at, class);
    }

    /// Runs `f` on the class with number `vn`, if present.
    pub fn update_class(&mut self, vn: ValueNumber, f: impl FnOnce(&mut Class)) -> bool {
        match self {
            Partition::Top => false,
            Partition::Classes(cs) => match cs.iter_mut().find(|c| c.vn == vn) {
                Some(c) => {
                    f(c);
                    true
                }
                None => false,
            },
        }
    }

    /// Sorts classes by value number. Partitions built through this module
    /// are already normalized; this is idempotent.
    pub fn normalize(&mut self) {
        if let Partition::Classes(cs) = self {
            cs.sort_by_key(|c| c.vn);
        }
    }

    /// Checks the structural invariants: classes sorted by distinct value
    /// numbers, no member in two classes, at most one constant per class,
    /// no empty class.
    pub fn check_invariants(&self) -> Result<(), String> {
        let cs = self.classes();
        let mut vars = HashSet::new();
        let mut consts = HashSet::new();
        let mut exprs = HashSet::new();
        for (i, c) in cs.iter().enumerate() {
            if i > 0 && cs[i - 1].vn >= c.vn {
                return Err(format!("classes not sorted by vn at {}", c.vn));
            }
            if c.is_empty() {
                return Err(format!("class {} has no members", c.vn));
            }
            if c.consts.len() > 1 {
                return Err(format!("class {} holds {} constants", c.vn, c.consts.len()));
            }
            for v in &c.vars {
                if !vars.insert(v.clone()) {
                    return Err(format!("variable {v} is in two classes"));
                }
            }
            for k in &c.consts {
                if !consts.insert(*k) {
                    return Err(format!("constant {k} is in two classes"));
                }
            }
            for e in &c.exprs {
                if !exprs.insert(*e) {
                    return Err(format!("expression {e} is in two classes"));
                }
            }
        }
        Ok(())
    }

    /// Text form mirroring the usual partition notation, e.g.
    /// `{v1, x1, x3 | v2, y1, y3, v1+1}`. Expression operands whose class
    /// in this partition is a lone constant are shown as the literal.
    pub fn render_text(&self) -> String {
        match self {
            Partition::Top => "⊤".to_string(),
            Partition::Classes(cs) => {
                let body = cs.iter().map(|c| self.render_class(c)).collect::<Vec<_>>().join(" | ");
                format!("{{{body}}}")
            }
        }
    }

    fn render_operand(&self, v: ValueNumber) -> String {
        match self.class_of_vn(v) {
            Some(c) if c.vars.is_empty() && c.consts.len() == 1 => {
                c.consts.iter().next().unwrap().to_string()
            }
            _ => v.to_string(),
        }
    }

    fn render_class(&self, c: &Class) -> String {
        let mut parts = vec![c.vn.to_string()];
        parts.extend(c.vars.iter().cloned());
        parts.extend(c.consts.iter().map(|k| k.to_string()));
        parts.extend(
            c.exprs
                .iter()
                .map(|e| format!("{}{}{}", self.render_operand(e.left), e.op, self.render_operand(e.right))),
        );
        let mut s = parts.join(", ");
        if let Some(vpf) = &c.vpf {
            s.push_str(&format!(" : {vpf}"));
        }
        s
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Partition::Top => s.serialize_str("top"),
            Partition::Classes(cs) => cs.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::String(s) if s == "top" => Ok(Partition::Top),
            serde_json::Value::Array(_) => {
                let cs: Vec<Class> =
                    serde_json::from_value(v).map_err(|e| D::Error::custom(e.to_string()))?;
                Ok(Partition::Classes(cs))
            }
            other => Err(D::Error::custom(format!(
                "expected \"top\" or an array of classes, got {other}"
            ))),
        }
    }
}

/// Key under which a value number is allocated. Requesting the same key
/// again returns the same number.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AllocationKey {
    /// A literal constant.
    Const(i64),
    /// A program input (used but never defined).
    Input(String),
    /// The merge of two class values at a join block.
    Join { block: String, left: ValueNumber, right: ValueNumber },
    /// The value of a variable's defining expression. Keying new transfer
    /// classes by the SSA target keeps numbers stable across fixpoint
    /// sweeps even when the defining expression's operand numbers are
    /// still settling around a loop.
    Def(String),
}

/// Deterministic, memoized value-number source.
#[derive(Clone, Debug, Default)]
pub struct Allocator {
    memo: HashMap<AllocationKey, ValueNumber>,
    keys: Vec<AllocationKey>,
}

impl Allocator {
    pub fn new() -> Self {
        Allocator::default()
    }

    /// Returns the number for `key`, allocating the next counter value on
    /// first request. Injective over keys; never reuses a number.
    pub fn number(&mut self, key: AllocationKey) -> ValueNumber {
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = ValueNumber(self.keys.len() as u32);
        self.keys.push(key.clone());
        self.memo.insert(key, v);
        v
    }

    pub fn key_of(&self, v: ValueNumber) -> Option<&AllocationKey> {
        self.keys.get(v.0 as usize)
    }

    /// Constants and inputs denote one value everywhere in the program, so
    /// they may be treated as present on both sides of any join even when
    /// no class mentions them at some point.
    pub fn is_global_value(&self, v: ValueNumber) -> bool {
        matches!(self.key_of(v), Some(AllocationKey::Const(_) | AllocationKey::Input(_)))
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum LookupError {
    #[error("defined variable {0} is missing from the partition")]
    MissingVariable(String),
    #[error("operand lookup in ⊤ partition")]
    TopPartition,
    #[error("phi reached expression evaluation; lower the program first")]
    UnexpectedPhi,
}

/// Value number of an operand in `p`.
///
/// Variables resolve to their class. A defined variable that is missing
/// signals an analysis bug and errors out. Inputs and constants that are
/// not mentioned yet get fresh singleton classes added to `p`.
pub fn lookup_operand(
    p: &mut Partition,
    operand: &Operand,
    alloc: &mut Allocator,
    defined: &HashSet<String>,
) -> Result<ValueNumber, LookupError> {
    if p.is_top() {
        return Err(LookupError::TopPartition);
    }
    match operand {
        Operand::Var(name) => {
            if let Some(c) = p.class_of_var(name) {
                return Ok(c.vn);
            }
            if defined.contains(name) {
                return Err(LookupError::MissingVariable(name.clone()));
            }
            let vn = alloc.number(AllocationKey::Input(name.clone()));
            match p.class_of_vn(vn) {
                Some(c) => Ok(c.vn),
                None => {
                    p.push_class(Class::new(vn).with_var(name.clone()));
                    Ok(vn)
                }
            }
        }
        Operand::Const(c) => {
            if let Some(cl) = p.class_of_const(*c) {
                return Ok(cl.vn);
            }
            let vn = alloc.number(AllocationKey::Const(*c));
            p.push_class(Class::new(vn).with_const(*c));
            Ok(vn)
        }
    }
}

/// What a right-hand side evaluates to under a partition: an existing
/// value (copies and constants) or a fresh binary value expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhsValue {
    Number(ValueNumber),
    Expr(ValueExpression),
}

/// Value expression of `rhs` under `p`. Operand lookups may extend `p`
/// with constant and input classes.
pub fn value_expr(
    rhs: &Rhs,
    p: &mut Partition,
    alloc: &mut Allocator,
    defined: &HashSet<String>,
) -> Result<RhsValue, LookupError> {
    match rhs {
        Rhs::Const(c) => Ok(RhsValue::Number(lookup_operand(p, &Operand::Const(*c), alloc, defined)?)),
        Rhs::Var(v) => {
            Ok(RhsValue::Number(lookup_operand(p, &Operand::Var(v.clone()), alloc, defined)?))
        }
        Rhs::BinOp { op, left, right } => {
            let l = lookup_operand(p, left, alloc, defined)?;
            let r = lookup_operand(p, right, alloc, defined)?;
            Ok(RhsValue::Expr(ValueExpression::new(*op, l, r)))
        }
        Rhs::Phi { .. } => Err(LookupError::UnexpectedPhi),
    }
}

/// Member-wise intersection of two classes for a join at `join_block`.
///
/// Returns `None` when the classes share nothing. When both sides carry
/// the same value number the number is kept (and the annotation too, if
/// both sides agree on it); otherwise the result is a fresh merge class
/// annotated with `phi.join_block(c1.vn, c2.vn)`.
pub fn intersect_classes(
    c1: &Class,
    c2: &Class,
    join_block: &str,
    alloc: &mut Allocator,
) -> Option<Class> {
    let vars: BTreeSet<String> = c1.vars.intersection(&c2.vars).cloned().collect();
    let consts: BTreeSet<i64> = c1.consts.intersection(&c2.consts).cloned().collect();
    let exprs: BTreeSet<ValueExpression> = c1.exprs.intersection(&c2.exprs).cloned().collect();
    if vars.is_empty() && consts.is_empty() && exprs.is_empty() {
        return None;
    }
    if c1.vn == c2.vn {
        let vpf = if c1.vpf == c2.vpf { c1.vpf.clone() } else { None };
        Some(Class { vn: c1.vn, vars, consts, exprs, vpf })
    } else {
        let vn = alloc.number(AllocationKey::Join {
            block: join_block.to_string(),
            left: c1.vn,
            right: c2.vn,
        });
        let vpf = ValuePhiFunction::new(join_block, c1.vn, c2.vn);
        Some(Class { vn, vars, consts, exprs, vpf: Some(vpf) })
    }
}

/// Rewrites value numbers to a dense `v0, v1, ...` sequence in order of
/// first appearance, so dumps are stable against internal numbering.
#[derive(Debug, Default)]
pub struct Renumberer {
    map: HashMap<ValueNumber, ValueNumber>,
}

impl Renumberer {
    pub fn new() -> Self {
        Renumberer::default()
    }

    fn rename(&mut self, v: ValueNumber) -> ValueNumber {
        let next = ValueNumber(self.map.len() as u32);
        *self.map.entry(v).or_insert(next)
    }

    fn rewrite_vpf(&mut self, vpf: &mut ValuePhiFunction) {
        for op in [&mut vpf.left, &mut vpf.right] {
            match op {
                VpfOperand::Number(v) => *v = self.rename(*v),
                VpfOperand::Phi(p) => self.rewrite_vpf(p),
            }
        }
    }

    pub fn rewrite_standalone_vpf(&mut self, vpf: &mut ValuePhiFunction) {
        self.rewrite_vpf(vpf);
    }

    /// Renumbers a partition in reading order: class number first, then
    /// expression operands, then the annotation. Class positions are left
    /// untouched, so an expression that refers to a later class can hand
    /// that class a smaller number than its position suggests; the
    /// numbering stays dense over everything displayed.
    pub fn rewrite_partition(&mut self, p: &mut Partition) {
        let Partition::Classes(cs) = p else { return };
        for c in cs.iter_mut() {
            c.vn = self.rename(c.vn);
            let exprs = std::mem::take(&mut c.exprs);
            c.exprs = exprs
                .into_iter()
                .map(|e| ValueExpression::new(e.op, self.rename(e.left), self.rename(e.right)))
                .collect();
            if let Some(vpf) = &mut c.vpf {
                self.rewrite_vpf(vpf);
            }
        }
    }
}
