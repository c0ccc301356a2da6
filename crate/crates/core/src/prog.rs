//! Loopless programs, their operational semantics over memory structures, and
//! program graphs annotated with shape and content invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::dl::LFormula;
use crate::memstruct::{allocate, MemoryStructure, Vocabulary, ALLOC, FALSE, NULL, POSSIBLE_TARGETS, TRUE};
use crate::sl::SLFormula;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(String),
    Field(String, String),
    Null,
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Eq(Expr, Expr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    True,
    False,
    /// Only produced by instrumentation.
    Allocated(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Command {
    Assign { var: String, expr: Expr, label: Option<String> },
    FieldAssign { var: String, field: String, expr: Expr },
    Skip,
    Seq(Vec<Command>),
    New { var: String, label: Option<String> },
    Dispose(String),
    IfThen(BoolExpr, Box<Command>),
    IfThenElse(BoolExpr, Box<Command>, Box<Command>),
    Assume(BoolExpr),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn field(var: &str, f: &str) -> Self {
        Expr::Field(var.to_string(), f.to_string())
    }
}

impl BoolExpr {
    pub fn eq(a: Expr, b: Expr) -> Self {
        BoolExpr::Eq(a, b)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(a))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> Self {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    /// Variables dereferenced by the expression, in order of first occurrence.
    pub fn derefs(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_derefs(&mut out);
        out
    }

    fn collect_derefs(&self, out: &mut Vec<String>) {
        let mut add = |e: &Expr| {
            if let Expr::Field(v, _) = e {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        };
        match self {
            BoolExpr::Eq(a, b) => {
                add(a);
                add(b);
            }
            BoolExpr::Not(a) => a.collect_derefs(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.collect_derefs(out);
                b.collect_derefs(out);
            }
            BoolExpr::True | BoolExpr::False | BoolExpr::Allocated(_) => {}
        }
    }
}

impl Command {
    pub fn assign(var: &str, expr: Expr) -> Self {
        Command::Assign { var: var.to_string(), expr, label: None }
    }

    pub fn field_assign(var: &str, field: &str, expr: Expr) -> Self {
        Command::FieldAssign { var: var.to_string(), field: field.to_string(), expr }
    }

    pub fn new_cell(var: &str) -> Self {
        Command::New { var: var.to_string(), label: None }
    }

    pub fn if_else(b: BoolExpr, t: Command, e: Command) -> Self {
        Command::IfThenElse(b, Box::new(t), Box::new(e))
    }

    /// Number of primitive commands.
    pub fn len(&self) -> usize {
        match self {
            Command::Seq(xs) => xs.iter().map(|c| c.len()).sum(),
            Command::IfThen(_, a) => 1 + a.len(),
            Command::IfThenElse(_, a, b) => 1 + a.len() + b.len(),
            _ => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Labels carried by commands, in program order.
    pub fn labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |c| match c {
            Command::Assign { label: Some(l), .. } | Command::New { label: Some(l), .. } => out.push(l.clone()),
            _ => {}
        });
        out
    }

    /// Program variables mentioned.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn expr(e: &Expr, out: &mut BTreeSet<String>) {
            if let Expr::Var(v) | Expr::Field(v, _) = e {
                out.insert(v.clone());
            }
        }
        fn bexpr(b: &BoolExpr, out: &mut BTreeSet<String>) {
            match b {
                BoolExpr::Eq(x, y) => {
                    expr(x, out);
                    expr(y, out);
                }
                BoolExpr::Not(a) => bexpr(a, out),
                BoolExpr::And(a, c) | BoolExpr::Or(a, c) => {
                    bexpr(a, out);
                    bexpr(c, out);
                }
                BoolExpr::Allocated(v) => {
                    out.insert(v.clone());
                }
                BoolExpr::True | BoolExpr::False => {}
            }
        }
        self.visit(&mut |c| match c {
            Command::Assign { var, expr: e, .. } | Command::FieldAssign { var, expr: e, .. } => {
                out.insert(var.clone());
                expr(e, &mut out);
            }
            Command::New { var, .. } | Command::Dispose(var) => {
                out.insert(var.clone());
            }
            Command::IfThen(b, _) | Command::IfThenElse(b, _, _) | Command::Assume(b) => bexpr(b, &mut out),
            Command::Skip | Command::Seq(_) => {}
        });
        out
    }

    /// Fields read or written.
    pub fn fields(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn expr(e: &Expr, out: &mut BTreeSet<String>) {
            if let Expr::Field(_, f) = e {
                out.insert(f.clone());
            }
        }
        fn bexpr(b: &BoolExpr, out: &mut BTreeSet<String>) {
            match b {
                BoolExpr::Eq(x, y) => {
                    expr(x, out);
                    expr(y, out);
                }
                BoolExpr::Not(a) => bexpr(a, out),
                BoolExpr::And(a, c) | BoolExpr::Or(a, c) => {
                    bexpr(a, out);
                    bexpr(c, out);
                }
                _ => {}
            }
        }
        self.visit(&mut |c| match c {
            Command::Assign { expr: e, .. } => expr(e, &mut out),
            Command::FieldAssign { field, expr: e, .. } => {
                out.insert(field.clone());
                expr(e, &mut out);
            }
            Command::IfThen(b, _) | Command::IfThenElse(b, _, _) | Command::Assume(b) => bexpr(b, &mut out),
            _ => {}
        });
        out
    }

    fn visit(&self, f: &mut dyn FnMut(&Command)) {
        f(self);
        match self {
            Command::Seq(xs) => xs.iter().for_each(|c| c.visit(f)),
            Command::IfThen(_, a) => a.visit(f),
            Command::IfThenElse(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn is_desugared(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |c| match c {
            Command::IfThen(..) => ok = false,
            Command::FieldAssign { expr: Expr::Field(..), .. } => ok = false,
            _ => {}
        });
        ok
    }
}

/// Rewrites `if b then S` into `if b then S else skip` and splits
/// `a.f := b.g` through a fresh temporary.
pub fn desugar(s: &Command) -> Command {
    let mut used = s.vars();
    let mut counter = 0;
    desugar_with(s, &mut used, &mut counter)
}

fn fresh_tmp(used: &mut BTreeSet<String>, counter: &mut usize) -> String {
    loop {
        let name = format!("tmp_{counter}");
        *counter += 1;
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn desugar_with(s: &Command, used: &mut BTreeSet<String>, counter: &mut usize) -> Command {
    match s {
        Command::IfThen(b, a) => {
            Command::IfThenElse(b.clone(), Box::new(desugar_with(a, used, counter)), Box::new(Command::Skip))
        }
        Command::IfThenElse(b, x, y) => Command::IfThenElse(
            b.clone(),
            Box::new(desugar_with(x, used, counter)),
            Box::new(desugar_with(y, used, counter)),
        ),
        Command::Seq(xs) => Command::Seq(xs.iter().map(|c| desugar_with(c, used, counter)).collect()),
        Command::FieldAssign { var, field, expr: Expr::Field(v2, f2) } => {
            let tmp = fresh_tmp(used, counter);
            Command::Seq(vec![
                Command::assign(&tmp, Expr::Field(v2.clone(), f2.clone())),
                Command::field_assign(var, field, Expr::Var(tmp)),
            ])
        }
        other => other.clone(),
    }
}

/// Gives every `new` and every field read a label `{prefix}{k}`, skipping
/// names in `taken`. Existing labels are kept.
pub fn assign_labels(s: &Command, prefix: &str, taken: &mut BTreeSet<String>) -> Command {
    let mut next = 0usize;
    assign_labels_with(s, prefix, taken, &mut next)
}

fn fresh_label(prefix: &str, taken: &mut BTreeSet<String>, next: &mut usize) -> String {
    loop {
        let name = format!("{prefix}{next}");
        *next += 1;
        if taken.insert(name.clone()) {
            return name;
        }
    }
}

fn assign_labels_with(s: &Command, prefix: &str, taken: &mut BTreeSet<String>, next: &mut usize) -> Command {
    match s {
        Command::Assign { var, expr: expr @ Expr::Field(..), label: None } => {
            Command::Assign { var: var.clone(), expr: expr.clone(), label: Some(fresh_label(prefix, taken, next)) }
        }
        Command::New { var, label: None } => {
            Command::New { var: var.clone(), label: Some(fresh_label(prefix, taken, next)) }
        }
        Command::Seq(xs) => Command::Seq(xs.iter().map(|c| assign_labels_with(c, prefix, taken, next)).collect()),
        Command::IfThen(b, a) => Command::IfThen(b.clone(), Box::new(assign_labels_with(a, prefix, taken, next))),
        Command::IfThenElse(b, x, y) => Command::IfThenElse(
            b.clone(),
            Box::new(assign_labels_with(x, prefix, taken, next)),
            Box::new(assign_labels_with(y, prefix, taken, next)),
        ),
        other => other.clone(),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgError {
    #[error("variable `{0}` is not interpreted")]
    UnknownVar(String),
    #[error("field `{0}` is not interpreted")]
    UnknownField(String),
}

/// Label values: the element read or allocated by each labelled command.
pub type Choices = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Result(MemoryStructure),
    Abort,
    /// `new` found MemPool empty; a limitation of finite structures.
    OutOfReserve,
}

impl RunOutcome {
    pub fn structure(&self) -> Option<&MemoryStructure> {
        match self {
            RunOutcome::Result(m) => Some(m),
            _ => None,
        }
    }
}

/// The outcome together with the label values the run used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub outcome: RunOutcome,
    pub trace: Choices,
}

enum Step {
    Continue,
    Abort,
    OutOfReserve,
}

struct Interp<'a> {
    vocab: &'a Vocabulary,
    choices: Option<&'a Choices>,
    trace: Choices,
}

fn constant(m: &MemoryStructure, name: &str) -> Result<usize, ProgError> {
    m.constant(name).ok_or_else(|| ProgError::UnknownVar(name.to_string()))
}

impl<'a> Interp<'a> {
    /// `None` stands for err: dereferencing an unallocated variable.
    fn expr(&self, m: &MemoryStructure, e: &Expr) -> Result<Option<usize>, ProgError> {
        Ok(match e {
            Expr::Var(v) => Some(constant(m, v)?),
            Expr::Null => Some(constant(m, NULL)?),
            Expr::True => Some(constant(m, TRUE)?),
            Expr::False => Some(constant(m, FALSE)?),
            Expr::Field(v, f) => {
                let a = constant(m, v)?;
                if !m.alloc().contains(a) {
                    None
                } else {
                    let rel = m.binary(f).ok_or_else(|| ProgError::UnknownField(f.clone()))?;
                    rel.row(a).first()
                }
            }
        })
    }

    fn bexpr(&self, m: &MemoryStructure, b: &BoolExpr) -> Result<Option<bool>, ProgError> {
        Ok(match b {
            BoolExpr::True => Some(true),
            BoolExpr::False => Some(false),
            BoolExpr::Allocated(v) => Some(m.alloc().contains(constant(m, v)?)),
            BoolExpr::Eq(x, y) => match (self.expr(m, x)?, self.expr(m, y)?) {
                (Some(a), Some(c)) => Some(a == c),
                _ => None,
            },
            BoolExpr::Not(a) => self.bexpr(m, a)?.map(|v| !v),
            BoolExpr::And(a, c) => match (self.bexpr(m, a)?, self.bexpr(m, c)?) {
                (Some(x), Some(y)) => Some(x && y),
                _ => None,
            },
            BoolExpr::Or(a, c) => match (self.bexpr(m, a)?, self.bexpr(m, c)?) {
                (Some(x), Some(y)) => Some(x || y),
                _ => None,
            },
        })
    }

    fn exec(&mut self, m: &mut MemoryStructure, s: &Command) -> Result<Step, ProgError> {
        match s {
            Command::Skip => Ok(Step::Continue),
            Command::Seq(xs) => {
                for c in xs {
                    match self.exec(m, c)? {
                        Step::Continue => {}
                        other => return Ok(other),
                    }
                }
                Ok(Step::Continue)
            }
            Command::Assign { var, expr, label } => {
                let Some(v) = self.expr(m, expr)? else { return Ok(Step::Abort) };
                if let Some(y) = label {
                    if let Some(&d) = self.choices.and_then(|c| c.get(y)) {
                        if d != v {
                            return Ok(Step::Abort);
                        }
                    }
                    self.trace.insert(y.clone(), v);
                }
                m.set_const(var, v);
                Ok(Step::Continue)
            }
            Command::FieldAssign { var, field, expr } => {
                let a = constant(m, var)?;
                if !m.alloc().contains(a) {
                    return Ok(Step::Abort);
                }
                let Some(v) = self.expr(m, expr)? else { return Ok(Step::Abort) };
                if m.binary(field).is_none() {
                    return Err(ProgError::UnknownField(field.clone()));
                }
                m.set_field(field, a, v);
                Ok(Step::Continue)
            }
            Command::New { var, label } => {
                let pool = m.mempool();
                let chosen = label.as_ref().and_then(|y| self.choices.and_then(|c| c.get(y)).copied());
                let t = match chosen {
                    Some(d) if pool.contains(d) => d,
                    Some(_) => return Ok(Step::Abort),
                    None => match pool.first() {
                        Some(t) => t,
                        None => return Ok(Step::OutOfReserve),
                    },
                };
                *m = allocate(m, t).expect("chosen element is in MemPool");
                m.set_const(var, t);
                if let Some(y) = label {
                    self.trace.insert(y.clone(), t);
                }
                Ok(Step::Continue)
            }
            Command::Dispose(var) => {
                let a = constant(m, var)?;
                let mut alloc = m.alloc();
                if !alloc.contains(a) {
                    return Ok(Step::Abort);
                }
                alloc.remove(a);
                m.set_unary(ALLOC, alloc);
                let mut targets = m.unary(POSSIBLE_TARGETS).unwrap_or_default();
                targets.insert(a);
                m.set_unary(POSSIBLE_TARGETS, targets);
                let null = constant(m, NULL)?;
                for f in &self.vocab.fields {
                    if m.binary(f).is_some() {
                        m.set_field(f, a, null);
                    }
                }
                Ok(Step::Continue)
            }
            Command::IfThen(b, a) => match self.bexpr(m, b)? {
                None => Ok(Step::Abort),
                Some(true) => self.exec(m, a),
                Some(false) => Ok(Step::Continue),
            },
            Command::IfThenElse(b, x, y) => match self.bexpr(m, b)? {
                None => Ok(Step::Abort),
                Some(true) => self.exec(m, x),
                Some(false) => self.exec(m, y),
            },
            Command::Assume(b) => match self.bexpr(m, b)? {
                Some(true) => Ok(Step::Continue),
                _ => Ok(Step::Abort),
            },
        }
    }
}

/// Executes `s` on `m`. With `choices`, every labelled command must produce the
/// chosen value, or the run aborts. Relations other than fields, variables and
/// the address partition are carried over unchanged.
pub fn run(s: &Command, m: &MemoryStructure, vocab: &Vocabulary, choices: Option<&Choices>) -> Result<Run, ProgError> {
    let mut interp = Interp { vocab, choices, trace: Choices::new() };
    let mut work = m.clone();
    let outcome = match interp.exec(&mut work, s)? {
        Step::Continue => RunOutcome::Result(work),
        Step::Abort => RunOutcome::Abort,
        Step::OutOfReserve => RunOutcome::OutOfReserve,
    };
    Ok(Run { outcome, trace: interp.trace })
}

/// Shape, definitions and content invariant of a location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub shp: SLFormula,
    /// Equivalences fixing the remaining symbols in terms of the others; assumed
    /// on both sides of every verification condition.
    pub def: LFormula,
    pub cnt: LFormula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    /// The code as written.
    pub source: Command,
    /// Desugared and labelled.
    pub code: Command,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramOptions {
    pub bound: usize,
    pub reserve: usize,
}

impl Default for ProgramOptions {
    fn default() -> Self {
        ProgramOptions { bound: 6, reserve: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramGraph {
    pub vocab: Vocabulary,
    /// Declarations in source order.
    pub declared_fields: Vec<String>,
    pub declared_vars: Vec<String>,
    pub declared_concepts: Vec<String>,
    pub declared_roles: Vec<String>,
    pub ghosts: Vec<String>,
    /// Partition concepts `P1..Pk` shared by all locations.
    pub partitions: Vec<String>,
    pub formulas: Vec<(String, LFormula)>,
    pub locations: Vec<Location>,
    pub init: String,
    pub edges: Vec<Edge>,
    pub options: ProgramOptions,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("no edge {0} -> {1}")]
    UnknownEdge(String, String),
    #[error("path edges are not consecutive at {0}")]
    Disconnected(String),
}

impl ProgramGraph {
    pub fn location(&self, name: &str) -> Result<&Location, GraphError> {
        self.locations.iter().find(|l| l.name == name).ok_or_else(|| GraphError::UnknownLocation(name.to_string()))
    }

    pub fn edge(&self, from: &str, to: &str) -> Result<&Edge, GraphError> {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .ok_or_else(|| GraphError::UnknownEdge(from.to_string(), to.to_string()))
    }

    pub fn formula(&self, name: &str) -> Option<&LFormula> {
        self.formulas.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn out_edges<'a>(&'a self, from: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == from)
    }

    /// Every label used by edge code.
    pub fn labels(&self) -> Vec<String> {
        self.edges.iter().flat_map(|e| e.code.labels()).collect()
    }
}

#[derive(Debug, Error)]
pub enum PathError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Prog(#[from] ProgError),
}

/// Runs the edge programs along `path`; the empty path returns `m`.
pub fn run_path(g: &ProgramGraph, path: &[(String, String)], m: &MemoryStructure) -> Result<RunOutcome, PathError> {
    let mut cur = m.clone();
    for (i, (from, to)) in path.iter().enumerate() {
        if i > 0 && path[i - 1].1 != *from {
            return Err(GraphError::Disconnected(from.clone()).into());
        }
        let e = g.edge(from, to)?;
        match run(&e.code, &cur, &g.vocab, None)?.outcome {
            RunOutcome::Result(next) => cur = next,
            other => return Ok(other),
        }
    }
    Ok(RunOutcome::Result(cur))
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Var(v) => write!(f, "{v}"),
        Expr::Field(v, g) => write!(f, "{v}.{g}"),
        Expr::Null => write!(f, "null"),
        Expr::True => write!(f, "T"),
        Expr::False => write!(f, "F"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        _ => 3,
    }
}

fn write_bool(f: &mut fmt::Formatter<'_>, b: &BoolExpr, min: u8) -> fmt::Result {
    let p = bool_prec(b);
    if p < min {
        write!(f, "(")?;
    }
    match b {
        BoolExpr::Eq(x, y) => write!(f, "{x} = {y}")?,
        BoolExpr::Not(a) => {
            write!(f, "~(")?;
            write_bool(f, a, 1)?;
            write!(f, ")")?;
        }
        BoolExpr::And(a, c) => {
            write_bool(f, a, 2)?;
            write!(f, " and ")?;
            write_bool(f, c, 3)?;
        }
        BoolExpr::Or(a, c) => {
            write_bool(f, a, 1)?;
            write!(f, " or ")?;
            write_bool(f, c, 2)?;
        }
        BoolExpr::True => write!(f, "true")?,
        BoolExpr::False => write!(f, "false")?,
        BoolExpr::Allocated(v) => write!(f, "allocated({v})")?,
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_bool(f, self, 1)
    }
}

fn write_cmd(f: &mut fmt::Formatter<'_>, c: &Command, indent: usize, labels: bool) -> fmt::Result {
    let pad = "  ".repeat(indent);
    let label = |l: &Option<String>| match l {
        Some(y) if labels => format!("{y}: "),
        _ => String::new(),
    };
    match c {
        Command::Seq(xs) => {
            for x in xs {
                write_cmd(f, x, indent, labels)?;
            }
            Ok(())
        }
        Command::Skip => writeln!(f, "{pad}skip;"),
        Command::Assign { var, expr, label: l } => writeln!(f, "{pad}{}{var} := {expr};", label(l)),
        Command::FieldAssign { var, field, expr } => writeln!(f, "{pad}{var}.{field} := {expr};"),
        Command::New { var, label: l } => writeln!(f, "{pad}{}{var} := new;", label(l)),
        Command::Dispose(v) => writeln!(f, "{pad}dispose({v});"),
        Command::Assume(b) => writeln!(f, "{pad}assume({b});"),
        Command::IfThen(b, a) => {
            writeln!(f, "{pad}if ({b}) {{")?;
            write_cmd(f, a, indent + 1, labels)?;
            writeln!(f, "{pad}}}")
        }
        Command::IfThenElse(b, x, y) => {
            writeln!(f, "{pad}if ({b}) {{")?;
            write_cmd(f, x, indent + 1, labels)?;
            writeln!(f, "{pad}}} else {{")?;
            write_cmd(f, y, indent + 1, labels)?;
            writeln!(f, "{pad}}}")
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let indent = f.width().unwrap_or(0);
        write_cmd(f, self, indent, f.alternate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memstruct::validate;

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("next").unwrap();
        v.add_field("g").unwrap();
        for x in ["x", "y", "a", "b"] {
            v.add_var(x).unwrap();
        }
        v
    }

    #[test]
    fn skip_is_identity() {
        let v = vocab();
        let m = MemoryStructure::skeleton(&v, 1, 0, 1);
        assert_eq!(run(&Command::Skip, &m, &v, None).unwrap().outcome, RunOutcome::Result(m));
    }

    #[test]
    fn dispose_unallocated_aborts() {
        let v = vocab();
        let m = MemoryStructure::skeleton(&v, 1, 0, 1);
        assert_eq!(run(&Command::Dispose("x".into()), &m, &v, None).unwrap().outcome, RunOutcome::Abort);
    }

    #[test]
    fn new_then_link() {
        let v = vocab();
        let mut m = MemoryStructure::skeleton(&v, 1, 0, 1);
        m.set_const("y", 3);
        let s = Command::Seq(vec![Command::new_cell("x"), Command::field_assign("x", "next", Expr::var("y"))]);
        let RunOutcome::Result(m2) = run(&s, &m, &v, None).unwrap().outcome else { panic!() };
        assert!(m2.alloc().contains(4));
        assert_eq!(m2.constant("x"), Some(4));
        assert_eq!(m2.field_value("next", 4), Some(3));
        assert_eq!(validate(&m2, &v).iter().map(|x| x.condition).collect::<Vec<_>>(), vec![10]);
        assert_eq!(
            run(&Command::Seq(vec![Command::new_cell("x"), Command::new_cell("x")]), &m, &v, None).unwrap().outcome,
            RunOutcome::OutOfReserve
        );
    }

    #[test]
    fn labelled_reads_must_match() {
        let v = vocab();
        let mut m = MemoryStructure::skeleton(&v, 2, 0, 1);
        m.set_const("a", 3);
        m.set_field("next", 3, 4);
        let s = Command::Assign { var: "b".into(), expr: Expr::field("a", "next"), label: Some("y0".into()) };
        let free = run(&s, &m, &v, None).unwrap();
        assert_eq!(free.trace.get("y0"), Some(&4));
        let ok: Choices = [("y0".to_string(), 4)].into_iter().collect();
        assert!(matches!(run(&s, &m, &v, Some(&ok)).unwrap().outcome, RunOutcome::Result(_)));
        let bad: Choices = [("y0".to_string(), 3)].into_iter().collect();
        assert_eq!(run(&s, &m, &v, Some(&bad)).unwrap().outcome, RunOutcome::Abort);
    }

    #[test]
    fn plain_reads_are_total() {
        let v = vocab();
        let m = MemoryStructure::skeleton(&v, 0, 1, 1);
        let mut m2 = m.clone();
        m2.set_const("y", 3);
        let s = Command::assign("x", Expr::var("y"));
        assert!(matches!(run(&s, &m2, &v, None).unwrap().outcome, RunOutcome::Result(_)));
        let d = Command::assign("x", Expr::field("y", "next"));
        assert_eq!(run(&d, &m2, &v, None).unwrap().outcome, RunOutcome::Abort);
    }

    #[test]
    fn desugaring() {
        let b = BoolExpr::eq(Expr::var("x"), Expr::Null);
        let s = Command::IfThen(b.clone(), Box::new(Command::Skip));
        assert_eq!(desugar(&s), Command::if_else(b, Command::Skip, Command::Skip));
        let plain = Command::Seq(vec![Command::assign("x", Expr::Null)]);
        assert_eq!(desugar(&plain), plain);
        let fa = Command::field_assign("a", "next", Expr::field("b", "g"));
        assert_eq!(
            desugar(&fa),
            Command::Seq(vec![
                Command::assign("tmp_0", Expr::field("b", "g")),
                Command::field_assign("a", "next", Expr::var("tmp_0")),
            ])
        );
    }

    #[test]
    fn labels_are_fresh() {
        let s = Command::Seq(vec![
            Command::new_cell("x"),
            Command::assign("y", Expr::field("x", "next")),
            Command::assign("y", Expr::var("x")),
        ]);
        let mut taken = BTreeSet::new();
        let l = assign_labels(&s, "y", &mut taken);
        assert_eq!(l.labels(), vec!["y0", "y1"]);
        let again = assign_labels(&s, "y", &mut taken);
        assert_eq!(again.labels(), vec!["y2", "y3"]);
    }
}
