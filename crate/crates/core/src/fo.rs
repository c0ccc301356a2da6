//! Two-variable first-order logic with counting quantifiers, and its extension
//! with one existentially quantified forest relation.

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

use crate::memstruct::{ElemSet, MemoryStructure, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn other(self) -> Var {
        match self {
            Var::X => Var::Y,
            Var::Y => Var::X,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CountKind {
    AtLeast,
    AtMost,
    Exactly,
}

impl CountKind {
    pub fn holds(self, count: usize, k: u32) -> bool {
        let k = k as usize;
        match self {
            CountKind::AtLeast => count >= k,
            CountKind::AtMost => count <= k,
            CountKind::Exactly => count == k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FO2Formula {
    True,
    False,
    Unary(String, Term),
    Binary(String, Term, Term),
    Eq(Term, Term),
    Not(Box<FO2Formula>),
    And(Vec<FO2Formula>),
    Or(Vec<FO2Formula>),
    Implies(Box<FO2Formula>, Box<FO2Formula>),
    Iff(Box<FO2Formula>, Box<FO2Formula>),
    Forall(Var, Box<FO2Formula>),
    Exists(Var, Box<FO2Formula>),
    Count(CountKind, u32, Var, Box<FO2Formula>),
}

impl FO2Formula {
    pub fn unary(p: &str, v: Var) -> Self {
        FO2Formula::Unary(p.to_string(), Term::Var(v))
    }

    pub fn binary(r: &str, a: Var, b: Var) -> Self {
        FO2Formula::Binary(r.to_string(), Term::Var(a), Term::Var(b))
    }

    pub fn eq_const(v: Var, c: &str) -> Self {
        FO2Formula::Eq(Term::Var(v), Term::Const(c.to_string()))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: FO2Formula) -> Self {
        FO2Formula::Not(Box::new(a))
    }

    pub fn and2(a: FO2Formula, b: FO2Formula) -> Self {
        FO2Formula::And(vec![a, b])
    }

    pub fn or2(a: FO2Formula, b: FO2Formula) -> Self {
        FO2Formula::Or(vec![a, b])
    }

    pub fn implies(a: FO2Formula, b: FO2Formula) -> Self {
        FO2Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: FO2Formula, b: FO2Formula) -> Self {
        FO2Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(v: Var, a: FO2Formula) -> Self {
        FO2Formula::Forall(v, Box::new(a))
    }

    pub fn exists(v: Var, a: FO2Formula) -> Self {
        FO2Formula::Exists(v, Box::new(a))
    }

    pub fn count(kind: CountKind, k: u32, v: Var, a: FO2Formula) -> Self {
        FO2Formula::Count(kind, k, v, Box::new(a))
    }

    pub fn size(&self) -> usize {
        match self {
            FO2Formula::True
            | FO2Formula::False
            | FO2Formula::Unary(..)
            | FO2Formula::Binary(..)
            | FO2Formula::Eq(..) => 1,
            FO2Formula::Not(a)
            | FO2Formula::Forall(_, a)
            | FO2Formula::Exists(_, a)
            | FO2Formula::Count(_, _, _, a) => 1 + a.size(),
            FO2Formula::And(xs) | FO2Formula::Or(xs) => 1 + xs.iter().map(|x| x.size()).sum::<usize>(),
            FO2Formula::Implies(a, b) | FO2Formula::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoError {
    #[error("constant `{0}` is not interpreted")]
    UnknownConstant(String),
    #[error("relation `{0}` is not interpreted")]
    UnknownRelation(String),
    #[error("exhaustive forest enumeration refused for {size} elements (cap {cap})")]
    TooLargeForExhaustive { size: usize, cap: usize },
}

/// Truth values of a subformula for every assignment: bit `b` of row `a` holds
/// the value at `x = a, y = b`.
type Table = SmallVec<[u64; 8]>;

struct Evaluator<'a> {
    m: &'a MemoryStructure,
    n: usize,
    full: u64,
}

impl<'a> Evaluator<'a> {
    fn constant(&self, c: &str) -> Result<usize, FoError> {
        self.m.constant(c).ok_or_else(|| FoError::UnknownConstant(c.to_string()))
    }

    fn filled(&self, v: bool) -> Table {
        SmallVec::from_elem(if v { self.full } else { 0 }, self.n)
    }

    /// Row `a` is full when `pred(a)`.
    fn by_x(&self, pred: impl Fn(usize) -> bool) -> Table {
        (0..self.n).map(|a| if pred(a) { self.full } else { 0 }).collect()
    }

    fn by_y(&self, set: ElemSet) -> Table {
        SmallVec::from_elem(set.0, self.n)
    }

    fn unary_set(&self, p: &str) -> Result<ElemSet, FoError> {
        self.m.unary(p).ok_or_else(|| FoError::UnknownRelation(p.to_string()))
    }

    fn relation(&self, r: &str) -> Result<&'a Relation, FoError> {
        self.m.binary(r).ok_or_else(|| FoError::UnknownRelation(r.to_string()))
    }

    fn eval(&self, f: &FO2Formula) -> Result<Table, FoError> {
        Ok(match f {
            FO2Formula::True => self.filled(true),
            FO2Formula::False => self.filled(false),
            FO2Formula::Unary(p, t) => {
                let s = self.unary_set(p)?;
                match t {
                    Term::Var(Var::X) => self.by_x(|a| s.contains(a)),
                    Term::Var(Var::Y) => self.by_y(s),
                    Term::Const(c) => self.filled(s.contains(self.constant(c)?)),
                }
            }
            FO2Formula::Binary(r, t1, t2) => {
                let rel = self.relation(r)?;
                match (t1, t2) {
                    (Term::Var(Var::X), Term::Var(Var::Y)) => (0..self.n).map(|a| rel.row(a).0).collect(),
                    (Term::Var(Var::Y), Term::Var(Var::X)) => {
                        let inv = rel.inverse();
                        (0..self.n).map(|a| inv.row(a).0).collect()
                    }
                    (Term::Var(Var::X), Term::Var(Var::X)) => self.by_x(|a| rel.contains(a, a)),
                    (Term::Var(Var::Y), Term::Var(Var::Y)) => {
                        self.by_y((0..self.n).filter(|&b| rel.contains(b, b)).collect())
                    }
                    (Term::Const(c), Term::Var(v)) => {
                        let row = rel.row(self.constant(c)?);
                        match v {
                            Var::X => self.by_x(|a| row.contains(a)),
                            Var::Y => self.by_y(row),
                        }
                    }
                    (Term::Var(v), Term::Const(c)) => {
                        let col = rel.preimage(ElemSet::singleton(self.constant(c)?));
                        match v {
                            Var::X => self.by_x(|a| col.contains(a)),
                            Var::Y => self.by_y(col),
                        }
                    }
                    (Term::Const(c), Term::Const(d)) => self.filled(rel.contains(self.constant(c)?, self.constant(d)?)),
                }
            }
            FO2Formula::Eq(t1, t2) => match (t1, t2) {
                (Term::Var(a), Term::Var(b)) if a == b => self.filled(true),
                (Term::Var(_), Term::Var(_)) => (0..self.n).map(|a| 1u64 << a).collect(),
                (Term::Const(c), Term::Var(v)) | (Term::Var(v), Term::Const(c)) => {
                    let e = self.constant(c)?;
                    match v {
                        Var::X => self.by_x(|a| a == e),
                        Var::Y => self.by_y(ElemSet::singleton(e)),
                    }
                }
                (Term::Const(c), Term::Const(d)) => self.filled(self.constant(c)? == self.constant(d)?),
            },
            FO2Formula::Not(a) => self.eval(a)?.iter().map(|r| !r & self.full).collect(),
            FO2Formula::And(xs) => {
                let mut acc = self.filled(true);
                for x in xs {
                    let t = self.eval(x)?;
                    acc.iter_mut().zip(t.iter()).for_each(|(a, b)| *a &= b);
                }
                acc
            }
            FO2Formula::Or(xs) => {
                let mut acc = self.filled(false);
                for x in xs {
                    let t = self.eval(x)?;
                    acc.iter_mut().zip(t.iter()).for_each(|(a, b)| *a |= b);
                }
                acc
            }
            FO2Formula::Implies(a, b) => {
                let (ta, tb) = (self.eval(a)?, self.eval(b)?);
                ta.iter().zip(tb.iter()).map(|(p, q)| (!p | q) & self.full).collect()
            }
            FO2Formula::Iff(a, b) => {
                let (ta, tb) = (self.eval(a)?, self.eval(b)?);
                ta.iter().zip(tb.iter()).map(|(p, q)| !(p ^ q) & self.full).collect()
            }
            FO2Formula::Forall(v, a) => {
                let t = self.eval(a)?;
                match v {
                    Var::X => self.by_y(ElemSet(t.iter().fold(self.full, |acc, r| acc & r))),
                    Var::Y => self.by_x(|x| t[x] == self.full),
                }
            }
            FO2Formula::Exists(v, a) => {
                let t = self.eval(a)?;
                match v {
                    Var::X => self.by_y(ElemSet(t.iter().fold(0, |acc, r| acc | r))),
                    Var::Y => self.by_x(|x| t[x] != 0),
                }
            }
            FO2Formula::Count(kind, k, v, a) => {
                let t = self.eval(a)?;
                match v {
                    Var::X => {
                        let ok = (0..self.n)
                            .filter(|&b| kind.holds(t.iter().filter(|r| (*r >> b) & 1 == 1).count(), *k))
                            .collect();
                        self.by_y(ok)
                    }
                    Var::Y => self.by_x(|x| kind.holds(t[x].count_ones() as usize, *k)),
                }
            }
        })
    }
}

/// Truth of a sentence. Free variables, if any, are read as universally closed.
pub fn eval_fo2(f: &FO2Formula, m: &MemoryStructure) -> Result<bool, FoError> {
    let n = m.size();
    let ev = Evaluator { m, n, full: ElemSet::full(n).0 };
    let t = ev.eval(f)?;
    Ok(t.iter().all(|&r| r == ev.full))
}

/// Truth under an explicit assignment, computed by direct recursion.
pub fn eval_fo2_at(f: &FO2Formula, m: &MemoryStructure, x: usize, y: usize) -> Result<bool, FoError> {
    let val = |t: &Term, x: usize, y: usize| -> Result<usize, FoError> {
        match t {
            Term::Var(Var::X) => Ok(x),
            Term::Var(Var::Y) => Ok(y),
            Term::Const(c) => m.constant(c).ok_or_else(|| FoError::UnknownConstant(c.clone())),
        }
    };
    let set = |v: Var, e: usize| if v == Var::X { (e, y) } else { (x, e) };
    Ok(match f {
        FO2Formula::True => true,
        FO2Formula::False => false,
        FO2Formula::Unary(p, t) => {
            m.unary(p).ok_or_else(|| FoError::UnknownRelation(p.clone()))?.contains(val(t, x, y)?)
        }
        FO2Formula::Binary(r, a, b) => {
            m.binary(r).ok_or_else(|| FoError::UnknownRelation(r.clone()))?.contains(val(a, x, y)?, val(b, x, y)?)
        }
        FO2Formula::Eq(a, b) => val(a, x, y)? == val(b, x, y)?,
        FO2Formula::Not(a) => !eval_fo2_at(a, m, x, y)?,
        FO2Formula::And(xs) => {
            for a in xs {
                if !eval_fo2_at(a, m, x, y)? {
                    return Ok(false);
                }
            }
            true
        }
        FO2Formula::Or(xs) => {
            for a in xs {
                if eval_fo2_at(a, m, x, y)? {
                    return Ok(true);
                }
            }
            false
        }
        FO2Formula::Implies(a, b) => !eval_fo2_at(a, m, x, y)? || eval_fo2_at(b, m, x, y)?,
        FO2Formula::Iff(a, b) => eval_fo2_at(a, m, x, y)? == eval_fo2_at(b, m, x, y)?,
        FO2Formula::Forall(v, a) => {
            for e in 0..m.size() {
                let (x2, y2) = set(*v, e);
                if !eval_fo2_at(a, m, x2, y2)? {
                    return Ok(false);
                }
            }
            true
        }
        FO2Formula::Exists(v, a) => {
            for e in 0..m.size() {
                let (x2, y2) = set(*v, e);
                if eval_fo2_at(a, m, x2, y2)? {
                    return Ok(true);
                }
            }
            false
        }
        FO2Formula::Count(kind, k, v, a) => {
            let mut count = 0;
            for e in 0..m.size() {
                let (x2, y2) = set(*v, e);
                if eval_fo2_at(a, m, x2, y2)? {
                    count += 1;
                }
            }
            kind.holds(count, *k)
        }
    })
}

/// In-degree at most one and no directed cycle.
pub fn is_forest(rel: &Relation) -> bool {
    let n = rel.universe_size();
    let mut indeg = vec![0usize; n];
    for (_, b) in rel.pairs() {
        indeg[b] += 1;
        if indeg[b] > 1 {
            return false;
        }
    }
    // With in-degree <= 1, a cycle exists iff walking parents from some node returns to it.
    let parent: Vec<Option<usize>> = (0..n).map(|b| (0..n).find(|&a| rel.contains(a, b))).collect();
    for start in 0..n {
        let mut cur = start;
        for _ in 0..n {
            match parent[cur] {
                None => break,
                Some(p) if p == start => return false,
                Some(p) => cur = p,
            }
        }
    }
    true
}

/// The forest symbol and, for canonical construction, the list partitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CT2Formula {
    pub body: FO2Formula,
    pub forest: String,
    pub partitions: Vec<String>,
    pub list_field: String,
}

impl CT2Formula {
    pub fn new(body: FO2Formula, partitions: Vec<String>) -> Self {
        CT2Formula { body, forest: "F1".into(), partitions, list_field: crate::sl::LIST_FIELD.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForestStrategy {
    /// F1 = union over list partitions P of next restricted to P x P.
    Canonical,
    /// Every forest over the universe, up to the given universe size.
    Exhaustive { cap: usize },
}

pub const DEFAULT_EXHAUSTIVE_CAP: usize = 7;

/// The canonical forest candidate of a structure.
pub fn canonical_forest(phi: &CT2Formula, m: &MemoryStructure) -> Result<Relation, FoError> {
    let n = m.size();
    let mut f1 = Relation::empty(n);
    if phi.partitions.is_empty() {
        return Ok(f1);
    }
    let next = m.binary(&phi.list_field).ok_or_else(|| FoError::UnknownRelation(phi.list_field.clone()))?;
    for p in &phi.partitions {
        let s = m.unary(p).ok_or_else(|| FoError::UnknownRelation(p.clone()))?;
        for a in s.iter() {
            f1.set_row(a, f1.row(a) | (next.row(a) & s));
        }
    }
    Ok(f1)
}

pub fn eval_ct2(phi: &CT2Formula, m: &MemoryStructure, strategy: ForestStrategy) -> Result<bool, FoError> {
    let mut work = m.clone();
    match strategy {
        ForestStrategy::Canonical => {
            let f1 = canonical_forest(phi, m)?;
            if !is_forest(&f1) {
                return Ok(false);
            }
            work.set_binary(&phi.forest, f1);
            eval_fo2(&phi.body, &work)
        }
        ForestStrategy::Exhaustive { cap } => {
            let n = m.size();
            if n > cap {
                return Err(FoError::TooLargeForExhaustive { size: n, cap });
            }
            let mut parent = vec![None; n];
            let mut found = false;
            let mut err = None;
            enumerate_forests(&mut parent, 0, &mut |rel| {
                work.set_binary(&phi.forest, rel);
                match eval_fo2(&phi.body, &work) {
                    Ok(true) => {
                        found = true;
                        false
                    }
                    Ok(false) => true,
                    Err(e) => {
                        err = Some(e);
                        false
                    }
                }
            });
            match err {
                Some(e) => Err(e),
                None => Ok(found),
            }
        }
    }
}

/// Calls `visit` on every forest, described by a parent choice per node.
/// Stops when `visit` returns false. Returns false if stopped.
fn enumerate_forests(parent: &mut Vec<Option<usize>>, i: usize, visit: &mut dyn FnMut(Relation) -> bool) -> bool {
    let n = parent.len();
    if i == n {
        let rel = Relation::from_pairs(n, parent.iter().enumerate().filter_map(|(b, p)| p.map(|a| (a, b))));
        return visit(rel);
    }
    for choice in std::iter::once(None).chain((0..n).map(Some)) {
        if let Some(p) = choice {
            if p == i || creates_cycle(parent, i, p) {
                continue;
            }
        }
        parent[i] = choice;
        if !enumerate_forests(parent, i + 1, visit) {
            parent[i] = None;
            return false;
        }
    }
    parent[i] = None;
    true
}

fn creates_cycle(parent: &[Option<usize>], child: usize, p: usize) -> bool {
    let mut cur = Some(p);
    let mut steps = 0;
    while let Some(c) = cur {
        if c == child {
            return true;
        }
        steps += 1;
        if steps > parent.len() {
            return true;
        }
        cur = if c < child { parent[c] } else { None };
    }
    false
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Var(Var::X) => write!(f, "x"),
        Term::Var(Var::Y) => write!(f, "y"),
        Term::Const(c) => write!(f, "o:{c}"),
    }
}

fn var_name(v: Var) -> &'static str {
    match v {
        Var::X => "x",
        Var::Y => "y",
    }
}

fn fo_prec(x: &FO2Formula) -> u8 {
    match x {
        FO2Formula::Forall(..) | FO2Formula::Exists(..) | FO2Formula::Count(..) => 0,
        FO2Formula::Implies(..) | FO2Formula::Iff(..) => 1,
        FO2Formula::Or(xs) if xs.len() > 1 => 2,
        FO2Formula::And(xs) if xs.len() > 1 => 3,
        FO2Formula::Not(_) => 4,
        _ => 5,
    }
}

fn write_fo(f: &mut fmt::Formatter<'_>, x: &FO2Formula, min: u8) -> fmt::Result {
    let p = fo_prec(x);
    if p < min {
        write!(f, "(")?;
    }
    match x {
        FO2Formula::True => write!(f, "true")?,
        FO2Formula::False => write!(f, "false")?,
        FO2Formula::Unary(p, t) => {
            write!(f, "{p}(")?;
            write_term(f, t)?;
            write!(f, ")")?;
        }
        FO2Formula::Binary(r, a, b) => {
            write!(f, "{r}(")?;
            write_term(f, a)?;
            write!(f, ", ")?;
            write_term(f, b)?;
            write!(f, ")")?;
        }
        FO2Formula::Eq(a, b) => {
            write_term(f, a)?;
            write!(f, " = ")?;
            write_term(f, b)?;
        }
        FO2Formula::Not(a) => {
            write!(f, "~")?;
            write_fo(f, a, 4)?;
        }
        FO2Formula::And(xs) | FO2Formula::Or(xs) => {
            let (sep, level, empty) =
                if matches!(x, FO2Formula::And(_)) { (" & ", 3, "true") } else { (" | ", 2, "false") };
            if xs.is_empty() {
                write!(f, "{empty}")?;
            } else if xs.len() == 1 {
                write_fo(f, &xs[0], min)?;
            }
            if xs.len() > 1 {
                for (i, a) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    write_fo(f, a, level + 1)?;
                }
            }
        }
        FO2Formula::Implies(a, b) | FO2Formula::Iff(a, b) => {
            write_fo(f, a, 2)?;
            write!(f, "{}", if matches!(x, FO2Formula::Implies(..)) { " -> " } else { " <-> " })?;
            write_fo(f, b, 2)?;
        }
        FO2Formula::Forall(v, a) => {
            write!(f, "forall {}. ", var_name(*v))?;
            write_fo(f, a, 0)?;
        }
        FO2Formula::Exists(v, a) => {
            write!(f, "exists {}. ", var_name(*v))?;
            write_fo(f, a, 0)?;
        }
        FO2Formula::Count(kind, k, v, a) => {
            let op = match kind {
                CountKind::AtLeast => ">=",
                CountKind::AtMost => "<=",
                CountKind::Exactly => "=",
            };
            write!(f, "exists{op}{k} {}. ", var_name(*v))?;
            write_fo(f, a, 0)?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for FO2Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fo(f, self, 0)
    }
}

impl fmt::Display for CT2Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exists {} forest. ", self.forest)?;
        write_fo(f, &self.body, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memstruct::Vocabulary;

    fn m_with_l(size_l: usize) -> MemoryStructure {
        let mut v = Vocabulary::new();
        v.add_field("f").unwrap();
        v.add_concept("L").unwrap();
        let mut m = MemoryStructure::skeleton(&v, 3, 0, 1);
        m.set_unary("L", (3..3 + size_l).collect());
        m
    }

    #[test]
    fn fields_are_functional() {
        let m = m_with_l(0);
        let f = FO2Formula::forall(
            Var::X,
            FO2Formula::count(CountKind::AtMost, 1, Var::Y, FO2Formula::binary("f", Var::X, Var::Y)),
        );
        assert!(eval_fo2(&f, &m).unwrap());
    }

    #[test]
    fn counting() {
        let zero = FO2Formula::count(CountKind::AtLeast, 0, Var::Y, FO2Formula::False);
        assert!(eval_fo2(&zero, &m_with_l(0)).unwrap());
        let two = FO2Formula::count(CountKind::Exactly, 2, Var::Y, FO2Formula::unary("L", Var::Y));
        assert!(eval_fo2(&two, &m_with_l(2)).unwrap());
        assert!(!eval_fo2(&two, &m_with_l(3)).unwrap());
    }

    #[test]
    fn forests() {
        assert!(is_forest(&Relation::empty(4)));
        let mut chain = Relation::from_pairs(3, [(0, 1), (1, 2)]);
        assert!(is_forest(&chain));
        chain.insert(2, 0);
        assert!(!is_forest(&chain));
        assert!(!is_forest(&Relation::from_pairs(2, [(0, 0)])));
        assert!(!is_forest(&Relation::from_pairs(3, [(0, 2), (1, 2)])));
    }

    #[test]
    fn exhaustive_counts_forests() {
        // Rooted forests on n labelled nodes: (n+1)^(n-1).
        for n in 1..=5usize {
            let mut count = 0;
            enumerate_forests(&mut vec![None; n], 0, &mut |rel| {
                assert!(is_forest(&rel));
                count += 1;
                true
            });
            assert_eq!(count, (n + 1).pow(n as u32 - 1), "n = {n}");
        }
    }

    #[test]
    fn forest_free_body_matches_fo2() {
        let m = m_with_l(2);
        let body = FO2Formula::exists(Var::X, FO2Formula::unary("L", Var::X));
        let phi = CT2Formula::new(body.clone(), vec![]);
        assert_eq!(eval_ct2(&phi, &m, ForestStrategy::Canonical).unwrap(), eval_fo2(&body, &m).unwrap());
        assert_eq!(eval_ct2(&phi, &m, ForestStrategy::Exhaustive { cap: 7 }).unwrap(), eval_fo2(&body, &m).unwrap());
        assert!(matches!(
            eval_ct2(&phi, &m, ForestStrategy::Exhaustive { cap: 3 }),
            Err(FoError::TooLargeForExhaustive { .. })
        ));
    }

    #[test]
    fn table_eval_matches_recursion() {
        let m = m_with_l(2);
        let f = FO2Formula::forall(
            Var::X,
            FO2Formula::implies(
                FO2Formula::unary("L", Var::X),
                FO2Formula::exists(
                    Var::Y,
                    FO2Formula::and2(FO2Formula::binary("f", Var::Y, Var::X), FO2Formula::eq_const(Var::Y, "null")),
                ),
            ),
        );
        assert_eq!(eval_fo2(&f, &m).unwrap(), eval_fo2_at(&f, &m, 0, 0).unwrap());
    }
}
