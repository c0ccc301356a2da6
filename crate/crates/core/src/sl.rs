//! The separation-logic fragment with list segments, its semantics over memory
//! structures, and the stack/heap view of a structure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memstruct::{
    ElemSet, MemoryStructure, Vocabulary, ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE,
};

/// The field followed by `ls` segments.
pub const LIST_FIELD: &str = "next";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlExpr {
    Var(String),
    Null,
}

impl SlExpr {
    pub fn var(name: &str) -> Self {
        if name == NULL {
            SlExpr::Null
        } else {
            SlExpr::Var(name.to_string())
        }
    }

    /// Name of the constant denoting this expression.
    pub fn constant(&self) -> &str {
        match self {
            SlExpr::Var(v) => v,
            SlExpr::Null => NULL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PureAtom {
    Eq(SlExpr, SlExpr),
    Neq(SlExpr, SlExpr),
    True,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Chunk {
    PointsTo { var: String, fields: Vec<(String, SlExpr)> },
    Ls(SlExpr, SlExpr),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Spatial {
    Emp,
    Sep(Vec<Chunk>),
}

/// `Π | Σ`. An empty pure part means `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SLFormula {
    pub pure: Vec<PureAtom>,
    pub spatial: Spatial,
}

impl SLFormula {
    pub fn new(pure: Vec<PureAtom>, chunks: Vec<Chunk>) -> Self {
        let spatial = if chunks.is_empty() { Spatial::Emp } else { Spatial::Sep(chunks) };
        SLFormula { pure, spatial }
    }

    pub fn chunks(&self) -> &[Chunk] {
        match &self.spatial {
            Spatial::Emp => &[],
            Spatial::Sep(c) => c,
        }
    }

    /// Variables mentioned anywhere in the formula.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |e: &SlExpr| {
            if let SlExpr::Var(v) = e {
                out.insert(v.clone());
            }
        };
        for a in &self.pure {
            if let PureAtom::Eq(x, y) | PureAtom::Neq(x, y) = a {
                add(x);
                add(y);
            }
        }
        for c in self.chunks() {
            match c {
                Chunk::PointsTo { var, fields } => {
                    add(&SlExpr::var(var));
                    for (_, e) in fields {
                        add(e);
                    }
                }
                Chunk::Ls(a, b) => {
                    add(a);
                    add(b);
                }
            }
        }
        out
    }
}

impl fmt::Display for SlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant())
    }
}

impl fmt::Display for PureAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PureAtom::Eq(a, b) => write!(f, "{a} = {b}"),
            PureAtom::Neq(a, b) => write!(f, "{a} != {b}"),
            PureAtom::True => write!(f, "true"),
        }
    }
}

impl fmt::Display for Chunk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chunk::Ls(a, b) => write!(f, "ls({a}, {b})"),
            Chunk::PointsTo { var, fields } => {
                let fs: Vec<String> = fields.iter().map(|(k, e)| format!("{k}: {e}")).collect();
                write!(f, "{var} |-> [{}]", fs.join(", "))
            }
        }
    }
}

impl fmt::Display for SLFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.pure.is_empty() {
            let ps: Vec<String> = self.pure.iter().map(|p| p.to_string()).collect();
            write!(f, "{} | ", ps.join(" & "))?;
        }
        match &self.spatial {
            Spatial::Emp => write!(f, "emp"),
            Spatial::Sep(cs) => {
                let cs: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
                write!(f, "{}", cs.join(" * "))
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlError {
    #[error("constant `{0}` is not interpreted")]
    UnknownConstant(String),
    #[error("field `{0}` is not interpreted")]
    UnknownField(String),
    #[error("relation `{0}` is not interpreted")]
    UnknownRelation(String),
}

fn value(m: &MemoryStructure, e: &SlExpr) -> Result<usize, SlError> {
    m.constant(e.constant()).ok_or_else(|| SlError::UnknownConstant(e.constant().to_string()))
}

/// The cell sets of the chunks, in order, if the formula holds; `None` otherwise.
pub fn chunk_partition(
    phi: &SLFormula,
    m: &MemoryStructure,
    vocab: &Vocabulary,
) -> Result<Option<Vec<ElemSet>>, SlError> {
    for a in &phi.pure {
        let ok = match a {
            PureAtom::Eq(x, y) => value(m, x)? == value(m, y)?,
            PureAtom::Neq(x, y) => value(m, x)? != value(m, y)?,
            PureAtom::True => true,
        };
        if !ok {
            return Ok(None);
        }
    }
    let alloc = m.unary(ALLOC).ok_or_else(|| SlError::UnknownRelation(ALLOC.into()))?;
    let null = value(m, &SlExpr::Null)?;
    let mut claimed = ElemSet::EMPTY;
    let mut parts = Vec::new();
    for c in phi.chunks() {
        let mut part = ElemSet::EMPTY;
        match c {
            Chunk::PointsTo { var, fields } => {
                let a = value(m, &SlExpr::var(var))?;
                if !alloc.contains(a) || claimed.contains(a) {
                    return Ok(None);
                }
                for f in &vocab.fields {
                    let rel = m.binary(f).ok_or_else(|| SlError::UnknownField(f.clone()))?;
                    let expected = match fields.iter().find(|(k, _)| k == f) {
                        Some((_, e)) => value(m, e)?,
                        None => null,
                    };
                    if rel.row(a) != ElemSet::singleton(expected) {
                        return Ok(None);
                    }
                }
                for (k, _) in fields {
                    if !vocab.fields.contains(k) {
                        return Err(SlError::UnknownField(k.clone()));
                    }
                }
                part.insert(a);
            }
            Chunk::Ls(e1, e2) => {
                let next = m.binary(LIST_FIELD).ok_or_else(|| SlError::UnknownField(LIST_FIELD.into()))?;
                let stop = value(m, e2)?;
                let mut cur = value(m, e1)?;
                while cur != stop {
                    if !alloc.contains(cur) || claimed.contains(cur) || part.contains(cur) {
                        return Ok(None);
                    }
                    part.insert(cur);
                    let row = next.row(cur);
                    if row.len() != 1 {
                        return Ok(None);
                    }
                    cur = row.first().expect("one successor");
                }
            }
        }
        claimed = claimed | part;
        parts.push(part);
    }
    if claimed != alloc {
        return Ok(None);
    }
    Ok(Some(parts))
}

pub fn eval_sl(phi: &SLFormula, m: &MemoryStructure, vocab: &Vocabulary) -> Result<bool, SlError> {
    Ok(chunk_partition(phi, m, vocab)?.is_some())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Nil,
    True,
    False,
    Addr(String),
}

/// A stack of variable values and a finite heap of cells with field values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackHeap {
    pub stack: BTreeMap<String, Value>,
    pub heap: BTreeMap<String, BTreeMap<String, Value>>,
}

fn to_value(m: &MemoryStructure, e: usize) -> Value {
    if Some(e) == m.constant(NULL) {
        Value::Nil
    } else if Some(e) == m.constant(TRUE) {
        Value::True
    } else if Some(e) == m.constant(FALSE) {
        Value::False
    } else {
        Value::Addr(m.name(e).to_string())
    }
}

pub fn to_stack_heap(m: &MemoryStructure, vocab: &Vocabulary) -> StackHeap {
    let mut sh = StackHeap::default();
    for v in &vocab.vars {
        if let Some(e) = m.constant(v) {
            sh.stack.insert(v.clone(), to_value(m, e));
        }
    }
    for a in m.alloc().iter() {
        let mut cell = BTreeMap::new();
        for f in &vocab.fields {
            if let Some(b) = m.field_value(f, a) {
                cell.insert(f.clone(), to_value(m, b));
            }
        }
        sh.heap.insert(m.name(a).to_string(), cell);
    }
    sh
}

/// Builds the structure of a stack and heap: heap cells are allocated, other
/// referenced addresses become PossibleTargets, and `reserve` fresh cells form
/// MemPool. Symbols of `vocab` that the view does not determine are empty.
pub fn from_stack_heap(sh: &StackHeap, vocab: &Vocabulary, reserve: usize) -> MemoryStructure {
    let mut names: Vec<String> = vec![NULL.into(), TRUE.into(), FALSE.into()];
    names.extend(sh.heap.keys().cloned());
    let mut dangling = BTreeSet::new();
    let values = sh.stack.values().chain(sh.heap.values().flat_map(|c| c.values()));
    for v in values {
        if let Value::Addr(a) = v {
            if !sh.heap.contains_key(a) {
                dangling.insert(a.clone());
            }
        }
    }
    names.extend(dangling.iter().cloned());
    let mut k = 0;
    let mut pool = Vec::new();
    while pool.len() < reserve {
        let candidate = format!("m{k}");
        k += 1;
        if !names.contains(&candidate) {
            pool.push(candidate);
        }
    }
    names.extend(pool.iter().cloned());
    let n = names.len();
    let mut m = MemoryStructure::new(names).expect("universe within limit");
    m.set_const(NULL, 0);
    m.set_const(TRUE, 1);
    m.set_const(FALSE, 2);
    let heap_end = 3 + sh.heap.len();
    let dangling_end = heap_end + dangling.len();
    m.set_unary(AUX, ElemSet::full(3));
    m.set_unary(ADDRESSES, ElemSet::full(n) - ElemSet::full(3));
    m.set_unary(ALLOC, (3..heap_end).collect());
    m.set_unary(POSSIBLE_TARGETS, (heap_end..dangling_end).collect());
    m.set_unary(MEMPOOL, (dangling_end..n).collect());
    let elem = |m: &MemoryStructure, v: &Value| match v {
        Value::Nil => 0,
        Value::True => 1,
        Value::False => 2,
        Value::Addr(a) => m.element(a).expect("address in universe"),
    };
    for c in &vocab.constants {
        m.set_const(c, m.constant(c).unwrap_or(0));
    }
    for (var, v) in &sh.stack {
        let e = elem(&m, v);
        m.set_const(var, e);
    }
    for u in &vocab.unary {
        if m.unary(u).is_none() {
            m.set_unary(u, ElemSet::EMPTY);
        }
    }
    for b in &vocab.binary {
        m.set_binary(b, crate::memstruct::Relation::empty(n));
    }
    for f in &vocab.fields {
        for a in 3..n {
            m.set_field(f, a, 0);
        }
    }
    for (addr, cell) in &sh.heap {
        let a = m.element(addr).expect("heap cell");
        for (f, v) in cell {
            let b = elem(&m, v);
            m.set_field(f, a, b);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memstruct::validate;

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field(LIST_FIELD).unwrap();
        for x in ["a", "b"] {
            v.add_var(x).unwrap();
        }
        v
    }

    fn ls(a: &str, b: &str) -> Chunk {
        Chunk::Ls(SlExpr::var(a), SlExpr::var(b))
    }

    #[test]
    fn emp_requires_empty_heap() {
        let v = vocab();
        let emp = SLFormula::new(vec![], vec![]);
        let m = MemoryStructure::skeleton(&v, 0, 0, 1);
        assert!(eval_sl(&emp, &m, &v).unwrap());
        let m2 = MemoryStructure::skeleton(&v, 1, 0, 1);
        assert!(!eval_sl(&emp, &m2, &v).unwrap());
    }

    #[test]
    fn ls_same_endpoints_is_empty() {
        let v = vocab();
        let phi = SLFormula::new(vec![], vec![ls("a", "a")]);
        let m = MemoryStructure::skeleton(&v, 0, 0, 1);
        assert!(eval_sl(&phi, &m, &v).unwrap());
    }

    #[test]
    fn list_and_cycle() {
        let v = vocab();
        let mut m = MemoryStructure::skeleton(&v, 3, 0, 1);
        m.set_const("a", 3);
        m.set_field("next", 3, 4);
        m.set_field("next", 4, 5);
        let phi = SLFormula::new(vec![], vec![ls("a", "null")]);
        assert!(eval_sl(&phi, &m, &v).unwrap());
        m.set_field("next", 5, 3);
        assert!(!eval_sl(&phi, &m, &v).unwrap());
        m.set_const("b", 4);
        let cyc = SLFormula::new(vec![], vec![ls("a", "b"), ls("b", "a")]);
        assert!(eval_sl(&cyc, &m, &v).unwrap());
    }

    #[test]
    fn points_to_nulls_unlisted_fields() {
        let mut v = vocab();
        v.add_field("val").unwrap();
        let mut m = MemoryStructure::skeleton(&v, 1, 0, 1);
        m.set_const("a", 3);
        let phi = SLFormula::new(
            vec![],
            vec![Chunk::PointsTo { var: "a".into(), fields: vec![("next".into(), SlExpr::Null)] }],
        );
        assert!(eval_sl(&phi, &m, &v).unwrap());
        m.set_field("val", 3, 1);
        assert!(!eval_sl(&phi, &m, &v).unwrap());
    }

    #[test]
    fn stack_heap_round_trip() {
        let v = vocab();
        let mut sh = StackHeap::default();
        sh.stack.insert("a".into(), Value::Addr("c1".into()));
        sh.stack.insert("b".into(), Value::Nil);
        sh.heap.insert("c1".into(), [("next".to_string(), Value::Addr("c2".into()))].into_iter().collect());
        sh.heap.insert("c2".into(), [("next".to_string(), Value::Nil)].into_iter().collect());
        let m = from_stack_heap(&sh, &v, 2);
        assert!(validate(&m, &v).is_empty());
        assert_eq!(to_stack_heap(&m, &v), sh);
    }

    #[test]
    fn empty_heap_view() {
        let v = vocab();
        let m = MemoryStructure::skeleton(&v, 0, 0, 1);
        let sh = to_stack_heap(&m, &v);
        assert!(sh.heap.is_empty());
        assert!(from_stack_heap(&sh, &v, 1).alloc().is_empty());
    }

    #[test]
    fn display() {
        let phi =
            SLFormula::new(vec![PureAtom::Eq(SlExpr::var("a"), SlExpr::Null)], vec![ls("a", "b"), ls("b", "null")]);
        assert_eq!(phi.to_string(), "a = null | ls(a, b) * ls(b, null)");
    }
}
