//! The description logic L: concepts, roles and formulas, their evaluation over
//! memory structures, and simultaneous substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::memstruct::{ElemSet, MemoryStructure, Relation};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    Atomic(String),
    Nominal(String),
    Top,
    Bottom,
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Not(Box<Concept>),
    Exists(Box<Role>, Box<Concept>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Atomic(String),
    Union(Box<Role>, Box<Role>),
    Intersect(Box<Role>, Box<Role>),
    Diff(Box<Role>, Box<Role>),
    Inverse(Box<Role>),
    Product(Box<Concept>, Box<Concept>),
}

/// Formulas of L. Equivalence is not a node of its own: `equiv` builds the pair
/// of inclusions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LFormula {
    ConceptIncl(Concept, Concept),
    RoleIncl(Role, Role),
    Func(Role),
    And(Box<LFormula>, Box<LFormula>),
    Or(Box<LFormula>, Box<LFormula>),
    Not(Box<LFormula>),
    Implies(Box<LFormula>, Box<LFormula>),
}

impl Concept {
    pub fn atom(name: &str) -> Self {
        Concept::Atomic(name.to_string())
    }

    pub fn nominal(name: &str) -> Self {
        Concept::Nominal(name.to_string())
    }

    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Concept, b: Concept) -> Self {
        Concept::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Concept) -> Self {
        Concept::Not(Box::new(a))
    }

    pub fn exists(r: Role, c: Concept) -> Self {
        Concept::Exists(Box::new(r), Box::new(c))
    }

    /// Left-nested disjunction; `Bottom` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Concept>) -> Self {
        items.into_iter().reduce(Concept::or).unwrap_or(Concept::Bottom)
    }

    pub fn and_all(items: impl IntoIterator<Item = Concept>) -> Self {
        items.into_iter().reduce(Concept::and).unwrap_or(Concept::Top)
    }

    pub fn size(&self) -> usize {
        match self {
            Concept::Atomic(_) | Concept::Nominal(_) | Concept::Top | Concept::Bottom => 1,
            Concept::And(a, b) | Concept::Or(a, b) => 1 + a.size() + b.size(),
            Concept::Not(a) => 1 + a.size(),
            Concept::Exists(r, c) => 1 + r.size() + c.size(),
        }
    }
}

impl Role {
    pub fn atom(name: &str) -> Self {
        Role::Atomic(name.to_string())
    }

    pub fn union(a: Role, b: Role) -> Self {
        Role::Union(Box::new(a), Box::new(b))
    }

    pub fn intersect(a: Role, b: Role) -> Self {
        Role::Intersect(Box::new(a), Box::new(b))
    }

    pub fn diff(a: Role, b: Role) -> Self {
        Role::Diff(Box::new(a), Box::new(b))
    }

    pub fn inverse(a: Role) -> Self {
        Role::Inverse(Box::new(a))
    }

    pub fn product(a: Concept, b: Concept) -> Self {
        Role::Product(Box::new(a), Box::new(b))
    }

    /// The single pair `(o_a, o_b)`.
    pub fn pair(a: &str, b: &str) -> Self {
        Role::product(Concept::nominal(a), Concept::nominal(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Role::Atomic(_) => 1,
            Role::Union(a, b) | Role::Intersect(a, b) | Role::Diff(a, b) => 1 + a.size() + b.size(),
            Role::Inverse(a) => 1 + a.size(),
            Role::Product(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl LFormula {
    pub fn incl(a: Concept, b: Concept) -> Self {
        LFormula::ConceptIncl(a, b)
    }

    pub fn role_incl(a: Role, b: Role) -> Self {
        LFormula::RoleIncl(a, b)
    }

    pub fn equiv(a: Concept, b: Concept) -> Self {
        LFormula::and(LFormula::ConceptIncl(a.clone(), b.clone()), LFormula::ConceptIncl(b, a))
    }

    pub fn role_equiv(a: Role, b: Role) -> Self {
        LFormula::and(LFormula::RoleIncl(a.clone(), b.clone()), LFormula::RoleIncl(b, a))
    }

    pub fn func(r: Role) -> Self {
        LFormula::Func(r)
    }

    /// `⊤ ⊑ ⊤`, the formula used for `true`.
    pub fn truth() -> Self {
        LFormula::ConceptIncl(Concept::Top, Concept::Top)
    }

    pub fn and(a: LFormula, b: LFormula) -> Self {
        LFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LFormula, b: LFormula) -> Self {
        LFormula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: LFormula) -> Self {
        LFormula::Not(Box::new(a))
    }

    pub fn implies(a: LFormula, b: LFormula) -> Self {
        LFormula::Implies(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `⊤ ⊑ ⊤` when empty.
    pub fn and_all(items: impl IntoIterator<Item = LFormula>) -> Self {
        items.into_iter().reduce(LFormula::and).unwrap_or_else(LFormula::truth)
    }

    /// The top-level conjuncts, flattening nested `And` but keeping equivalences whole.
    pub fn conjuncts(&self) -> Vec<&LFormula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                LFormula::And(a, b) if as_equiv(f).is_none() => {
                    stack.push(b);
                    stack.push(a);
                }
                _ => out.push(f),
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        match self {
            LFormula::ConceptIncl(a, b) => 1 + a.size() + b.size(),
            LFormula::RoleIncl(a, b) => 1 + a.size() + b.size(),
            LFormula::Func(r) => 1 + r.size(),
            LFormula::And(a, b) | LFormula::Or(a, b) | LFormula::Implies(a, b) => 1 + a.size() + b.size(),
            LFormula::Not(a) => 1 + a.size(),
        }
    }

    pub fn symbols(&self) -> Symbols {
        let mut s = Symbols::default();
        s.formula(self);
        s
    }
}

enum EquivView<'a> {
    Concepts(&'a Concept, &'a Concept),
    Roles(&'a Role, &'a Role),
}

fn as_equiv(f: &LFormula) -> Option<EquivView<'_>> {
    if let LFormula::And(a, b) = f {
        match (a.as_ref(), b.as_ref()) {
            (LFormula::ConceptIncl(x, y), LFormula::ConceptIncl(y2, x2)) if x == x2 && y == y2 => {
                Some(EquivView::Concepts(x, y))
            }
            (LFormula::RoleIncl(x, y), LFormula::RoleIncl(y2, x2)) if x == x2 && y == y2 => {
                Some(EquivView::Roles(x, y))
            }
            _ => None,
        }
    } else {
        None
    }
}

/// Names occurring in an expression, split by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Symbols {
    pub constants: BTreeSet<String>,
    pub concepts: BTreeSet<String>,
    pub roles: BTreeSet<String>,
}

impl Symbols {
    pub fn concept(&mut self, c: &Concept) {
        match c {
            Concept::Atomic(n) => {
                self.concepts.insert(n.clone());
            }
            Concept::Nominal(n) => {
                self.constants.insert(n.clone());
            }
            Concept::Top | Concept::Bottom => {}
            Concept::And(a, b) | Concept::Or(a, b) => {
                self.concept(a);
                self.concept(b);
            }
            Concept::Not(a) => self.concept(a),
            Concept::Exists(r, c) => {
                self.role(r);
                self.concept(c);
            }
        }
    }

    pub fn role(&mut self, r: &Role) {
        match r {
            Role::Atomic(n) => {
                self.roles.insert(n.clone());
            }
            Role::Union(a, b) | Role::Intersect(a, b) | Role::Diff(a, b) => {
                self.role(a);
                self.role(b);
            }
            Role::Inverse(a) => self.role(a),
            Role::Product(a, b) => {
                self.concept(a);
                self.concept(b);
            }
        }
    }

    pub fn formula(&mut self, f: &LFormula) {
        match f {
            LFormula::ConceptIncl(a, b) => {
                self.concept(a);
                self.concept(b);
            }
            LFormula::RoleIncl(a, b) => {
                self.role(a);
                self.role(b);
            }
            LFormula::Func(r) => self.role(r),
            LFormula::And(a, b) | LFormula::Or(a, b) | LFormula::Implies(a, b) => {
                self.formula(a);
                self.formula(b);
            }
            LFormula::Not(a) => self.formula(a),
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &String> {
        self.constants.iter().chain(self.concepts.iter()).chain(self.roles.iter())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DlError {
    #[error("constant `{0}` is not interpreted")]
    UnknownConstant(String),
    #[error("concept `{0}` is not interpreted")]
    UnknownConcept(String),
    #[error("role `{0}` is not interpreted")]
    UnknownRole(String),
    #[error("substitution for `{name}` has the wrong kind: expected {expected}")]
    KindMismatch { name: String, expected: &'static str },
}

pub fn eval_concept(c: &Concept, m: &MemoryStructure) -> Result<ElemSet, DlError> {
    Ok(match c {
        Concept::Atomic(n) => m.unary(n).ok_or_else(|| DlError::UnknownConcept(n.clone()))?,
        Concept::Nominal(n) => ElemSet::singleton(m.constant(n).ok_or_else(|| DlError::UnknownConstant(n.clone()))?),
        Concept::Top => m.all(),
        Concept::Bottom => ElemSet::EMPTY,
        Concept::And(a, b) => eval_concept(a, m)? & eval_concept(b, m)?,
        Concept::Or(a, b) => eval_concept(a, m)? | eval_concept(b, m)?,
        Concept::Not(a) => eval_concept(a, m)?.complement(m.size()),
        Concept::Exists(r, c) => {
            let target = eval_concept(c, m)?;
            match r.as_ref() {
                Role::Atomic(n) => m.binary(n).ok_or_else(|| DlError::UnknownRole(n.clone()))?.preimage(target),
                Role::Product(a, b) => {
                    if (eval_concept(b, m)? & target).is_empty() {
                        ElemSet::EMPTY
                    } else {
                        eval_concept(a, m)?
                    }
                }
                _ => eval_role(r, m)?.preimage(target),
            }
        }
    })
}

pub fn eval_role(r: &Role, m: &MemoryStructure) -> Result<Relation, DlError> {
    Ok(match r {
        Role::Atomic(n) => m.binary(n).ok_or_else(|| DlError::UnknownRole(n.clone()))?.clone(),
        Role::Union(a, b) => eval_role(a, m)?.union(&eval_role(b, m)?),
        Role::Intersect(a, b) => eval_role(a, m)?.intersection(&eval_role(b, m)?),
        Role::Diff(a, b) => eval_role(a, m)?.difference(&eval_role(b, m)?),
        Role::Inverse(a) => eval_role(a, m)?.inverse(),
        Role::Product(a, b) => Relation::product(eval_concept(a, m)?, eval_concept(b, m)?, m.size()),
    })
}

pub fn eval_formula(f: &LFormula, m: &MemoryStructure) -> Result<bool, DlError> {
    Ok(match f {
        LFormula::ConceptIncl(a, b) => eval_concept(a, m)?.is_subset(eval_concept(b, m)?),
        LFormula::RoleIncl(a, b) => eval_role(a, m)?.is_subset(&eval_role(b, m)?),
        LFormula::Func(r) => eval_role(r, m)?.is_functional(),
        LFormula::And(a, b) => eval_formula(a, m)? & eval_formula(b, m)?,
        LFormula::Or(a, b) => eval_formula(a, m)? | eval_formula(b, m)?,
        LFormula::Not(a) => !eval_formula(a, m)?,
        LFormula::Implies(a, b) => !eval_formula(a, m)? | eval_formula(b, m)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replacement {
    Constant(String),
    Concept(Concept),
    Role(Role),
}

/// A simultaneous substitution of constants, atomic concepts and atomic roles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subst {
    map: BTreeMap<String, Replacement>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn constant(mut self, from: &str, to: &str) -> Self {
        self.map.insert(from.to_string(), Replacement::Constant(to.to_string()));
        self
    }

    pub fn concept(mut self, from: &str, to: Concept) -> Self {
        self.map.insert(from.to_string(), Replacement::Concept(to));
        self
    }

    pub fn role(mut self, from: &str, to: Role) -> Self {
        self.map.insert(from.to_string(), Replacement::Role(to));
        self
    }

    pub fn insert(&mut self, from: &str, to: Replacement) {
        self.map.insert(from.to_string(), to);
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Replacement> {
        self.map.get(name)
    }

    pub fn apply(&self, f: &LFormula) -> Result<LFormula, DlError> {
        substitute(f, self)
    }

    pub fn apply_concept(&self, c: &Concept) -> Result<Concept, DlError> {
        subst_concept(c, self)
    }

    pub fn apply_role(&self, r: &Role) -> Result<Role, DlError> {
        subst_role(r, self)
    }
}

fn mismatch(name: &str, expected: &'static str) -> DlError {
    DlError::KindMismatch { name: name.to_string(), expected }
}

fn subst_concept(c: &Concept, s: &Subst) -> Result<Concept, DlError> {
    Ok(match c {
        Concept::Atomic(n) => match s.get(n) {
            None => c.clone(),
            Some(Replacement::Concept(d)) => d.clone(),
            Some(_) => return Err(mismatch(n, "concept")),
        },
        Concept::Nominal(n) => match s.get(n) {
            None => c.clone(),
            Some(Replacement::Constant(d)) => Concept::Nominal(d.clone()),
            Some(_) => return Err(mismatch(n, "constant")),
        },
        Concept::Top | Concept::Bottom => c.clone(),
        Concept::And(a, b) => Concept::and(subst_concept(a, s)?, subst_concept(b, s)?),
        Concept::Or(a, b) => Concept::or(subst_concept(a, s)?, subst_concept(b, s)?),
        Concept::Not(a) => Concept::not(subst_concept(a, s)?),
        Concept::Exists(r, c) => Concept::exists(subst_role(r, s)?, subst_concept(c, s)?),
    })
}

fn subst_role(r: &Role, s: &Subst) -> Result<Role, DlError> {
    Ok(match r {
        Role::Atomic(n) => match s.get(n) {
            None => r.clone(),
            Some(Replacement::Role(d)) => d.clone(),
            Some(_) => return Err(mismatch(n, "role")),
        },
        Role::Union(a, b) => Role::union(subst_role(a, s)?, subst_role(b, s)?),
        Role::Intersect(a, b) => Role::intersect(subst_role(a, s)?, subst_role(b, s)?),
        Role::Diff(a, b) => Role::diff(subst_role(a, s)?, subst_role(b, s)?),
        Role::Inverse(a) => Role::inverse(subst_role(a, s)?),
        Role::Product(a, b) => Role::product(subst_concept(a, s)?, subst_concept(b, s)?),
    })
}

/// Simultaneous syntactic replacement of every occurrence of the keys of `s`.
pub fn substitute(f: &LFormula, s: &Subst) -> Result<LFormula, DlError> {
    if s.is_empty() {
        return Ok(f.clone());
    }
    Ok(match f {
        LFormula::ConceptIncl(a, b) => LFormula::ConceptIncl(subst_concept(a, s)?, subst_concept(b, s)?),
        LFormula::RoleIncl(a, b) => LFormula::RoleIncl(subst_role(a, s)?, subst_role(b, s)?),
        LFormula::Func(r) => LFormula::Func(subst_role(r, s)?),
        LFormula::And(a, b) => LFormula::and(substitute(a, s)?, substitute(b, s)?),
        LFormula::Or(a, b) => LFormula::or(substitute(a, s)?, substitute(b, s)?),
        LFormula::Not(a) => LFormula::not(substitute(a, s)?),
        LFormula::Implies(a, b) => LFormula::implies(substitute(a, s)?, substitute(b, s)?),
    })
}

// Printing. Precedence levels, loosest first:
// concepts/roles: | (1), & (2), \ (3), x (4), ! and ex (5), ^- (6), atoms (7)
// formulas: -> (1), || (2), && (3), ! and inclusions (4), func (5)

fn concept_prec(c: &Concept) -> u8 {
    match c {
        Concept::Or(..) => 1,
        Concept::And(..) => 2,
        Concept::Not(_) | Concept::Exists(..) => 5,
        _ => 7,
    }
}

fn role_prec(r: &Role) -> u8 {
    match r {
        Role::Union(..) => 1,
        Role::Intersect(..) => 2,
        Role::Diff(..) => 3,
        Role::Product(a, b) if is_nominal(a) && is_nominal(b) => 7,
        Role::Product(..) => 4,
        Role::Inverse(_) => 6,
        Role::Atomic(_) => 7,
    }
}

fn is_nominal(c: &Concept) -> bool {
    matches!(c, Concept::Nominal(_))
}

fn write_concept(f: &mut fmt::Formatter<'_>, c: &Concept, min: u8) -> fmt::Result {
    let p = concept_prec(c);
    if p < min {
        write!(f, "(")?;
    }
    match c {
        Concept::Atomic(n) => write!(f, "{n}")?,
        Concept::Nominal(n) => write!(f, "o:{n}")?,
        Concept::Top => write!(f, "top")?,
        Concept::Bottom => write!(f, "bot")?,
        Concept::Or(a, b) => {
            write_concept(f, a, 1)?;
            write!(f, " | ")?;
            write_concept(f, b, 2)?;
        }
        Concept::And(a, b) => {
            write_concept(f, a, 2)?;
            write!(f, " & ")?;
            write_concept(f, b, 3)?;
        }
        Concept::Not(a) => {
            write!(f, "!")?;
            write_concept(f, a, 5)?;
        }
        Concept::Exists(r, c) => {
            write!(f, "ex ")?;
            write_role(f, r, 6)?;
            write!(f, " . ")?;
            write_concept(f, c, 5)?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

fn write_role(f: &mut fmt::Formatter<'_>, r: &Role, min: u8) -> fmt::Result {
    let p = role_prec(r);
    if p < min {
        write!(f, "(")?;
    }
    match r {
        Role::Atomic(n) => write!(f, "{n}")?,
        Role::Union(a, b) => {
            write_role(f, a, 1)?;
            write!(f, " | ")?;
            write_role(f, b, 2)?;
        }
        Role::Intersect(a, b) => {
            write_role(f, a, 2)?;
            write!(f, " & ")?;
            write_role(f, b, 3)?;
        }
        Role::Diff(a, b) => {
            write_role(f, a, 3)?;
            write!(f, " \\ ")?;
            write_role(f, b, 4)?;
        }
        Role::Product(a, b) => {
            if let (Concept::Nominal(x), Concept::Nominal(y)) = (a.as_ref(), b.as_ref()) {
                write!(f, "(o:{x}, o:{y})")?;
            } else {
                write_concept(f, a, 5)?;
                write!(f, " x ")?;
                write_concept(f, b, 5)?;
            }
        }
        Role::Inverse(a) => {
            write_role(f, a, 6)?;
            write!(f, "^-")?;
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

// Inclusions sit below the operand level of `!` so that a negated inclusion is
// printed as `!(C <= D)` rather than read back as `(!C) <= D`.
fn formula_prec(x: &LFormula) -> u8 {
    if as_equiv(x).is_some() {
        return 4;
    }
    match x {
        LFormula::Implies(..) => 1,
        LFormula::Or(..) => 2,
        LFormula::And(..) => 3,
        LFormula::Not(_) | LFormula::ConceptIncl(..) | LFormula::RoleIncl(..) => 4,
        LFormula::Func(_) => 5,
    }
}

fn write_formula(f: &mut fmt::Formatter<'_>, x: &LFormula, min: u8) -> fmt::Result {
    let p = formula_prec(x);
    if p < min {
        write!(f, "(")?;
    }
    if let Some(eq) = as_equiv(x) {
        match eq {
            EquivView::Concepts(a, b) => {
                write_concept(f, a, 1)?;
                write!(f, " == ")?;
                write_concept(f, b, 1)?;
            }
            EquivView::Roles(a, b) => {
                write_role(f, a, 1)?;
                write!(f, " == ")?;
                write_role(f, b, 1)?;
            }
        }
    } else {
        match x {
            LFormula::ConceptIncl(a, b) => {
                write_concept(f, a, 1)?;
                write!(f, " <= ")?;
                write_concept(f, b, 1)?;
            }
            LFormula::RoleIncl(a, b) => {
                write_role(f, a, 1)?;
                write!(f, " <= ")?;
                write_role(f, b, 1)?;
            }
            LFormula::Func(r) => {
                write!(f, "func(")?;
                write_role(f, r, 1)?;
                write!(f, ")")?;
            }
            LFormula::Implies(a, b) => {
                write_formula(f, a, 2)?;
                write!(f, " -> ")?;
                write_formula(f, b, 1)?;
            }
            LFormula::Or(a, b) => {
                write_formula(f, a, 2)?;
                write!(f, " || ")?;
                write_formula(f, b, 3)?;
            }
            LFormula::And(a, b) => {
                write_formula(f, a, 3)?;
                write!(f, " && ")?;
                write_formula(f, b, 4)?;
            }
            LFormula::Not(a) => {
                write!(f, "!")?;
                write_formula(f, a, 5)?;
            }
        }
    }
    if p < min {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_concept(f, self, 1)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_role(f, self, 1)
    }
}

impl fmt::Display for LFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, 1)
    }
}
