//! Grounding of L formulas over a fixed finite universe into clauses.
//!
//! Every concept becomes a vector of `n` literals and every role a vector of
//! `n * n` literals (row-major). Subterms are hash-consed, so the copies that
//! backwards propagation produces share their grounding.

use std::collections::HashMap;

use thiserror::Error;

use super::sat::{Lit, Solver};
use crate::dl::{Concept, LFormula, Role};
use crate::fo::{CountKind, FO2Formula, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundError {
    #[error("symbol `{0}` has no grounding")]
    Unknown(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum CKey {
    Atomic(String),
    Nominal(String),
    Top,
    Bot,
    And(u32, u32),
    Or(u32, u32),
    Not(u32),
    Exists(u32, u32),
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum RKey {
    Atomic(String),
    Union(u32, u32),
    Intersect(u32, u32),
    Diff(u32, u32),
    Inverse(u32),
    Product(u32, u32),
}

pub struct Grounder {
    pub solver: Solver,
    n: usize,
    t: Lit,
    unary: HashMap<String, Vec<Lit>>,
    binary: HashMap<String, Vec<Lit>>,
    constants: HashMap<String, Vec<Lit>>,
    gates: HashMap<Vec<Lit>, Lit>,
    cids: HashMap<CKey, u32>,
    rids: HashMap<RKey, u32>,
    cvals: Vec<Vec<Lit>>,
    rvals: Vec<Vec<Lit>>,
}

impl Grounder {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut solver = Solver::new(seed);
        let v = solver.new_var();
        let t = Lit::pos(v);
        solver.add_clause(&[t]);
        Grounder {
            solver,
            n,
            t,
            unary: HashMap::new(),
            binary: HashMap::new(),
            constants: HashMap::new(),
            gates: HashMap::new(),
            cids: HashMap::new(),
            rids: HashMap::new(),
            cvals: Vec::new(),
            rvals: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn truth(&self) -> Lit {
        self.t
    }

    pub fn falsity(&self) -> Lit {
        !self.t
    }

    pub fn constant_lit(&self, b: bool) -> Lit {
        if b {
            self.t
        } else {
            !self.t
        }
    }

    pub fn fresh(&mut self) -> Lit {
        Lit::pos(self.solver.new_var())
    }

    pub fn fresh_vec(&mut self, k: usize) -> Vec<Lit> {
        (0..k).map(|_| self.fresh()).collect()
    }

    pub fn clause(&mut self, lits: &[Lit]) {
        if lits.contains(&self.t) {
            return;
        }
        let f = self.falsity();
        let c: Vec<Lit> = lits.iter().copied().filter(|&l| l != f).collect();
        self.solver.add_clause(&c);
    }

    pub fn exactly_one(&mut self, lits: &[Lit]) {
        self.clause(lits);
        for i in 0..lits.len() {
            for j in i + 1..lits.len() {
                self.clause(&[!lits[i], !lits[j]]);
            }
        }
    }

    pub fn set_unary(&mut self, name: &str, lits: Vec<Lit>) {
        assert_eq!(lits.len(), self.n);
        self.unary.insert(name.to_string(), lits);
    }

    pub fn set_binary(&mut self, name: &str, lits: Vec<Lit>) {
        assert_eq!(lits.len(), self.n * self.n);
        self.binary.insert(name.to_string(), lits);
    }

    /// One-hot encoded constant. Each element literal is returned.
    pub fn set_constant(&mut self, name: &str, lits: Vec<Lit>) {
        assert_eq!(lits.len(), self.n);
        self.constants.insert(name.to_string(), lits);
    }

    pub fn unary(&self, name: &str) -> Option<&[Lit]> {
        self.unary.get(name).map(|v| v.as_slice())
    }

    pub fn binary(&self, name: &str) -> Option<&[Lit]> {
        self.binary.get(name).map(|v| v.as_slice())
    }

    pub fn constant(&self, name: &str) -> Option<&[Lit]> {
        self.constants.get(name).map(|v| v.as_slice())
    }

    /// Conjunction with constant folding and structural sharing.
    pub fn and(&mut self, lits: &[Lit]) -> Lit {
        let f = self.falsity();
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            if l == f {
                return f;
            }
            if l != self.t {
                c.push(l);
            }
        }
        c.sort();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return f;
        }
        match c.len() {
            0 => return self.t,
            1 => return c[0],
            _ => {}
        }
        if let Some(&g) = self.gates.get(&c) {
            return g;
        }
        let g = self.fresh();
        for &l in &c {
            self.solver.add_clause(&[!g, l]);
        }
        let mut big: Vec<Lit> = c.iter().map(|&l| !l).collect();
        big.push(g);
        self.solver.add_clause(&big);
        self.gates.insert(c, g);
        g
    }

    pub fn or(&mut self, lits: &[Lit]) -> Lit {
        let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        !self.and(&neg)
    }

    fn concept_id(&mut self, c: &Concept) -> Result<u32, GroundError> {
        let key = match c {
            Concept::Atomic(s) => CKey::Atomic(s.clone()),
            Concept::Nominal(s) => CKey::Nominal(s.clone()),
            Concept::Top => CKey::Top,
            Concept::Bottom => CKey::Bot,
            Concept::And(a, b) => CKey::And(self.concept_id(a)?, self.concept_id(b)?),
            Concept::Or(a, b) => CKey::Or(self.concept_id(a)?, self.concept_id(b)?),
            Concept::Not(a) => CKey::Not(self.concept_id(a)?),
            Concept::Exists(r, a) => CKey::Exists(self.role_id(r)?, self.concept_id(a)?),
        };
        if let Some(&id) = self.cids.get(&key) {
            return Ok(id);
        }
        let n = self.n;
        let vals: Vec<Lit> = match &key {
            CKey::Atomic(s) => self.unary.get(s).cloned().ok_or_else(|| GroundError::Unknown(s.clone()))?,
            CKey::Nominal(s) => self.constants.get(s).cloned().ok_or_else(|| GroundError::Unknown(s.clone()))?,
            CKey::Top => vec![self.t; n],
            CKey::Bot => vec![!self.t; n],
            CKey::And(a, b) | CKey::Or(a, b) => {
                let (va, vb) = (self.cvals[*a as usize].clone(), self.cvals[*b as usize].clone());
                let is_and = matches!(key, CKey::And(..));
                (0..n).map(|x| if is_and { self.and(&[va[x], vb[x]]) } else { self.or(&[va[x], vb[x]]) }).collect()
            }
            CKey::Not(a) => self.cvals[*a as usize].iter().map(|&l| !l).collect(),
            CKey::Exists(r, a) => {
                let (vr, va) = (self.rvals[*r as usize].clone(), self.cvals[*a as usize].clone());
                (0..n)
                    .map(|x| {
                        let terms: Vec<Lit> = (0..n).map(|y| self.and(&[vr[x * n + y], va[y]])).collect();
                        self.or(&terms)
                    })
                    .collect()
            }
        };
        let id = self.cvals.len() as u32;
        self.cvals.push(vals);
        self.cids.insert(key, id);
        Ok(id)
    }

    fn role_id(&mut self, r: &Role) -> Result<u32, GroundError> {
        let key = match r {
            Role::Atomic(s) => RKey::Atomic(s.clone()),
            Role::Union(a, b) => RKey::Union(self.role_id(a)?, self.role_id(b)?),
            Role::Intersect(a, b) => RKey::Intersect(self.role_id(a)?, self.role_id(b)?),
            Role::Diff(a, b) => RKey::Diff(self.role_id(a)?, self.role_id(b)?),
            Role::Inverse(a) => RKey::Inverse(self.role_id(a)?),
            Role::Product(a, b) => RKey::Product(self.concept_id(a)?, self.concept_id(b)?),
        };
        if let Some(&id) = self.rids.get(&key) {
            return Ok(id);
        }
        let n = self.n;
        let vals: Vec<Lit> = match &key {
            RKey::Atomic(s) => self.binary.get(s).cloned().ok_or_else(|| GroundError::Unknown(s.clone()))?,
            RKey::Union(a, b) | RKey::Intersect(a, b) | RKey::Diff(a, b) => {
                let (va, vb) = (self.rvals[*a as usize].clone(), self.rvals[*b as usize].clone());
                (0..n * n)
                    .map(|i| match key {
                        RKey::Union(..) => self.or(&[va[i], vb[i]]),
                        RKey::Intersect(..) => self.and(&[va[i], vb[i]]),
                        _ => self.and(&[va[i], !vb[i]]),
                    })
                    .collect()
            }
            RKey::Inverse(a) => {
                let va = &self.rvals[*a as usize];
                (0..n * n).map(|i| va[(i % n) * n + i / n]).collect()
            }
            RKey::Product(a, b) => {
                let (va, vb) = (self.cvals[*a as usize].clone(), self.cvals[*b as usize].clone());
                (0..n * n).map(|i| self.and(&[va[i / n], vb[i % n]])).collect()
            }
        };
        let id = self.rvals.len() as u32;
        self.rvals.push(vals);
        self.rids.insert(key, id);
        Ok(id)
    }

    pub fn concept(&mut self, c: &Concept) -> Result<Vec<Lit>, GroundError> {
        let id = self.concept_id(c)?;
        Ok(self.cvals[id as usize].clone())
    }

    pub fn role(&mut self, r: &Role) -> Result<Vec<Lit>, GroundError> {
        let id = self.role_id(r)?;
        Ok(self.rvals[id as usize].clone())
    }

    fn inclusion(&mut self, a: &[Lit], b: &[Lit]) -> Vec<Lit> {
        a.iter().zip(b).map(|(&x, &y)| self.or(&[!x, y])).collect()
    }

    fn func_terms(&mut self, r: &[Lit]) -> Vec<Lit> {
        let n = self.n;
        let mut out = Vec::new();
        for x in 0..n {
            for y1 in 0..n {
                for y2 in y1 + 1..n {
                    out.push(self.or(&[!r[x * n + y1], !r[x * n + y2]]));
                }
            }
        }
        out
    }

    /// A literal equivalent to the formula.
    pub fn formula(&mut self, f: &LFormula) -> Result<Lit, GroundError> {
        Ok(match f {
            LFormula::ConceptIncl(a, b) => {
                let (va, vb) = (self.concept(a)?, self.concept(b)?);
                let terms = self.inclusion(&va, &vb);
                self.and(&terms)
            }
            LFormula::RoleIncl(a, b) => {
                let (va, vb) = (self.role(a)?, self.role(b)?);
                let terms = self.inclusion(&va, &vb);
                self.and(&terms)
            }
            LFormula::Func(r) => {
                let vr = self.role(r)?;
                let terms = self.func_terms(&vr);
                self.and(&terms)
            }
            LFormula::And(a, b) => {
                let (x, y) = (self.formula(a)?, self.formula(b)?);
                self.and(&[x, y])
            }
            LFormula::Or(a, b) => {
                let (x, y) = (self.formula(a)?, self.formula(b)?);
                self.or(&[x, y])
            }
            LFormula::Not(a) => !self.formula(a)?,
            LFormula::Implies(a, b) => {
                let (x, y) = (self.formula(a)?, self.formula(b)?);
                self.or(&[!x, y])
            }
        })
    }

    /// Adds the formula as a hard constraint. Top-level conjunctions and
    /// inclusions become clauses directly.
    pub fn assert(&mut self, f: &LFormula) -> Result<(), GroundError> {
        match f {
            LFormula::And(a, b) => {
                self.assert(a)?;
                self.assert(b)
            }
            LFormula::ConceptIncl(a, b) => {
                let (va, vb) = (self.concept(a)?, self.concept(b)?);
                for (x, y) in va.into_iter().zip(vb) {
                    self.clause(&[!x, y]);
                }
                Ok(())
            }
            LFormula::RoleIncl(a, b) => {
                let (va, vb) = (self.role(a)?, self.role(b)?);
                for (x, y) in va.into_iter().zip(vb) {
                    self.clause(&[!x, y]);
                }
                Ok(())
            }
            LFormula::Func(r) => {
                let vr = self.role(r)?;
                let n = self.n;
                for x in 0..n {
                    for y1 in 0..n {
                        for y2 in y1 + 1..n {
                            self.clause(&[!vr[x * n + y1], !vr[x * n + y2]]);
                        }
                    }
                }
                Ok(())
            }
            other => {
                let l = self.formula(other)?;
                self.clause(&[l]);
                Ok(())
            }
        }
    }
}

type Env = [Option<usize>; 2];

fn slot(v: Var) -> usize {
    match v {
        Var::X => 0,
        Var::Y => 1,
    }
}

impl Grounder {
    fn term_lits(&self, t: &Term, env: &Env) -> Result<Vec<Lit>, GroundError> {
        Ok(match t {
            Term::Var(v) => {
                let e = env[slot(*v)].expect("free variable in sentence");
                (0..self.n).map(|i| self.constant_lit(i == e)).collect()
            }
            Term::Const(c) => self.constants.get(c).cloned().ok_or_else(|| GroundError::Unknown(c.clone()))?,
        })
    }

    /// Literal true iff at least `k` of `lits` are true.
    fn at_least(&mut self, lits: &[Lit], k: usize) -> Lit {
        if k == 0 {
            return self.t;
        }
        // row[j] = at least j+1 among the prefix seen so far
        let mut row: Vec<Lit> = vec![self.falsity(); k];
        for &l in lits {
            let mut next = row.clone();
            for j in 0..k {
                let carried = if j == 0 { l } else { self.and(&[row[j - 1], l]) };
                next[j] = self.or(&[row[j], carried]);
            }
            row = next;
        }
        row[k - 1]
    }

    fn fo(&mut self, f: &FO2Formula, env: Env, memo: &mut HashMap<(usize, Env), Lit>) -> Result<Lit, GroundError> {
        let key = (f as *const FO2Formula as usize, env);
        if let Some(&l) = memo.get(&key) {
            return Ok(l);
        }
        let n = self.n;
        let out = match f {
            FO2Formula::True => self.t,
            FO2Formula::False => self.falsity(),
            FO2Formula::Unary(p, t) => {
                let vp = self.unary.get(p).cloned().ok_or_else(|| GroundError::Unknown(p.clone()))?;
                let vt = self.term_lits(t, &env)?;
                let terms: Vec<Lit> = (0..n).map(|e| self.and(&[vt[e], vp[e]])).collect();
                self.or(&terms)
            }
            FO2Formula::Binary(r, a, b) => {
                let vr = self.binary.get(r).cloned().ok_or_else(|| GroundError::Unknown(r.clone()))?;
                let (va, vb) = (self.term_lits(a, &env)?, self.term_lits(b, &env)?);
                let mut terms = Vec::new();
                for x in 0..n {
                    for y in 0..n {
                        terms.push(self.and(&[va[x], vb[y], vr[x * n + y]]));
                    }
                }
                self.or(&terms)
            }
            FO2Formula::Eq(a, b) => {
                let (va, vb) = (self.term_lits(a, &env)?, self.term_lits(b, &env)?);
                let terms: Vec<Lit> = (0..n).map(|e| self.and(&[va[e], vb[e]])).collect();
                self.or(&terms)
            }
            FO2Formula::Not(a) => !self.fo(a, env, memo)?,
            FO2Formula::And(xs) | FO2Formula::Or(xs) => {
                let mut lits = Vec::with_capacity(xs.len());
                for x in xs {
                    lits.push(self.fo(x, env, memo)?);
                }
                if matches!(f, FO2Formula::And(_)) {
                    self.and(&lits)
                } else {
                    self.or(&lits)
                }
            }
            FO2Formula::Implies(a, b) => {
                let (x, y) = (self.fo(a, env, memo)?, self.fo(b, env, memo)?);
                self.or(&[!x, y])
            }
            FO2Formula::Iff(a, b) => {
                let (x, y) = (self.fo(a, env, memo)?, self.fo(b, env, memo)?);
                let both = self.and(&[x, y]);
                let neither = self.and(&[!x, !y]);
                self.or(&[both, neither])
            }
            FO2Formula::Forall(v, a) | FO2Formula::Exists(v, a) | FO2Formula::Count(_, _, v, a) => {
                let mut lits = Vec::with_capacity(n);
                for e in 0..n {
                    let mut inner = env;
                    inner[slot(*v)] = Some(e);
                    lits.push(self.fo(a, inner, memo)?);
                }
                match f {
                    FO2Formula::Forall(..) => self.and(&lits),
                    FO2Formula::Exists(..) => self.or(&lits),
                    FO2Formula::Count(kind, k, ..) => {
                        let k = *k as usize;
                        match kind {
                            CountKind::AtLeast => self.at_least(&lits, k),
                            CountKind::AtMost => !self.at_least(&lits, k + 1),
                            CountKind::Exactly => {
                                let lo = self.at_least(&lits, k);
                                let hi = self.at_least(&lits, k + 1);
                                self.and(&[lo, !hi])
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
        };
        memo.insert(key, out);
        Ok(out)
    }

    /// A literal equivalent to a first-order sentence.
    pub fn sentence(&mut self, f: &FO2Formula) -> Result<Lit, GroundError> {
        self.fo(f, [None, None], &mut HashMap::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::sat::SolveResult;

    #[test]
    fn folding() {
        let mut g = Grounder::new(2, 0);
        let t = g.truth();
        let x = g.fresh();
        assert_eq!(g.and(&[t, x]), x);
        assert_eq!(g.and(&[x, !x]), g.falsity());
        assert_eq!(g.or(&[x, !x]), t);
        let y = g.fresh();
        assert_eq!(g.and(&[x, y]), g.and(&[y, x]));
    }

    #[test]
    fn contradiction_unsat() {
        let mut g = Grounder::new(3, 0);
        let a = g.fresh_vec(3);
        g.set_unary("A", a);
        let f = LFormula::and(
            LFormula::equiv(Concept::atom("A"), Concept::Top),
            LFormula::incl(Concept::atom("A"), Concept::Bottom),
        );
        g.assert(&f).unwrap();
        assert_eq!(g.solver.solve(None), SolveResult::Unsat);
    }

    #[test]
    fn counting_matches_brute_force() {
        use crate::fo::{eval_fo2, CountKind, FO2Formula, Var};
        use crate::memstruct::{ElemSet, MemoryStructure};
        for kind in [CountKind::AtLeast, CountKind::AtMost, CountKind::Exactly] {
            for k in 0..4u32 {
                let f = FO2Formula::count(kind, k, Var::X, FO2Formula::unary("A", Var::X));
                for bits in 0u64..16 {
                    let mut g = Grounder::new(4, 0);
                    let a: Vec<Lit> = (0..4).map(|i| g.constant_lit(bits >> i & 1 == 1)).collect();
                    g.set_unary("A", a);
                    let l = g.sentence(&f).unwrap();
                    g.clause(&[l]);
                    let mut m = MemoryStructure::new((0..4).map(|i| i.to_string()).collect()).unwrap();
                    m.set_unary("A", ElemSet(bits));
                    let expect = eval_fo2(&f, &m).unwrap();
                    assert_eq!(g.solver.solve(None) == SolveResult::Sat, expect, "{kind:?} {k} {bits:b}");
                }
            }
        }
    }

    #[test]
    fn unknown_symbol() {
        let mut g = Grounder::new(2, 0);
        assert_eq!(g.concept(&Concept::atom("Z")), Err(GroundError::Unknown("Z".into())));
    }
}
