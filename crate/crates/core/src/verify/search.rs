//! Bounded model search over memory structures.
//!
//! For each universe size the query is grounded into clauses and handed to the
//! SAT solver. The three Aux elements are fixed as `null, T, F`; the remaining
//! elements are addresses, ordered Alloc before PossibleTargets before MemPool.
//! Fields are one-hot on addresses. Forests of β images are the canonical
//! ones, `next` restricted to each list partition, and are constrained to be
//! acyclic with in-degree at most one.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::axioms::{closure_axioms, psi_m_axioms};
use super::ground::{GroundError, Grounder};
use super::sat::{Lit, SolveResult};
use crate::dl::{eval_formula, DlError, LFormula};
use crate::fo::{eval_ct2, CT2Formula, FO2Formula, FoError, ForestStrategy, Term};
use crate::memstruct::{
    validate, ElemSet, MemoryStructure, Relation, Violation, Vocabulary, ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL,
    POSSIBLE_TARGETS, TRUE,
};

/// Smallest universe with one address.
pub const MIN_BOUND: usize = 4;

/// A satisfiability query: every L conjunct and every CT² conjunct must hold.
#[derive(Debug, Clone)]
pub struct Query {
    /// The memory vocabulary. Constants used by the conjuncts but absent here
    /// are free witness constants exempt from the memory-structure conditions.
    pub vocab: Vocabulary,
    pub formulas: Vec<LFormula>,
    pub ct2: Vec<CT2Formula>,
}

impl Query {
    pub fn new(vocab: Vocabulary) -> Self {
        Query { vocab, formulas: Vec::new(), ct2: Vec::new() }
    }

    /// Constants of the conjuncts outside the vocabulary, sorted.
    pub fn witnesses(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            out.extend(f.symbols().constants);
        }
        for c in &self.ct2 {
            fo_constants(&c.body, &mut out);
        }
        out.retain(|c| !self.vocab.constants.contains(c));
        out.into_iter().collect()
    }

    /// Whether `m` satisfies every conjunct.
    pub fn holds(&self, m: &MemoryStructure) -> Result<bool, SearchError> {
        for f in &self.formulas {
            if !eval_formula(f, m)? {
                return Ok(false);
            }
        }
        for c in &self.ct2 {
            if !eval_ct2(c, m, ForestStrategy::Canonical)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn fo_constants(f: &FO2Formula, out: &mut BTreeSet<String>) {
    let mut term = |t: &Term| {
        if let Term::Const(c) = t {
            out.insert(c.clone());
        }
    };
    match f {
        FO2Formula::True | FO2Formula::False => {}
        FO2Formula::Unary(_, t) => term(t),
        FO2Formula::Binary(_, a, b) | FO2Formula::Eq(a, b) => {
            term(a);
            term(b);
        }
        FO2Formula::Not(a) | FO2Formula::Forall(_, a) | FO2Formula::Exists(_, a) | FO2Formula::Count(_, _, _, a) => {
            fo_constants(a, out)
        }
        FO2Formula::And(xs) | FO2Formula::Or(xs) => xs.iter().for_each(|x| fo_constants(x, out)),
        FO2Formula::Implies(a, b) | FO2Formula::Iff(a, b) => {
            fo_constants(a, out);
            fo_constants(b, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Largest universe searched, Aux elements included.
    pub bound: usize,
    pub seed: u64,
    /// Conflict budget per universe size; exhausting it is inconclusive.
    pub conflict_limit: Option<u64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { bound: 6, seed: 0, conflict_limit: Some(2_000_000) }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("bound {0} is below the minimum of {MIN_BOUND}")]
    BoundTooSmall(usize),
    #[error("conflict budget exhausted at universe size {size}")]
    ResourceCap { size: usize },
    #[error(transparent)]
    Ground(#[from] GroundError),
    #[error(transparent)]
    Dl(#[from] DlError),
    #[error(transparent)]
    Fo(#[from] FoError),
    #[error("internal: model at size {size} fails re-validation: {reason}")]
    Unsound { size: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub structure: MemoryStructure,
    /// Values of the witness constants by element name.
    pub assignment: BTreeMap<String, String>,
    /// Universe size at which the solver found the model, before padding.
    pub found_at: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    NoCounterexampleUpTo(usize),
    Counterexample(Box<Witness>),
}

impl Verdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, Verdict::Counterexample(_))
    }
}

/// Solver effort for one query.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub sizes: Vec<usize>,
    pub vars: usize,
    pub clauses: usize,
    pub conflicts: u64,
}

fn rename_binary(f: &FO2Formula, from: &str, to: &str) -> FO2Formula {
    let r = |x: &FO2Formula| Box::new(rename_binary(x, from, to));
    match f {
        FO2Formula::Binary(n, a, b) if n == from => FO2Formula::Binary(to.to_string(), a.clone(), b.clone()),
        FO2Formula::Not(a) => FO2Formula::Not(r(a)),
        FO2Formula::Forall(v, a) => FO2Formula::Forall(*v, r(a)),
        FO2Formula::Exists(v, a) => FO2Formula::Exists(*v, r(a)),
        FO2Formula::Count(k, c, v, a) => FO2Formula::Count(*k, *c, *v, r(a)),
        FO2Formula::And(xs) => FO2Formula::And(xs.iter().map(|x| rename_binary(x, from, to)).collect()),
        FO2Formula::Or(xs) => FO2Formula::Or(xs.iter().map(|x| rename_binary(x, from, to)).collect()),
        FO2Formula::Implies(a, b) => FO2Formula::Implies(r(a), r(b)),
        FO2Formula::Iff(a, b) => FO2Formula::Iff(r(a), r(b)),
        other => other.clone(),
    }
}

struct Encoding {
    g: Grounder,
    constants: BTreeMap<String, Vec<Lit>>,
    unary: BTreeMap<String, Vec<Lit>>,
    binary: BTreeMap<String, Vec<Lit>>,
}

fn encode(q: &Query, witnesses: &[String], n: usize, seed: u64) -> Result<Encoding, SearchError> {
    let vocab = &q.vocab;
    let mut g = Grounder::new(n, seed);
    let addrs: Vec<usize> = (3..n).collect();
    let mut constants = BTreeMap::new();
    let mut unary = BTreeMap::new();
    let mut binary = BTreeMap::new();

    for (i, c) in [NULL, TRUE, FALSE].iter().enumerate() {
        let v: Vec<Lit> = (0..n).map(|e| g.constant_lit(e == i)).collect();
        constants.insert(c.to_string(), v);
    }
    for c in vocab.constants.iter().chain(witnesses) {
        if constants.contains_key(c) {
            continue;
        }
        let v = g.fresh_vec(n);
        g.exactly_one(&v);
        constants.insert(c.clone(), v);
    }

    unary.insert(AUX.to_string(), (0..n).map(|e| g.constant_lit(e < 3)).collect::<Vec<_>>());
    unary.insert(ADDRESSES.to_string(), (0..n).map(|e| g.constant_lit(e >= 3)).collect::<Vec<_>>());
    let mut parts: Vec<Vec<Lit>> = vec![vec![g.falsity(); n]; 3];
    for &a in &addrs {
        let trio = g.fresh_vec(3);
        g.exactly_one(&trio);
        for k in 0..3 {
            parts[k][a] = trio[k];
        }
    }
    // Addresses are interchangeable: order them Alloc, PossibleTargets, MemPool.
    for w in addrs.windows(2) {
        g.clause(&[!parts[0][w[1]], parts[0][w[0]]]);
        g.clause(&[!parts[2][w[0]], parts[2][w[1]]]);
    }
    for (k, name) in [ALLOC, POSSIBLE_TARGETS, MEMPOOL].iter().enumerate() {
        unary.insert(name.to_string(), parts[k].clone());
    }
    for u in &vocab.unary {
        if !unary.contains_key(u) {
            let v = g.fresh_vec(n);
            unary.insert(u.clone(), v);
        }
    }
    for b in &vocab.binary {
        let mut v = vec![g.falsity(); n * n];
        if vocab.is_field(b) {
            for &a in &addrs {
                let row = g.fresh_vec(n);
                g.exactly_one(&row);
                v[a * n..a * n + n].copy_from_slice(&row);
            }
        } else {
            v = g.fresh_vec(n * n);
        }
        binary.insert(b.clone(), v);
    }

    for (k, v) in &constants {
        g.set_constant(k, v.clone());
    }
    for (k, v) in &unary {
        g.set_unary(k, v.clone());
    }
    for (k, v) in &binary {
        g.set_binary(k, v.clone());
    }

    for a in psi_m_axioms(vocab).iter().chain(&closure_axioms(vocab)) {
        g.assert(a)?;
    }
    for f in &q.formulas {
        g.assert(f)?;
    }
    for (i, c) in q.ct2.iter().enumerate() {
        let forest = format!("{}#{i}", c.forest);
        let fl = canonical_forest_lits(&mut g, c)?;
        forest_constraints(&mut g, &fl);
        g.set_binary(&forest, fl);
        let body = rename_binary(&c.body, &c.forest, &forest);
        let l = g.sentence(&body)?;
        g.clause(&[l]);
    }
    Ok(Encoding { g, constants, unary, binary })
}

fn canonical_forest_lits(g: &mut Grounder, c: &CT2Formula) -> Result<Vec<Lit>, SearchError> {
    let n = g.size();
    let mut out = vec![g.falsity(); n * n];
    if c.partitions.is_empty() {
        return Ok(out);
    }
    let next = g.binary(&c.list_field).ok_or_else(|| GroundError::Unknown(c.list_field.clone()))?.to_vec();
    for p in &c.partitions {
        let vp = g.unary(p).ok_or_else(|| GroundError::Unknown(p.clone()))?.to_vec();
        for x in 0..n {
            for y in 0..n {
                let e = g.and(&[vp[x], vp[y], next[x * n + y]]);
                out[x * n + y] = g.or(&[out[x * n + y], e]);
            }
        }
    }
    Ok(out)
}

/// In-degree at most one, and no cycles: every edge climbs a strict order.
fn forest_constraints(g: &mut Grounder, f: &[Lit]) {
    let n = g.size();
    if f.iter().all(|&l| l == g.falsity()) {
        return;
    }
    for y in 0..n {
        for x1 in 0..n {
            for x2 in x1 + 1..n {
                g.clause(&[!f[x1 * n + y], !f[x2 * n + y]]);
            }
        }
    }
    let lt = g.fresh_vec(n * n);
    for x in 0..n {
        g.clause(&[!lt[x * n + x]]);
        for y in 0..n {
            g.clause(&[!f[x * n + y], lt[x * n + y]]);
            for z in 0..n {
                g.clause(&[!lt[x * n + y], !lt[y * n + z], lt[x * n + z]]);
            }
        }
    }
}

fn element_names(n: usize) -> Vec<String> {
    let mut names: Vec<String> = vec![NULL.into(), TRUE.into(), FALSE.into()];
    names.extend((0..n - 3).map(|i| format!("m{i}")));
    names
}

fn extract(enc: &Encoding, n: usize) -> MemoryStructure {
    let s = &enc.g.solver;
    let mut m = MemoryStructure::new(element_names(n)).expect("bounded universe");
    for (c, v) in &enc.constants {
        let e = (0..n).find(|&e| s.model_value(v[e])).expect("one-hot constant");
        m.set_const(c, e);
    }
    for (u, v) in &enc.unary {
        let set: ElemSet = (0..n).filter(|&e| s.model_value(v[e])).collect();
        m.set_unary(u, set);
    }
    for (b, v) in &enc.binary {
        let pairs = (0..n * n).filter(|&i| s.model_value(v[i])).map(|i| (i / n, i % n));
        m.set_binary(b, Relation::from_pairs(n, pairs));
    }
    m
}

fn describe(v: &[Violation]) -> String {
    v.iter().map(|x| format!("({}) {}", x.condition, x.message)).collect::<Vec<_>>().join("; ")
}

/// Searches for a memory structure with at most `opts.bound` elements that
/// satisfies the query. A structure found without free-pool cells is padded
/// with one MemPool cell, so a witness can have `bound + 1` elements.
pub fn find_model(q: &Query, opts: &SearchOptions) -> Result<(Verdict, SearchStats), SearchError> {
    if opts.bound < MIN_BOUND {
        return Err(SearchError::BoundTooSmall(opts.bound));
    }
    let witnesses = q.witnesses();
    let mut stats = SearchStats::default();
    for n in MIN_BOUND..=opts.bound {
        stats.sizes.push(n);
        let mut enc = encode(q, &witnesses, n, opts.seed)?;
        let mut pool_required = false;
        loop {
            let before = enc.g.solver.conflicts;
            let res = enc.g.solver.solve(opts.conflict_limit);
            stats.conflicts += enc.g.solver.conflicts - before;
            match res {
                SolveResult::Unknown => return Err(SearchError::ResourceCap { size: n }),
                SolveResult::Unsat => break,
                SolveResult::Sat => {}
            }
            let raw = extract(&enc, n);
            let padded = if raw.mempool().is_empty() {
                raw.with_fresh_pool_element(&q.vocab.fields)
                    .map_err(|e| SearchError::Unsound { size: n, reason: e.to_string() })?
            } else {
                raw.clone()
            };
            let violations = validate(&padded, &q.vocab);
            if violations.is_empty() && q.holds(&padded)? {
                stats.vars = enc.g.solver.num_vars();
                stats.clauses = enc.g.solver.num_clauses();
                let assignment = witnesses
                    .iter()
                    .map(|w| (w.clone(), padded.name(padded.constant(w).expect("witness")).to_string()))
                    .collect();
                let w = Witness { structure: padded, assignment, found_at: n };
                return Ok((Verdict::Counterexample(Box::new(w)), stats));
            }
            if pool_required {
                let reason =
                    if violations.is_empty() { "conjunction false".to_string() } else { describe(&violations) };
                return Err(SearchError::Unsound { size: n, reason });
            }
            // Padding broke the model; look for one that already has a pool cell.
            pool_required = true;
            let pool = enc.unary[MEMPOOL].clone();
            enc.g.clause(&pool);
        }
        stats.vars = stats.vars.max(enc.g.solver.num_vars());
        stats.clauses = stats.clauses.max(enc.g.solver.num_clauses());
    }
    Ok((Verdict::NoCounterexampleUpTo(opts.bound), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::{Concept, Role};
    use crate::sl::{Chunk, SLFormula, SlExpr};
    use crate::translate::{alpha, beta, PartitionNaming};

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("next").unwrap();
        v.add_var("a").unwrap();
        v.add_var("b").unwrap();
        v.add_concept("P1").unwrap();
        v
    }

    #[test]
    fn contradiction_has_no_model() {
        let mut q = Query::new(vocab());
        q.formulas.push(LFormula::incl(Concept::Top, Concept::Bottom));
        for b in 4..=6 {
            let (v, _) = find_model(&q, &SearchOptions { bound: b, ..Default::default() }).unwrap();
            assert_eq!(v, Verdict::NoCounterexampleUpTo(b));
        }
    }

    #[test]
    fn bound_too_small() {
        let q = Query::new(vocab());
        assert!(matches!(
            find_model(&q, &SearchOptions { bound: 3, ..Default::default() }),
            Err(SearchError::BoundTooSmall(3))
        ));
    }

    #[test]
    fn trivial_model_is_valid() {
        let q = Query::new(vocab());
        let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
        let Verdict::Counterexample(w) = v else { panic!() };
        assert!(validate(&w.structure, &q.vocab).is_empty());
        assert!(!w.structure.mempool().is_empty());
    }

    fn ls_null() -> SLFormula {
        SLFormula::new(vec![], vec![Chunk::Ls(SlExpr::var("a"), SlExpr::Null)])
    }

    fn two_cycle() -> LFormula {
        // a P1 cell `c`, distinct from `a`, sitting on a next-cycle of length two
        let p1_not_a = Concept::and(Concept::atom("P1"), Concept::not(Concept::nominal("a")));
        let back = Concept::exists(Role::atom("next"), Concept::nominal("c"));
        let inner = Concept::and(p1_not_a.clone(), back);
        LFormula::incl(Concept::nominal("c"), Concept::and(p1_not_a, Concept::exists(Role::atom("next"), inner)))
    }

    #[test]
    fn alpha_admits_a_cycle_beta_does_not() {
        let naming = PartitionNaming::new(vec!["next".to_string()]);
        let mut q = Query::new(vocab());
        q.formulas.push(alpha(&ls_null(), &naming).unwrap().formula);
        q.formulas.push(two_cycle());
        let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
        let Verdict::Counterexample(w) = v else { panic!("no α witness") };
        assert!(w.found_at <= 6);
        assert!(!crate::sl::eval_sl(&ls_null(), &w.structure, &q.vocab).unwrap());
        let b = beta(&ls_null(), &naming).unwrap();
        assert!(!eval_ct2(&b, &w.structure, ForestStrategy::Canonical).unwrap());

        let mut q = Query::new(vocab());
        q.ct2.push(b);
        q.formulas.push(two_cycle());
        let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
        assert_eq!(v, Verdict::NoCounterexampleUpTo(6));
    }

    #[test]
    fn beta_models_are_lists() {
        let naming = PartitionNaming::new(vec!["next".to_string()]);
        let mut q = Query::new(vocab());
        q.ct2.push(beta(&ls_null(), &naming).unwrap());
        // at least two list cells
        q.formulas.push(LFormula::not(LFormula::incl(Concept::atom("P1"), Concept::nominal("a"))));
        let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
        let Verdict::Counterexample(w) = v else { panic!("no model") };
        let ok = crate::sl::eval_sl(&ls_null(), &w.structure, &q.vocab).unwrap();
        assert!(ok);
    }

    #[test]
    fn deterministic() {
        let mut q = Query::new(vocab());
        q.formulas.push(LFormula::not(LFormula::incl(Concept::atom(ALLOC), Concept::Bottom)));
        let a = find_model(&q, &SearchOptions::default()).unwrap().0;
        let b = find_model(&q, &SearchOptions::default()).unwrap().0;
        assert_eq!(a, b);
    }
}
