//! Verification conditions and their bounded discharge.
//!
//! `VC(e)` for an edge `e = (l0, l)` holds iff
//! `β(shp l0) ∧ tr(def l0 ∧ cnt l0) ∧ tr(Θ(α(shp l) ∧ def l ∧ ¬cnt l))`
//! has no memory-structure model. The search is bounded, so a clean result is
//! reported as "no counterexample up to N" and never as a proof.

pub mod axioms;
pub mod ground;
pub mod sat;
pub mod search;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::dl::{eval_concept, eval_formula, Concept, DlError, LFormula};
use crate::fo::{CT2Formula, FO2Formula};
use crate::memstruct::{structure_to_json, MemoryStructure, StructureFile, VocabError, Vocabulary};
use crate::prog::{run, Location, ProgError, ProgramGraph, RunOutcome};
use crate::sl::{chunk_partition, SlError};
use crate::translate::{alpha, beta, tr, PartitionNaming, TranslateError};
use crate::wp::{instrument, theta, WpError, ABO};

pub use search::{find_model, Query, SearchError, SearchOptions, SearchStats, Verdict, Witness};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Graph(#[from] crate::prog::GraphError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error(transparent)]
    Wp(#[from] WpError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Prog(#[from] ProgError),
    #[error(transparent)]
    Sl(#[from] SlError),
    #[error(transparent)]
    Dl(#[from] DlError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationCondition {
    pub edge: (String, String),
    /// `β(shp l0)`.
    pub pre_shape: CT2Formula,
    /// `def l0 ∧ cnt l0`.
    pub pre: LFormula,
    /// `Θ_λ(e)(α(shp l) ∧ def l ∧ ¬cnt l)`.
    pub post: LFormula,
    /// The vocabulary with ext twins.
    pub vocab: Vocabulary,
    /// Label constants and `abo`; free in the search.
    pub free_constants: Vec<String>,
}

impl VerificationCondition {
    /// The bracketed body as one CT² formula.
    pub fn conjunction(&self) -> CT2Formula {
        let body = FO2Formula::And(vec![self.pre_shape.body.clone(), tr(&self.pre), tr(&self.post)]);
        let mut out = CT2Formula::new(body, self.pre_shape.partitions.clone());
        out.forest = self.pre_shape.forest.clone();
        out.list_field = self.pre_shape.list_field.clone();
        out
    }

    pub fn query(&self) -> Query {
        Query {
            vocab: self.vocab.clone(),
            formulas: vec![self.pre.clone(), self.post.clone()],
            ct2: vec![self.pre_shape.clone()],
        }
    }
}

pub fn naming(g: &ProgramGraph) -> PartitionNaming {
    PartitionNaming::new(g.vocab.fields.iter().cloned())
}

pub fn gen_vc(g: &ProgramGraph, from: &str, to: &str) -> Result<VerificationCondition, VerifyError> {
    let e = g.edge(from, to)?;
    let (l0, l) = (g.location(from)?, g.location(to)?);
    let names = naming(g);
    let pre_shape = beta(&l0.shp, &names)?;
    let pre = LFormula::and(l0.def.clone(), l0.cnt.clone());
    let post_body = LFormula::and_all([alpha(&l.shp, &names)?.formula, l.def.clone(), LFormula::not(l.cnt.clone())]);
    let post = theta(&e.code, &post_body, &g.vocab)?;
    let mut free_constants = instrument(&e.code)?.labels;
    free_constants.push(ABO.to_string());
    Ok(VerificationCondition {
        edge: (from.to_string(), to.to_string()),
        pre_shape,
        pre,
        post,
        vocab: g.vocab.with_ext()?,
        free_constants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// Running the edge from the witness pre-state really breaks the target annotation.
    Concrete,
    /// The pre-state satisfies the source annotation but the concrete run does
    /// not violate the target; the witness relies on free symbols.
    SpuriousUnderFreeSymbols,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeVerdict {
    Verdict(Verdict),
    Inconclusive(String),
}

#[derive(Debug, Clone)]
pub struct EdgeResult {
    pub edge: (String, String),
    pub verdict: EdgeVerdict,
    pub classification: Option<Classification>,
    pub stats: SearchStats,
    pub time_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Verified,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct ProgramResult {
    pub bound: usize,
    pub edges: Vec<EdgeResult>,
}

impl ProgramResult {
    pub fn status(&self) -> Status {
        let refuted = self.edges.iter().any(|e| matches!(e.verdict, EdgeVerdict::Verdict(Verdict::Counterexample(_))));
        let unknown = self.edges.iter().any(|e| matches!(e.verdict, EdgeVerdict::Inconclusive(_)));
        if refuted {
            Status::Refuted
        } else if unknown {
            Status::Inconclusive
        } else {
            Status::Verified
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status() {
            Status::Verified => 0,
            Status::Refuted => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&EdgeResult> {
        self.edges.iter().find(|e| e.edge.0 == from && e.edge.1 == to)
    }

    pub fn report(&self, g: &ProgramGraph) -> Report {
        let vocab = g.vocab.with_ext().unwrap_or_else(|_| g.vocab.clone());
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (verdict, witness, assignment, note) = match &e.verdict {
                    EdgeVerdict::Verdict(Verdict::NoCounterexampleUpTo(_)) => {
                        ("NoCounterexampleUpTo", None, None, None)
                    }
                    EdgeVerdict::Verdict(Verdict::Counterexample(w)) => (
                        "Counterexample",
                        Some(StructureFile::from_structure(&w.structure, Some(&vocab))),
                        Some(w.assignment.clone()),
                        None,
                    ),
                    EdgeVerdict::Inconclusive(msg) => ("Inconclusive", None, None, Some(msg.clone())),
                };
                EdgeReport {
                    edge: format!("{}->{}", e.edge.0, e.edge.1),
                    verdict: verdict.to_string(),
                    bound: self.bound,
                    witness,
                    assignment,
                    classification: e.classification,
                    note,
                    time_ms: e.time_ms,
                    stats: e.stats.clone(),
                }
            })
            .collect();
        Report { status: self.status(), bound: self.bound, edges }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EdgeReport {
    pub edge: String,
    pub verdict: String,
    pub bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<StructureFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub time_ms: u64,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub status: Status,
    pub bound: usize,
    pub edges: Vec<EdgeReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{:<16} {}", e.edge, e.verdict));
            if e.verdict == "NoCounterexampleUpTo" {
                out.push_str(&format!("({})", e.bound));
            }
            if let Some(c) = e.classification {
                out.push_str(&format!(" [{}]", serde_json::to_value(c).unwrap().as_str().unwrap_or("")));
            }
            if let Some(n) = &e.note {
                out.push_str(&format!(": {n}"));
            }
            out.push_str(&format!("  {} ms\n", e.time_ms));
            if let (Some(w), Some(a)) = (&e.witness, &e.assignment) {
                out.push_str(&format!("  witness: {}\n", serde_json::to_string(w).unwrap()));
                out.push_str(&format!("  labels: {a:?}\n"));
            }
        }
        let status = match self.status {
            Status::Verified => format!("VERIFIED({})", self.bound),
            Status::Refuted => "REFUTED".to_string(),
            Status::Inconclusive => "INCONCLUSIVE".to_string(),
        };
        out.push_str(&status);
        out.push('\n');
        out
    }
}

/// Discharges one edge.
pub fn check_edge(g: &ProgramGraph, from: &str, to: &str, opts: &SearchOptions) -> Result<EdgeResult, VerifyError> {
    let start = Instant::now();
    let vc = gen_vc(g, from, to)?;
    let (verdict, stats) = match find_model(&vc.query(), opts) {
        Ok((v, s)) => (EdgeVerdict::Verdict(v), s),
        Err(SearchError::ResourceCap { size }) => (
            EdgeVerdict::Inconclusive(format!("conflict budget exhausted at universe size {size}")),
            SearchStats::default(),
        ),
        Err(e) => return Err(e.into()),
    };
    let classification = match &verdict {
        EdgeVerdict::Verdict(Verdict::Counterexample(w)) => Some(classify_refutation(g, from, to, w)?),
        _ => None,
    };
    Ok(EdgeResult { edge: vc.edge, verdict, classification, stats, time_ms: start.elapsed().as_millis() as u64 })
}

/// Checks every edge, `jobs` at a time. Results keep the edge order.
pub fn check_program(g: &ProgramGraph, opts: &SearchOptions, jobs: usize) -> Result<ProgramResult, VerifyError> {
    let edges: Vec<(String, String)> = g.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
    let slots: Mutex<Vec<Option<Result<EdgeResult, VerifyError>>>> =
        Mutex::new((0..edges.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1).min(edges.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((from, to)) = edges.get(i) else { break };
                let r = check_edge(g, from, to, opts);
                slots.lock().expect("no poisoned worker")[i] = Some(r);
            });
        }
    });
    let mut out = Vec::with_capacity(edges.len());
    for r in slots.into_inner().expect("no poisoned worker") {
        out.push(r.expect("every edge checked")?);
    }
    Ok(ProgramResult { bound: opts.bound, edges: out })
}

/// A reached structure with the remaining symbols given their intended values:
/// partition concepts from the chunks of `shp`, then every definition of `def`
/// of the form `C == expr` with `C` an atomic non-partition concept.
/// `None` if the shape does not hold.
pub fn interpret_location(
    g: &ProgramGraph,
    loc: &Location,
    m: &MemoryStructure,
) -> Result<Option<MemoryStructure>, VerifyError> {
    let Some(parts) = chunk_partition(&loc.shp, m, &g.vocab)? else { return Ok(None) };
    let mut out = m.clone();
    for (i, p) in g.partitions.iter().enumerate() {
        out.set_unary(p, parts.get(i).copied().unwrap_or_default());
    }
    for c in loc.def.conjuncts() {
        if let Some((target, expr)) = definition(c, &g.partitions) {
            let v = eval_concept(expr, &out)?;
            out.set_unary(target, v);
        }
    }
    Ok(Some(out))
}

fn definition<'a>(f: &'a LFormula, partitions: &[String]) -> Option<(&'a str, &'a Concept)> {
    let LFormula::And(a, b) = f else { return None };
    let (LFormula::ConceptIncl(x, y), LFormula::ConceptIncl(y2, x2)) = (a.as_ref(), b.as_ref()) else { return None };
    if x != x2 || y != y2 {
        return None;
    }
    let defined = |c: &'a Concept| match c {
        Concept::Atomic(n) if !partitions.contains(n) => Some(n.as_str()),
        _ => None,
    };
    defined(x).map(|n| (n, y)).or_else(|| defined(y).map(|n| (n, x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Shape,
    Content,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachViolation {
    pub init: usize,
    pub path: Vec<(String, String)>,
    pub location: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReachReport {
    /// Location visits checked.
    pub visits: usize,
    /// Paths cut short by an abort or a failed `assume`.
    pub aborted: usize,
    /// Paths cut short by an empty MemPool.
    pub out_of_reserve: usize,
    pub violations: Vec<ReachViolation>,
}

fn check_visit(g: &ProgramGraph, loc: &Location, m: &MemoryStructure) -> Result<Option<ViolationKind>, VerifyError> {
    let Some(full) = interpret_location(g, loc, m)? else { return Ok(Some(ViolationKind::Shape)) };
    let ok = eval_formula(&LFormula::and(loc.def.clone(), loc.cnt.clone()), &full)?;
    Ok(if ok { None } else { Some(ViolationKind::Content) })
}

/// Executes every path of at most `max_len` edges from each initial structure
/// and checks `shp` and `cnt` at every visited location.
pub fn simulate_reach(g: &ProgramGraph, inits: &[MemoryStructure], max_len: usize) -> Result<ReachReport, VerifyError> {
    let mut report = ReachReport::default();
    for (i, m) in inits.iter().enumerate() {
        let mut path = Vec::new();
        walk(g, i, &g.init, m, &mut path, max_len, &mut report)?;
    }
    Ok(report)
}

fn walk(
    g: &ProgramGraph,
    init: usize,
    at: &str,
    m: &MemoryStructure,
    path: &mut Vec<(String, String)>,
    budget: usize,
    report: &mut ReachReport,
) -> Result<(), VerifyError> {
    let loc = g.location(at)?;
    report.visits += 1;
    if let Some(kind) = check_visit(g, loc, m)? {
        report.violations.push(ReachViolation { init, path: path.clone(), location: at.to_string(), kind });
        return Ok(());
    }
    if budget == 0 {
        return Ok(());
    }
    for e in g.out_edges(at) {
        match run(&e.code, m, &g.vocab, None)?.outcome {
            RunOutcome::Result(next) => {
                path.push((e.from.clone(), e.to.clone()));
                walk(g, init, &e.to, &next, path, budget - 1, report)?;
                path.pop();
            }
            RunOutcome::Abort => report.aborted += 1,
            RunOutcome::OutOfReserve => report.out_of_reserve += 1,
        }
    }
    Ok(())
}

/// Replays the edge from the witness pre-state with the witness label values.
pub fn classify_refutation(g: &ProgramGraph, from: &str, to: &str, w: &Witness) -> Result<Classification, VerifyError> {
    let e = g.edge(from, to)?;
    let target = g.location(to)?;
    let m = &w.structure;
    let choices = w
        .assignment
        .iter()
        .filter(|(k, _)| k.as_str() != ABO)
        .filter_map(|(k, v)| m.element(v).map(|e| (k.clone(), e)))
        .collect();
    let outcome = run(&e.code, m, &g.vocab, Some(&choices))?.outcome;
    Ok(match outcome {
        RunOutcome::Result(post) if check_visit(g, target, &post)?.is_some() => Classification::Concrete,
        _ => Classification::SpuriousUnderFreeSymbols,
    })
}

/// Pretty-printed witness, for text output.
pub fn witness_json(w: &Witness, vocab: &Vocabulary) -> String {
    structure_to_json(&w.structure, Some(vocab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{company, company_mutated, company_state, Employee};
    use crate::syntax::parse_program;

    #[test]
    fn company_vcs_are_not_vacuous() {
        let g = company();
        for e in &g.edges {
            let vc = gen_vc(&g, &e.from, &e.to).unwrap();
            let mut q = Query::new(vc.vocab.clone());
            q.formulas.push(vc.pre.clone());
            q.ct2.push(vc.pre_shape.clone());
            let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
            assert!(v.is_counterexample(), "pre-state of {}->{} is unsatisfiable", e.from, e.to);
        }
    }

    #[test]
    fn free_constants_are_labels_and_abo() {
        let g = company();
        let vc = gen_vc(&g, "ll", "ll").unwrap();
        assert!(vc.free_constants.contains(&ABO.to_string()));
        assert!(vc.free_constants.iter().any(|c| c.starts_with("y_")));
        assert!(vc.vocab.unary.contains("ELst_ext"));
        assert!(!vc.vocab.unary.contains("ELst_gho_ext"));
    }

    const SKIP: &str = "
        fields next;
        vars x;
        concepts C;
        loc a init { shp: ls(x, null); def: C == P1; cnt: o:x <= C | o:null; }
        loc b { shp: ls(x, null); def: C == P1; cnt: o:x <= C | o:null; }
        edge a -> b { skip; }
    ";

    #[test]
    fn skip_preserves_its_own_annotation() {
        let g = parse_program(SKIP).unwrap();
        let r = check_program(&g, &SearchOptions::default(), 1).unwrap();
        assert_eq!(r.status(), Status::Verified);
    }

    #[test]
    fn broken_skip_is_refuted() {
        let g = parse_program(&SKIP.replace(
            "loc b { shp: ls(x, null); def: C == P1; cnt: o:x <= C | o:null;",
            "loc b { shp: ls(x, null); def: C == P1; cnt: o:x <= C;",
        ))
        .unwrap();
        let r = check_program(&g, &SearchOptions::default(), 1).unwrap();
        assert_eq!(r.status(), Status::Refuted);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn no_edges_is_vacuously_verified() {
        let g = parse_program("fields next; vars x; loc a init { shp: emp; cnt: true; }").unwrap();
        let r = check_program(&g, &SearchOptions::default(), 4).unwrap();
        assert!(r.edges.is_empty());
        assert_eq!(r.status(), Status::Verified);
    }

    #[test]
    fn empty_init_set_gives_empty_report() {
        let r = simulate_reach(&company(), &[], 6).unwrap();
        assert_eq!(r, ReachReport::default());
    }

    #[test]
    fn mutated_loop_violates_the_loop_annotation() {
        let g = company_mutated();
        let emps = [Employee { works_for: Some(0), manager: false }];
        let m = company_state(&g, &emps, 1, 4);
        let r = simulate_reach(&g, &[m], 4).unwrap();
        let v = r.violations.first().expect("a violation");
        assert_eq!(v.location, "ll");
        assert_eq!(v.kind, ViolationKind::Content);
    }

    #[test]
    fn report_json_has_the_documented_keys() {
        let g = company_mutated();
        let r = check_program(&g, &SearchOptions::default(), 2).unwrap();
        let json: serde_json::Value = serde_json::from_str(&r.report(&g).to_json()).unwrap();
        let edges = json["edges"].as_array().unwrap();
        for e in edges {
            for k in ["edge", "verdict", "bound", "timeMs"] {
                assert!(e.get(k).is_some(), "{k}");
            }
        }
        let bad = edges.iter().find(|e| e["edge"] == "ll->ll").unwrap();
        assert_eq!(bad["verdict"], "Counterexample");
        assert!(bad.get("witness").is_some());
        assert_eq!(json["status"], "REFUTED");
    }
}
