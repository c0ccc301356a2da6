//! Acceptance criteria, one PASS/FAIL line each. Runs with its own harness so
//! the lines are always printed: `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use heapdl::corpus::{company, company_mutated, company_state, l_corpus, sl_corpus, small_vocabulary, Employee};
use heapdl::dl::eval_formula;
use heapdl::fo::{eval_ct2, eval_fo2, ForestStrategy};
use heapdl::gen::{enumerate_structures, random_structure, RandomShape};
use heapdl::memstruct::{validate, ElemSet, MemoryStructure, Vocabulary, MEMPOOL};
use heapdl::sl::{eval_sl, SLFormula};
use heapdl::translate::{alpha, beta, tr, PartitionNaming};
use heapdl::verify::axioms::psi_m_axioms;
use heapdl::verify::{check_program, find_model, gen_vc, simulate_reach, EdgeVerdict, SearchOptions, Verdict};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{check_theta, program_vocabulary, random_program, ThetaCheck};

const C1_LIMIT: Duration = Duration::from_secs(120);
const C1_MAX_SIZE: usize = 5;
const C2_MAX_SIZE: usize = 6;
const C3_TRIALS: usize = 1000;
const C3_MAX_COMMANDS: usize = 6;
const C3_MAX_SIZE: usize = 7;
const C4_BOUND: usize = 6;
const C4_LIMIT: Duration = Duration::from_secs(600);
const C5_MAX_PATH: usize = 6;
const C6_EACH: usize = 25;
const C7_LIMIT: Duration = Duration::from_secs(180);

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// tr agrees with direct L evaluation on every small structure.
fn criterion_1() -> Outcome {
    let vocab = small_vocabulary();
    let corpus = l_corpus();
    let translated: Vec<_> = corpus.iter().map(|(_, f)| tr(f)).collect();
    let start = Instant::now();
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    enumerate_structures(&vocab, C1_MAX_SIZE, &mut |m| {
        for ((name, f), t) in corpus.iter().zip(&translated) {
            checked += 1;
            if eval_formula(f, m).unwrap() != eval_fo2(t, m).unwrap() && mismatches.len() < 3 {
                mismatches.push(name.clone());
            }
        }
    });
    let took = start.elapsed();
    outcome(
        mismatches.is_empty() && took <= C1_LIMIT,
        format!(
            "{checked} formula/structure pairs up to size {C1_MAX_SIZE}, mismatches {:?}, {:.1}s (limit {}s)",
            mismatches,
            took.as_secs_f64(),
            C1_LIMIT.as_secs()
        ),
    )
}

fn sl_vocabulary(phi: &SLFormula) -> Vocabulary {
    let mut v = Vocabulary::new();
    v.add_field("next").unwrap();
    for x in phi.vars() {
        v.add_var(&x).unwrap();
    }
    v
}

/// Calls `f` with `m` extended by every assignment of allocated cells to
/// `parts`; stops at the first `true`.
fn some_partition(m: &MemoryStructure, parts: &[String], f: &mut dyn FnMut(&MemoryStructure) -> bool) -> bool {
    let alloc: Vec<usize> = m.alloc().iter().collect();
    let k = parts.len();
    if k == 0 {
        return f(m);
    }
    let mut work = m.clone();
    for code in 0..k.pow(alloc.len() as u32) {
        let mut sets = vec![ElemSet::EMPTY; k];
        for (i, &a) in alloc.iter().enumerate() {
            sets[code / k.pow(i as u32) % k].insert(a);
        }
        for (p, s) in parts.iter().zip(sets) {
            work.set_unary(p, s);
        }
        if f(&work) {
            return true;
        }
    }
    false
}

/// SL implies α; SL coincides with β; α admits a model β excludes.
fn criterion_2() -> Outcome {
    let corpus = sl_corpus().unwrap();
    let mut checked = 0usize;
    let mut not_implied = 0usize;
    let mut beta_mismatch = 0usize;
    let mut separating = 0usize;
    for phi in &corpus {
        let vocab = sl_vocabulary(phi);
        let naming = PartitionNaming::new(["next".to_string()]);
        let a = alpha(phi, &naming).unwrap();
        let b = beta(phi, &naming).unwrap();
        enumerate_structures(&vocab, C2_MAX_SIZE, &mut |m| {
            checked += 1;
            let sl = eval_sl(phi, m, &vocab).unwrap();
            let a_sat = some_partition(m, &a.partitions, &mut |w| eval_formula(&a.formula, w).unwrap());
            let b_sat = some_partition(m, &a.partitions, &mut |w| eval_ct2(&b, w, ForestStrategy::Canonical).unwrap());
            if sl && !a_sat {
                not_implied += 1;
            }
            if sl != b_sat {
                beta_mismatch += 1;
            }
            if a_sat && !b_sat {
                separating += 1;
            }
        });
    }
    outcome(
        not_implied == 0 && beta_mismatch == 0 && separating > 0,
        format!(
            "{checked} structures over {} formulas: SL without α {not_implied}, SL/β mismatches {beta_mismatch}, α-but-not-β witnesses {separating}",
            corpus.len()
        ),
    )
}

/// Θ matches the post-state on random programs and structures.
fn criterion_3() -> Outcome {
    let vocab = program_vocabulary();
    let corpus = l_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut agree, mut resampled) = (0usize, 0usize);
    let mut failures = Vec::new();
    while agree + failures.len() < C3_TRIALS {
        let s = random_program(&mut rng, C3_MAX_COMMANDS);
        let size = rng.gen_range(4..=C3_MAX_SIZE);
        let m = random_structure(&vocab, RandomShape { size, density: 0.4 }, &mut rng);
        let (name, phi) = corpus.choose(&mut rng).unwrap();
        match check_theta(&s, phi, &vocab, &m) {
            ThetaCheck::Agree => agree += 1,
            ThetaCheck::OutOfReserve => resampled += 1,
            bad => failures.push(format!("{name} on `{s}`: {bad:?}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{agree}/{C3_TRIALS} triples agree ({resampled} out-of-reserve runs resampled){}",
            failures.first().map(|f| format!(", first failure {f}")).unwrap_or_default()
        ),
    )
}

/// The company program checks clean; the mutant has a re-validated counterexample.
fn criterion_4() -> Outcome {
    let opts = SearchOptions { bound: C4_BOUND, ..SearchOptions::default() };
    let start = Instant::now();
    let g = company();
    let clean = check_program(&g, &opts, 1).unwrap();
    let verified =
        clean.edges.iter().all(|e| e.verdict == EdgeVerdict::Verdict(Verdict::NoCounterexampleUpTo(C4_BOUND)));
    let bad = company_mutated();
    let refuted = check_program(&bad, &opts, 1).unwrap();
    let took = start.elapsed();
    let witness_ok = match refuted.edge("ll", "ll").map(|e| &e.verdict) {
        Some(EdgeVerdict::Verdict(Verdict::Counterexample(w))) => {
            let vc = gen_vc(&bad, "ll", "ll").unwrap();
            validate(&w.structure, &vc.vocab).is_empty()
                && eval_ct2(&vc.conjunction(), &w.structure, ForestStrategy::Canonical).unwrap()
        }
        _ => false,
    };
    outcome(
        verified && witness_ok && took <= C4_LIMIT,
        format!(
            "company {:?}, mutant ll->ll witness re-validated {witness_ok}, {:.1}s (limit {}s)",
            clean.status(),
            took.as_secs_f64(),
            C4_LIMIT.as_secs()
        ),
    )
}

fn company_inits() -> Vec<MemoryStructure> {
    let g = company();
    let e = |works_for, manager| Employee { works_for, manager };
    [
        (vec![e(None, false)], 0),
        (vec![e(None, true), e(None, false)], 1),
        (vec![e(Some(0), true), e(None, false)], 1),
        (vec![e(Some(0), false), e(Some(1), true), e(None, false)], 2),
        (vec![e(Some(1), true), e(Some(0), true), e(Some(0), false)], 2),
    ]
    .into_iter()
    .map(|(emps, projects)| company_state(&g, &emps, projects, 4))
    .collect()
}

/// Concrete executions respect every annotation; the mutant's do not.
fn criterion_5() -> Outcome {
    let inits = company_inits();
    let clean = simulate_reach(&company(), &inits, C5_MAX_PATH).unwrap();
    let bad = simulate_reach(&company_mutated(), &inits, C5_MAX_PATH).unwrap();
    outcome(
        clean.violations.is_empty() && !bad.violations.is_empty(),
        format!(
            "{} inits, paths up to {C5_MAX_PATH}: company {} visits / {} violations, mutant {} violations",
            inits.len(),
            clean.visits,
            clean.violations.len(),
            bad.violations.len()
        ),
    )
}

/// Breaks exactly one of conditions (3)-(9); returns the condition number.
fn inject<R: Rng>(m: &mut MemoryStructure, vocab: &Vocabulary, rng: &mut R) -> Option<u8> {
    let addresses: Vec<usize> = (3..m.size()).collect();
    let pool: Vec<usize> = m.mempool().iter().collect();
    let live: Vec<usize> = addresses.iter().copied().filter(|a| !m.mempool().contains(*a)).collect();
    let a = *addresses.choose(rng)?;
    let p = *pool.choose(rng)?;
    match rng.gen_range(3..=9u8) {
        3 => {
            let mut aux = m.unary("Aux").unwrap();
            aux.insert(a);
            let mut addr = m.unary("Addresses").unwrap();
            addr.remove(a);
            m.set_unary("Aux", aux);
            m.set_unary("Addresses", addr);
            Some(3)
        }
        4 => {
            let mut addr = m.unary("Addresses").unwrap();
            addr.remove(a);
            m.set_unary("Addresses", addr);
            Some(4)
        }
        5 => {
            let q = *live.choose(rng)?;
            let mut pool_set = m.mempool();
            pool_set.insert(q);
            m.set_unary(MEMPOOL, pool_set);
            Some(5)
        }
        6 => {
            let c = vocab.constants.iter().filter(|c| vocab.is_var(c)).collect::<Vec<_>>();
            m.set_const(c.choose(rng)?, p);
            Some(6)
        }
        7 => {
            let f = vocab.fields.iter().collect::<Vec<_>>();
            let f = *f.choose(rng)?;
            let q = *live.choose(rng)?;
            let mut r = m.binary(f).unwrap().clone();
            if rng.gen_bool(0.5) {
                r.insert(q, p);
            } else {
                r.set_row(q, ElemSet::EMPTY);
            }
            m.set_binary(f, r);
            Some(7)
        }
        8 => {
            let f = vocab.fields.iter().collect::<Vec<_>>();
            let f = *f.choose(rng)?;
            let mut r = m.binary(f).unwrap().clone();
            r.set_row(p, ElemSet::singleton(1));
            m.set_binary(f, r);
            Some(8)
        }
        _ => {
            let mut c = m.unary("C").unwrap();
            c.insert(p);
            m.set_unary("C", c);
            Some(9)
        }
    }
}

/// The axioms hold exactly on structures meeting conditions (3)-(9).
fn criterion_6() -> Outcome {
    let vocab = small_vocabulary();
    let axioms = psi_m_axioms(&vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut cases: Vec<(MemoryStructure, Option<u8>)> = Vec::new();
    while cases.len() < 2 * C6_EACH {
        let size = rng.gen_range(5..=8);
        let mut m = random_structure(&vocab, RandomShape { size, density: 0.4 }, &mut rng);
        if cases.len() < C6_EACH {
            cases.push((m, None));
        } else if let Some(c) = inject(&mut m, &vocab, &mut rng) {
            cases.push((m, Some(c)));
        }
    }
    let mut disagreements = Vec::new();
    for (i, (m, injected)) in cases.iter().enumerate() {
        let broken = validate(m, &vocab).iter().any(|v| (3..=9).contains(&v.condition));
        let axioms_hold = axioms.iter().all(|a| eval_formula(a, m).unwrap());
        if axioms_hold == broken || broken != injected.is_some() {
            disagreements.push((i, *injected));
        }
    }
    outcome(
        disagreements.is_empty(),
        format!("{} structures ({C6_EACH} valid, {C6_EACH} injected), disagreements {disagreements:?}", cases.len()),
    )
}

/// Every VC of the company program is decided within the time limit.
fn criterion_7() -> Outcome {
    let g = company();
    let mut worst = Duration::ZERO;
    let mut undecided = Vec::new();
    for e in &g.edges {
        let vc = gen_vc(&g, &e.from, &e.to).unwrap();
        let start = Instant::now();
        let r = find_model(&vc.query(), &SearchOptions::default());
        let took = start.elapsed();
        worst = worst.max(took);
        if r.is_err() || took > C7_LIMIT {
            undecided.push(format!("{}->{}", e.from, e.to));
        }
    }
    outcome(
        undecided.is_empty(),
        format!(
            "{} VCs, slowest {:.3}s (limit {}s), undecided {undecided:?}",
            g.edges.len(),
            worst.as_secs_f64(),
            C7_LIMIT.as_secs()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 tr preserves L semantics", criterion_1),
        ("2 SL vs alpha/beta", criterion_2),
        ("3 Theta matches execution", criterion_3),
        ("4 company verified, mutant refuted", criterion_4),
        ("5 concrete reach simulation", criterion_5),
        ("6 psi_m matches validation", criterion_6),
        ("7 per-VC time", criterion_7),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
