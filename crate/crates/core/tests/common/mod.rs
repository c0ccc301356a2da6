#![allow(dead_code)]

use std::collections::BTreeSet;

use heapdl::corpus::small_vocabulary;
use heapdl::dl::eval_formula;
use heapdl::dl::LFormula;
use heapdl::memstruct::{extend_with_ext, MemoryStructure, Vocabulary};
use heapdl::prog::{assign_labels, run, BoolExpr, Command, Expr, RunOutcome};
use heapdl::wp::{instrument, theta};
use rand::seq::SliceRandom;
use rand::Rng;

pub const VARS: [&str; 3] = ["x", "y", "z"];
pub const FIELDS: [&str; 2] = ["f", "g"];

/// The small vocabulary with two more variables for program generation.
pub fn program_vocabulary() -> Vocabulary {
    let mut v = small_vocabulary();
    v.add_var("y").unwrap();
    v.add_var("z").unwrap();
    v
}

fn var<R: Rng>(rng: &mut R) -> String {
    VARS.choose(rng).unwrap().to_string()
}

fn field<R: Rng>(rng: &mut R) -> String {
    FIELDS.choose(rng).unwrap().to_string()
}

fn operand<R: Rng>(rng: &mut R) -> Expr {
    match rng.gen_range(0..6) {
        0 => Expr::Null,
        1 => Expr::Field(var(rng), field(rng)),
        _ => Expr::Var(var(rng)),
    }
}

fn condition<R: Rng>(rng: &mut R) -> BoolExpr {
    let atom = BoolExpr::eq(operand(rng), operand(rng));
    match rng.gen_range(0..4) {
        0 => BoolExpr::not(atom),
        1 => BoolExpr::and(atom, BoolExpr::eq(operand(rng), operand(rng))),
        _ => atom,
    }
}

fn primitive<R: Rng>(rng: &mut R) -> Command {
    match rng.gen_range(0..10) {
        0 | 1 => Command::assign(&var(rng), Expr::Field(var(rng), field(rng))),
        2 => Command::assign(&var(rng), if rng.gen_bool(0.5) { Expr::Null } else { Expr::Var(var(rng)) }),
        3 | 4 => {
            let rhs = if rng.gen_bool(0.3) { Expr::Null } else { Expr::Var(var(rng)) };
            Command::field_assign(&var(rng), &field(rng), rhs)
        }
        5 | 6 => Command::new_cell(&var(rng)),
        7 => Command::Dispose(var(rng)),
        8 => Command::Assume(condition(rng)),
        _ => Command::Skip,
    }
}

fn block<R: Rng>(rng: &mut R, budget: usize, nest: bool) -> (Command, usize) {
    let mut items = Vec::new();
    let mut used = 0;
    let want = rng.gen_range(1..=budget);
    while used < want {
        if nest && want - used >= 3 && rng.gen_bool(0.25) {
            let (t, a) = block(rng, (want - used - 1) / 2, false);
            let (e, b) = block(rng, (want - used - 1 - a).max(1), false);
            items.push(Command::if_else(condition(rng), t, e));
            used += 1 + a + b;
        } else {
            items.push(primitive(rng));
            used += 1;
        }
    }
    (Command::Seq(items), used)
}

/// A labelled, desugared program of at most `max_len` primitive commands over
/// `x, y, z` and fields `f, g`.
pub fn random_program<R: Rng>(rng: &mut R, max_len: usize) -> Command {
    let (body, _) = block(rng, max_len, true);
    let mut taken: BTreeSet<String> = VARS.iter().map(|s| s.to_string()).collect();
    assign_labels(&body, "lab", &mut taken)
}

/// Outcome of comparing `M2 |= phi` with `N |= Θ(phi)` for one run.
#[derive(Debug, PartialEq, Eq)]
pub enum ThetaCheck {
    Agree,
    Disagree { post: Option<bool>, theta: bool },
    OutOfReserve,
}

/// Runs `s` on `m1` and evaluates Θ_S(φ) on `m1` extended with the post-state
/// twins and the label values of the run. Labels not reached are null.
pub fn check_theta(s: &Command, phi: &LFormula, vocab: &Vocabulary, m1: &MemoryStructure) -> ThetaCheck {
    let th = theta(s, phi, vocab).expect("theta");
    let r = run(s, m1, vocab, None).expect("run");
    let (post, m2) = match &r.outcome {
        RunOutcome::OutOfReserve => return ThetaCheck::OutOfReserve,
        RunOutcome::Abort => (None, m1.clone()),
        RunOutcome::Result(m2) => (Some(eval_formula(phi, m2).expect("eval post")), m2.clone()),
    };
    if post.is_some() {
        let replay = run(s, m1, vocab, Some(&r.trace)).expect("replay");
        assert_eq!(replay.outcome, r.outcome, "replaying the trace changes the outcome");
    }
    let mut n = extend_with_ext(m1, &m2, vocab).expect("same universe");
    for l in instrument(s).expect("instrument").labels {
        n.set_const(&l, r.trace.get(&l).copied().unwrap_or(0));
    }
    let holds = eval_formula(&th, &n).expect("eval theta");
    if holds == post.unwrap_or(false) {
        ThetaCheck::Agree
    } else {
        ThetaCheck::Disagree { post, theta: holds }
    }
}
