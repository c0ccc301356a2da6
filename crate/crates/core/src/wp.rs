//! Abort instrumentation and backwards propagation of L formulas through
//! loopless programs.

use thiserror::Error;

use crate::dl::{Concept, DlError, LFormula, Role, Subst};
use crate::memstruct::{Vocabulary, ALLOC, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE};
use crate::prog::{BoolExpr, Command, Expr};

/// The instrumentation variable recording whether the original program aborted.
pub const ABO: &str = "abo";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WpError {
    #[error("program is not desugared")]
    NotDesugared,
    #[error("command `{0}` carries no label")]
    Unlabeled(String),
    #[error("assume must be instrumented away before propagation")]
    Assume,
    #[error("`{0}` is reserved for instrumentation")]
    Reserved(String),
    #[error(transparent)]
    Dl(#[from] DlError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instrumented {
    pub body: Command,
    /// Label constants, one per `new` and per field read.
    pub labels: Vec<String>,
}

fn set_abo(v: Expr) -> Command {
    Command::assign(ABO, v)
}

fn guard(vars: &[String]) -> Option<BoolExpr> {
    vars.iter().map(|v| BoolExpr::Allocated(v.clone())).reduce(BoolExpr::and)
}

fn guarded(vars: &[String], c: Command) -> Command {
    match guard(vars) {
        Some(g) => Command::if_else(g, c, set_abo(Expr::True)),
        None => c,
    }
}

fn bar(s: &Command) -> Result<Command, WpError> {
    Ok(match s {
        Command::Skip | Command::New { .. } => s.clone(),
        Command::Assign { var, .. } if var == ABO => return Err(WpError::Reserved(ABO.into())),
        Command::Assign { expr: Expr::Field(w, _), .. } => guarded(std::slice::from_ref(w), s.clone()),
        Command::Assign { .. } => s.clone(),
        Command::FieldAssign { expr: Expr::Field(..), .. } => return Err(WpError::NotDesugared),
        Command::FieldAssign { var, .. } | Command::Dispose(var) => guarded(std::slice::from_ref(var), s.clone()),
        Command::Seq(xs) => Command::Seq(xs.iter().map(bar).collect::<Result<_, _>>()?),
        Command::IfThen(..) => return Err(WpError::NotDesugared),
        Command::IfThenElse(b, x, y) => guarded(&b.derefs(), Command::if_else(b.clone(), bar(x)?, bar(y)?)),
        Command::Assume(b) => guarded(&b.derefs(), Command::if_else(b.clone(), Command::Skip, set_abo(Expr::True))),
    })
}

/// Builds S̄: `abo := F` followed by S with every possible abort replaced by
/// `abo := T`. The result never aborts.
pub fn instrument(s: &Command) -> Result<Instrumented, WpError> {
    if s.vars().contains(ABO) {
        return Err(WpError::Reserved(ABO.into()));
    }
    let body = Command::Seq(vec![set_abo(Expr::False), bar(s)?]);
    let labels = body.labels();
    Ok(Instrumented { body, labels })
}

fn expr_constant(e: &Expr) -> &str {
    match e {
        Expr::Var(v) => v,
        Expr::Null => NULL,
        Expr::True => TRUE,
        Expr::False => FALSE,
        Expr::Field(..) => unreachable!("field expressions have no constant"),
    }
}

fn expr_concept(e: &Expr) -> Concept {
    match e {
        Expr::Field(v, f) => Concept::exists(Role::inverse(Role::atom(f)), Concept::nominal(v)),
        other => Concept::nominal(expr_constant(other)),
    }
}

/// The L formula ε_b expressing the condition `b`, assuming it does not err.
pub fn epsilon(b: &BoolExpr) -> LFormula {
    match b {
        BoolExpr::Eq(x, y) => LFormula::equiv(expr_concept(x), expr_concept(y)),
        BoolExpr::Not(a) => LFormula::not(epsilon(a)),
        BoolExpr::And(a, c) => LFormula::and(epsilon(a), epsilon(c)),
        BoolExpr::Or(a, c) => LFormula::or(epsilon(a), epsilon(c)),
        BoolExpr::True => LFormula::truth(),
        BoolExpr::False => LFormula::not(LFormula::truth()),
        BoolExpr::Allocated(v) => LFormula::incl(Concept::nominal(v), Concept::atom(ALLOC)),
    }
}

fn label_of(c: &Command, label: &Option<String>) -> Result<String, WpError> {
    label.clone().ok_or_else(|| WpError::Unlabeled(c.to_string().trim().to_string()))
}

/// Ψ_S(φ): the weakest precondition of φ under the labelled relation.
pub fn psi(s: &Command, phi: &LFormula, vocab: &Vocabulary) -> Result<LFormula, WpError> {
    Ok(match s {
        Command::Skip => phi.clone(),
        Command::Seq(xs) => {
            let mut cur = phi.clone();
            for c in xs.iter().rev() {
                cur = psi(c, &cur, vocab)?;
            }
            cur
        }
        Command::Assign { var, expr: Expr::Field(w, f), label } => {
            let y = label_of(s, label)?;
            let moved = Subst::new().constant(var, &y).apply(phi)?;
            let read = LFormula::equiv(
                Concept::exists(Role::inverse(Role::atom(f)), Concept::nominal(w)),
                Concept::nominal(&y),
            );
            LFormula::and(moved, read)
        }
        Command::Assign { var, expr, .. } => Subst::new().constant(var, expr_constant(expr)).apply(phi)?,
        Command::FieldAssign { expr: Expr::Field(..), .. } | Command::IfThen(..) => return Err(WpError::NotDesugared),
        Command::FieldAssign { var, field, expr } => {
            let updated = Role::union(
                Role::diff(Role::atom(field), Role::product(Concept::nominal(var), Concept::Top)),
                Role::pair(var, expr_constant(expr)),
            );
            Subst::new().role(field, updated).apply(phi)?
        }
        Command::IfThenElse(b, x, y) => {
            let e = epsilon(b);
            LFormula::or(
                LFormula::and(e.clone(), psi(x, phi, vocab)?),
                LFormula::and(LFormula::not(e), psi(y, phi, vocab)?),
            )
        }
        Command::New { var, label } => {
            let y = label_of(s, label)?;
            let oy = Concept::nominal(&y);
            let moved = Subst::new()
                .constant(var, &y)
                .concept(ALLOC, Concept::or(Concept::atom(ALLOC), oy.clone()))
                .concept(MEMPOOL, Concept::and(Concept::atom(MEMPOOL), Concept::not(oy.clone())))
                .apply(phi)?;
            LFormula::and(moved, LFormula::incl(oy, Concept::atom(MEMPOOL)))
        }
        Command::Dispose(var) => {
            let ov = Concept::nominal(var);
            let moved = Subst::new()
                .concept(ALLOC, Concept::and(Concept::atom(ALLOC), Concept::not(ov.clone())))
                .concept(POSSIBLE_TARGETS, Concept::or(Concept::atom(POSSIBLE_TARGETS), ov))
                .apply(phi)?;
            let roles = moved.symbols().roles;
            let nulling: Vec<Command> = vocab
                .fields
                .iter()
                .filter(|f| roles.contains(*f))
                .map(|f| Command::field_assign(var, f, Expr::Null))
                .collect();
            psi(&Command::Seq(nulling), &moved, vocab)?
        }
        Command::Assume(_) => return Err(WpError::Assume),
    })
}

/// Replaces every remaining symbol by its post-state twin.
pub fn ext_subst(vocab: &Vocabulary) -> Subst {
    let mut s = Subst::new();
    for r in vocab.rem_symbols() {
        let e = vocab.ext_name(&r);
        s = if vocab.binary.contains(&r) { s.role(&r, Role::atom(&e)) } else { s.concept(&r, Concept::atom(&e)) };
    }
    s
}

/// Φ_S(φ): Ψ applied after moving the remaining symbols of φ to the post state.
pub fn phi(s: &Command, f: &LFormula, vocab: &Vocabulary) -> Result<LFormula, WpError> {
    psi(s, &ext_subst(vocab).apply(f)?, vocab)
}

/// Θ_S(φ) = Φ_{S̄}(φ ∧ (o_abo ≡ o_F)).
pub fn theta(s: &Command, f: &LFormula, vocab: &Vocabulary) -> Result<LFormula, WpError> {
    let inst = instrument(s)?;
    let no_abort = LFormula::equiv(Concept::nominal(ABO), Concept::nominal(FALSE));
    phi(&inst.body, &LFormula::and(f.clone(), no_abort), vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::eval_formula;
    use crate::memstruct::{ElemSet, MemoryStructure};
    use crate::prog::{run, RunOutcome};

    fn vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("next").unwrap();
        v.add_var("x").unwrap();
        v.add_var("y").unwrap();
        v.add_concept("C").unwrap();
        v
    }

    #[test]
    fn instrument_shapes() {
        let d = instrument(&Command::Dispose("x".into())).unwrap();
        assert_eq!(
            d.body,
            Command::Seq(vec![
                Command::assign(ABO, Expr::False),
                Command::if_else(
                    BoolExpr::Allocated("x".into()),
                    Command::Dispose("x".into()),
                    Command::assign(ABO, Expr::True)
                ),
            ])
        );
        let s = instrument(&Command::Skip).unwrap();
        assert_eq!(s.body, Command::Seq(vec![Command::assign(ABO, Expr::False), Command::Skip]));
        assert!(instrument(&Command::IfThen(BoolExpr::True, Box::new(Command::Skip))).is_err());
    }

    #[test]
    fn psi_skip_and_assign() {
        let v = vocab();
        let f = LFormula::incl(Concept::nominal("x"), Concept::atom("C"));
        assert_eq!(psi(&Command::Skip, &f, &v).unwrap(), f);
        let g = psi(&Command::assign("x", Expr::var("y")), &f, &v).unwrap();
        assert_eq!(g, LFormula::incl(Concept::nominal("y"), Concept::atom("C")));
        assert!(psi(&Command::new_cell("x"), &f, &v).is_err());
    }

    #[test]
    fn phi_rewrites_only_remaining_symbols() {
        let mut v = vocab();
        v.add_ghost("C").unwrap();
        let f = LFormula::equiv(Concept::atom("C"), Concept::atom("C_gho"));
        let g = phi(&Command::Skip, &f, &v).unwrap();
        assert_eq!(g, LFormula::equiv(Concept::atom("C_ext"), Concept::atom("C_gho")));
        let plain = LFormula::incl(Concept::nominal("x"), Concept::atom(ALLOC));
        assert_eq!(phi(&Command::Skip, &plain, &v).unwrap(), psi(&Command::Skip, &plain, &v).unwrap());
    }

    #[test]
    fn theta_of_dispose_on_unallocated_is_false() {
        let v = vocab();
        let m = MemoryStructure::skeleton(&v, 1, 0, 1);
        let s = Command::Dispose("x".into());
        assert_eq!(run(&s, &m, &v, None).unwrap().outcome, RunOutcome::Abort);
        let th = theta(&s, &LFormula::truth(), &v).unwrap();
        let mut ext = m.clone();
        ext.set_unary("C_ext", ElemSet::EMPTY);
        ext.set_const(ABO, 0);
        assert!(!eval_formula(&th, &ext).unwrap());
    }
}
