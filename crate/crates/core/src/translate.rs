//! Embeddings of L into C², and of the list-segment separation logic into L (α)
//! and into CT² (β).

use std::collections::BTreeSet;

use thiserror::Error;

use crate::dl::{Concept, LFormula, Role};
use crate::fo::{CT2Formula, FO2Formula, Term, Var};
use crate::memstruct::{ALLOC, NULL};
use crate::sl::{Chunk, PureAtom, SLFormula, SlExpr, Spatial, LIST_FIELD};

pub fn tr_concept(c: &Concept, z: Var) -> FO2Formula {
    match c {
        Concept::Atomic(n) => FO2Formula::unary(n, z),
        Concept::Nominal(o) => FO2Formula::eq_const(z, o),
        Concept::Top => FO2Formula::True,
        Concept::Bottom => FO2Formula::False,
        Concept::And(a, b) => FO2Formula::and2(tr_concept(a, z), tr_concept(b, z)),
        Concept::Or(a, b) => FO2Formula::or2(tr_concept(a, z), tr_concept(b, z)),
        Concept::Not(a) => FO2Formula::not(tr_concept(a, z)),
        Concept::Exists(r, c) => {
            let w = z.other();
            FO2Formula::exists(w, FO2Formula::and2(tr_role(r, z, w), tr_concept(c, w)))
        }
    }
}

pub fn tr_role(r: &Role, z: Var, w: Var) -> FO2Formula {
    match r {
        Role::Atomic(n) => FO2Formula::Binary(n.clone(), Term::Var(z), Term::Var(w)),
        Role::Union(a, b) => FO2Formula::or2(tr_role(a, z, w), tr_role(b, z, w)),
        Role::Intersect(a, b) => FO2Formula::and2(tr_role(a, z, w), tr_role(b, z, w)),
        Role::Diff(a, b) => FO2Formula::and2(tr_role(a, z, w), FO2Formula::not(tr_role(b, z, w))),
        Role::Inverse(a) => tr_role(a, w, z),
        Role::Product(a, b) => FO2Formula::and2(tr_concept(a, z), tr_concept(b, w)),
    }
}

/// The two-variable translation of an L formula.
pub fn tr(f: &LFormula) -> FO2Formula {
    match f {
        LFormula::ConceptIncl(a, b) => {
            FO2Formula::forall(Var::X, FO2Formula::implies(tr_concept(a, Var::X), tr_concept(b, Var::X)))
        }
        LFormula::RoleIncl(a, b) => FO2Formula::forall(
            Var::X,
            FO2Formula::forall(Var::Y, FO2Formula::implies(tr_role(a, Var::X, Var::Y), tr_role(b, Var::X, Var::Y))),
        ),
        LFormula::Func(r) => FO2Formula::forall(
            Var::X,
            FO2Formula::count(crate::fo::CountKind::AtMost, 1, Var::Y, tr_role(r, Var::X, Var::Y)),
        ),
        LFormula::And(a, b) => FO2Formula::and2(tr(a), tr(b)),
        LFormula::Or(a, b) => FO2Formula::or2(tr(a), tr(b)),
        LFormula::Not(a) => FO2Formula::not(tr(a)),
        LFormula::Implies(a, b) => FO2Formula::implies(tr(a), tr(b)),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("partition concept `{0}` collides with a declared symbol")]
    NameCollision(String),
}

/// How partition concepts are named: chunk `i` (1-based) becomes `{prefix}{i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionNaming {
    pub prefix: String,
    /// Every field of the vocabulary; points-to chunks set unlisted ones to null.
    pub fields: Vec<String>,
    /// Names the generated concepts must not collide with.
    pub reserved: BTreeSet<String>,
}

impl PartitionNaming {
    pub fn new(fields: impl IntoIterator<Item = String>) -> Self {
        PartitionNaming { prefix: "P".into(), fields: fields.into_iter().collect(), reserved: BTreeSet::new() }
    }

    pub fn reserving(mut self, names: impl IntoIterator<Item = String>) -> Self {
        self.reserved.extend(names);
        self
    }

    pub fn name(&self, i: usize) -> String {
        format!("{}{}", self.prefix, i + 1)
    }
}

/// An α image together with the partition concepts it introduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaImage {
    pub formula: LFormula,
    /// One concept per chunk, in chunk order.
    pub partitions: Vec<String>,
    /// The subset belonging to `ls` chunks.
    pub list_partitions: Vec<String>,
}

fn nominal(e: &SlExpr) -> Concept {
    Concept::nominal(e.constant())
}

pub fn alpha_pure(pure: &[PureAtom]) -> LFormula {
    let atoms: Vec<LFormula> = pure
        .iter()
        .map(|a| match a {
            PureAtom::Eq(x, y) => LFormula::equiv(nominal(x), nominal(y)),
            PureAtom::Neq(x, y) => LFormula::not(LFormula::equiv(nominal(x), nominal(y))),
            PureAtom::True => LFormula::truth(),
        })
        .collect();
    LFormula::and_all(atoms)
}

/// `α(ls(E1, E2))` with the segment's cells named by the concept `l`.
pub fn alpha_ls(e1: &SlExpr, e2: &SlExpr, l: &Concept) -> LFormula {
    let next = Role::atom(LIST_FIELD);
    let pointed_from_l = Concept::exists(Role::inverse(next), l.clone());
    let a1 = LFormula::incl(nominal(e1), l.clone());
    let a2 = LFormula::incl(nominal(e2), pointed_from_l.clone());
    let a3 = LFormula::incl(nominal(e2), Concept::not(l.clone()));
    let a4 = LFormula::incl(l.clone(), Concept::or(nominal(e1), pointed_from_l));
    let emp = LFormula::and(LFormula::incl(l.clone(), Concept::Bottom), LFormula::equiv(nominal(e1), nominal(e2)));
    LFormula::or(LFormula::and_all([a1, a2, a3, a4]), emp)
}

pub fn alpha_points_to(var: &str, bindings: &[(String, SlExpr)], p: &Concept, fields: &[String]) -> LFormula {
    let mut parts = vec![LFormula::equiv(p.clone(), Concept::nominal(var))];
    for (f, e) in bindings {
        parts.push(LFormula::role_incl(Role::pair(var, e.constant()), Role::atom(f)));
    }
    for f in fields {
        if !bindings.iter().any(|(g, _)| g == f) {
            parts.push(LFormula::role_incl(Role::pair(var, NULL), Role::atom(f)));
        }
    }
    LFormula::and_all(parts)
}

pub fn alpha(phi: &SLFormula, naming: &PartitionNaming) -> Result<AlphaImage, TranslateError> {
    let chunks = phi.chunks();
    let partitions: Vec<String> = (0..chunks.len()).map(|i| naming.name(i)).collect();
    for p in &partitions {
        if naming.reserved.contains(p) {
            return Err(TranslateError::NameCollision(p.clone()));
        }
    }
    let mut list_partitions = Vec::new();
    let mut conj = Vec::new();
    match &phi.spatial {
        Spatial::Emp => conj.push(LFormula::equiv(Concept::atom(ALLOC), Concept::Bottom)),
        Spatial::Sep(chunks) => {
            let cover = Concept::or_all(partitions.iter().map(|p| Concept::atom(p)));
            conj.push(LFormula::equiv(cover, Concept::atom(ALLOC)));
            for (c, p) in chunks.iter().zip(&partitions) {
                let pc = Concept::atom(p);
                match c {
                    Chunk::Ls(a, b) => {
                        list_partitions.push(p.clone());
                        conj.push(alpha_ls(a, b, &pc));
                    }
                    Chunk::PointsTo { var, fields } => conj.push(alpha_points_to(var, fields, &pc, &naming.fields)),
                }
            }
            for i in 0..partitions.len() {
                for j in i + 1..partitions.len() {
                    conj.push(LFormula::equiv(
                        Concept::and(Concept::atom(&partitions[i]), Concept::atom(&partitions[j])),
                        Concept::Bottom,
                    ));
                }
            }
        }
    }
    conj.push(alpha_pure(&phi.pure));
    Ok(AlphaImage { formula: LFormula::and_all(conj), partitions, list_partitions })
}

/// The forest conditions tying `F1` to `next` inside the segment `p` rooted at `root`.
pub fn beta5(p: &str, root: &SlExpr, forest: &str) -> FO2Formula {
    let (x, y) = (Var::X, Var::Y);
    let inside = FO2Formula::forall(
        x,
        FO2Formula::forall(
            y,
            FO2Formula::implies(
                FO2Formula::and2(FO2Formula::unary(p, x), FO2Formula::unary(p, y)),
                FO2Formula::iff(FO2Formula::binary(forest, x, y), FO2Formula::binary(LIST_FIELD, x, y)),
            ),
        ),
    );
    let no_parent = FO2Formula::forall(
        y,
        FO2Formula::implies(FO2Formula::unary(p, y), FO2Formula::not(FO2Formula::binary(forest, y, x))),
    );
    let root_clause = FO2Formula::forall(
        x,
        FO2Formula::implies(
            FO2Formula::and2(FO2Formula::unary(p, x), no_parent),
            FO2Formula::eq_const(x, root.constant()),
        ),
    );
    FO2Formula::and2(inside, root_clause)
}

pub fn beta(phi: &SLFormula, naming: &PartitionNaming) -> Result<CT2Formula, TranslateError> {
    let image = alpha(phi, naming)?;
    let forest = "F1";
    let mut body = vec![tr(&image.formula)];
    for (c, p) in phi.chunks().iter().zip(&image.partitions) {
        if let Chunk::Ls(root, _) = c {
            body.push(beta5(p, root, forest));
        }
    }
    let mut out = CT2Formula::new(FO2Formula::And(body), image.list_partitions);
    out.forest = forest.to_string();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dl::eval_formula;
    use crate::fo::{eval_ct2, eval_fo2, ForestStrategy};
    use crate::memstruct::{MemoryStructure, Vocabulary};

    fn ls(a: &str, b: &str) -> Chunk {
        Chunk::Ls(SlExpr::var(a), SlExpr::var(b))
    }

    fn naming() -> PartitionNaming {
        PartitionNaming::new(vec!["next".to_string()])
    }

    #[test]
    fn tr_examples() {
        let f = LFormula::incl(Concept::atom("C"), Concept::atom("D"));
        assert_eq!(
            tr(&f),
            FO2Formula::forall(
                Var::X,
                FO2Formula::implies(FO2Formula::unary("C", Var::X), FO2Formula::unary("D", Var::X))
            )
        );
        let g = LFormula::func(Role::atom("r"));
        assert_eq!(tr(&g).to_string(), "forall x. exists<=1 y. r(x, y)");
    }

    #[test]
    fn tr_empty_role() {
        let mut v = Vocabulary::new();
        v.add_role("r").unwrap();
        let m = MemoryStructure::skeleton(&v, 1, 0, 1);
        let f = LFormula::incl(Concept::exists(Role::atom("r"), Concept::atom("Alloc")), Concept::Bottom);
        assert!(eval_fo2(&tr(&f), &m).unwrap());
        assert!(eval_formula(&f, &m).unwrap());
    }

    #[test]
    fn alpha_of_emp_and_true() {
        let emp = SLFormula::new(vec![], vec![]);
        let img = alpha(&emp, &naming()).unwrap();
        assert_eq!(
            img.formula,
            LFormula::and(LFormula::equiv(Concept::atom("Alloc"), Concept::Bottom), LFormula::truth())
        );
        assert_eq!(alpha_pure(&[PureAtom::True]), LFormula::truth());
    }

    #[test]
    fn alpha_of_loop_shape() {
        let phi = SLFormula::new(vec![PureAtom::True], vec![ls("eHd", "e"), ls("e", "null"), ls("pHd", "null")]);
        let img = alpha(&phi, &naming()).unwrap();
        assert_eq!(img.partitions, vec!["P1", "P2", "P3"]);
        let conj = img.formula.conjuncts();
        assert_eq!(conj[0].to_string(), "P1 | P2 | P3 == Alloc");
        assert_eq!(*conj[1], alpha_ls(&SlExpr::var("eHd"), &SlExpr::var("e"), &Concept::atom("P1")));
        assert_eq!(conj[4].to_string(), "P1 & P2 == bot");
        assert_eq!(*conj[7], LFormula::truth());
        assert_eq!(conj.len(), 8);
    }

    #[test]
    fn collision_is_rejected() {
        let phi = SLFormula::new(vec![], vec![ls("a", "null")]);
        let n = naming().reserving(["P1".to_string()]);
        assert_eq!(alpha(&phi, &n), Err(TranslateError::NameCollision("P1".into())));
    }

    #[test]
    fn beta5_root_clause_text() {
        let b = beta5("P1", &SlExpr::var("eHd"), "F1");
        assert_eq!(
            b.to_string(),
            "(forall x. forall y. P1(x) & P1(y) -> (F1(x, y) <-> next(x, y))) & (forall x. P1(x) & (forall y. P1(y) -> ~F1(y, x)) -> x = o:eHd)"
        );
    }

    #[test]
    fn beta_without_lists_is_tr_alpha() {
        let phi = SLFormula::new(
            vec![],
            vec![Chunk::PointsTo { var: "a".into(), fields: vec![("next".into(), SlExpr::Null)] }],
        );
        let b = beta(&phi, &naming()).unwrap();
        assert!(b.partitions.is_empty());
        assert_eq!(b.body, FO2Formula::And(vec![tr(&alpha(&phi, &naming()).unwrap().formula)]));
    }

    fn list_vocab() -> Vocabulary {
        let mut v = Vocabulary::new();
        v.add_field("next").unwrap();
        v.add_var("a").unwrap();
        v.add_var("b").unwrap();
        v.add_concept("P1").unwrap();
        v.add_concept("P2").unwrap();
        v
    }

    #[test]
    fn disjoint_cycle_separates_alpha_and_beta() {
        let v = list_vocab();
        let phi = SLFormula::new(vec![], vec![ls("a", "null")]);
        let mut m = MemoryStructure::skeleton(&v, 5, 0, 1);
        m.set_const("a", 3);
        m.set_field("next", 3, 4);
        m.set_field("next", 4, 5);
        m.set_field("next", 5, 0);
        m.set_unary("P1", [3, 4, 5].into_iter().collect());
        let img = alpha(&phi, &naming()).unwrap();
        let b = beta(&phi, &naming()).unwrap();
        assert!(!eval_formula(&img.formula, &m).unwrap());
        // allocate the 2-cycle as part of the list concept as well
        m.set_field("next", 6, 7);
        m.set_field("next", 7, 6);
        m.set_unary("P1", [3, 4, 5, 6, 7].into_iter().collect());
        assert!(eval_formula(&img.formula, &m).unwrap());
        assert!(!eval_ct2(&b, &m, ForestStrategy::Canonical).unwrap());
        // the genuine list
        let mut g = MemoryStructure::skeleton(&v, 3, 0, 1);
        g.set_const("a", 3);
        g.set_field("next", 3, 4);
        g.set_field("next", 4, 5);
        g.set_unary("P1", [3, 4, 5].into_iter().collect());
        assert!(eval_ct2(&b, &g, ForestStrategy::Canonical).unwrap());
    }

    #[test]
    fn cyclic_list_under_beta() {
        let v = list_vocab();
        let phi = SLFormula::new(vec![], vec![ls("a", "b"), ls("b", "a")]);
        let mut m = MemoryStructure::skeleton(&v, 2, 0, 1);
        m.set_const("a", 3);
        m.set_const("b", 4);
        m.set_field("next", 3, 4);
        m.set_field("next", 4, 3);
        m.set_unary("P1", [3].into_iter().collect());
        m.set_unary("P2", [4].into_iter().collect());
        let b = beta(&phi, &naming()).unwrap();
        assert!(eval_ct2(&b, &m, ForestStrategy::Canonical).unwrap());
        assert!(eval_ct2(&b, &m, ForestStrategy::Exhaustive { cap: 7 }).unwrap());
        let f1 = crate::fo::canonical_forest(&b, &m).unwrap();
        assert!(f1.is_empty());
    }
}
