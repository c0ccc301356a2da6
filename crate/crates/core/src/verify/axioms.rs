//! Memory-structure conditions expressed in L.

use crate::dl::{Concept, LFormula, Role};
use crate::memstruct::{Vocabulary, ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE};

fn atom(s: &str) -> Concept {
    Concept::atom(s)
}

fn nom(s: &str) -> Concept {
    Concept::nominal(s)
}

fn disjoint(a: Concept, b: Concept) -> LFormula {
    LFormula::equiv(Concept::and(a, b), Concept::Bottom)
}

/// Unary symbols other than the address-partition ones that must avoid MemPool.
pub fn constrained_concepts(vocab: &Vocabulary) -> Vec<String> {
    vocab
        .unary
        .iter()
        .filter(|u| {
            !matches!(u.as_str(), ADDRESSES | ALLOC | POSSIBLE_TARGETS | MEMPOOL | AUX) && vocab.avoids_mempool(u)
        })
        .cloned()
        .collect()
}

/// ψ_m: conditions (3)-(9) as a list of L formulas, in a fixed order.
pub fn psi_m_axioms(vocab: &Vocabulary) -> Vec<LFormula> {
    let mut out = vec![
        LFormula::equiv(atom(AUX), Concept::or_all([nom(NULL), nom(TRUE), nom(FALSE)])),
        LFormula::incl(atom(ADDRESSES), Concept::not(atom(AUX))),
        LFormula::equiv(Concept::or(atom(ADDRESSES), atom(AUX)), Concept::Top),
        disjoint(atom(ALLOC), atom(POSSIBLE_TARGETS)),
        disjoint(atom(ALLOC), atom(MEMPOOL)),
        disjoint(atom(POSSIBLE_TARGETS), atom(MEMPOOL)),
        LFormula::equiv(Concept::or_all([atom(ALLOC), atom(POSSIBLE_TARGETS), atom(MEMPOOL)]), atom(ADDRESSES)),
    ];
    for c in &vocab.constants {
        out.push(LFormula::incl(nom(c), Concept::not(atom(MEMPOOL))));
    }
    for f in &vocab.fields {
        out.push(LFormula::func(Role::atom(f)));
        out.push(LFormula::incl(atom(ADDRESSES), Concept::exists(Role::atom(f), Concept::not(atom(MEMPOOL)))));
    }
    for f in &vocab.fields {
        out.push(LFormula::incl(atom(MEMPOOL), Concept::exists(Role::atom(f), Concept::or(nom(NULL), nom(FALSE)))));
    }
    for c in constrained_concepts(vocab) {
        out.push(LFormula::incl(atom(&c), Concept::not(atom(MEMPOOL))));
    }
    out
}

/// Conditions left implicit by ψ_m: distinct Aux constants, fields undefined
/// outside Addresses, and non-field roles avoiding MemPool.
pub fn closure_axioms(vocab: &Vocabulary) -> Vec<LFormula> {
    let mut out =
        vec![disjoint(nom(NULL), nom(TRUE)), disjoint(nom(NULL), nom(FALSE)), disjoint(nom(TRUE), nom(FALSE))];
    for f in &vocab.fields {
        out.push(LFormula::incl(Concept::exists(Role::atom(f), Concept::Top), atom(ADDRESSES)));
    }
    for r in &vocab.binary {
        if vocab.avoids_mempool(r) {
            out.push(LFormula::incl(
                Concept::or(
                    Concept::exists(Role::atom(r), Concept::Top),
                    Concept::exists(Role::inverse(Role::atom(r)), Concept::Top),
                ),
                Concept::not(atom(MEMPOOL)),
            ));
        }
    }
    out
}
