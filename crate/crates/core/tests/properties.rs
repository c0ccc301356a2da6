mod common;

use heapdl::corpus::{company, company_mutated, l_corpus, small_vocabulary, vfs, L_CORPUS};
use heapdl::dl::eval_formula;
use heapdl::fo::{eval_ct2, ForestStrategy};
use heapdl::gen::{random_structure, RandomShape};
use heapdl::memstruct::validate;
use heapdl::sl::eval_sl;
use heapdl::syntax::{parse_formula, parse_program, parse_sl, print_program};
use heapdl::translate::{beta, PartitionNaming};
use heapdl::verify::{find_model, Query, SearchOptions, Verdict};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{check_theta, program_vocabulary, random_program, ThetaCheck};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn theta_agrees_with_execution(seed in any::<u64>(), k in 0..L_CORPUS.len(), size in 4usize..=7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = program_vocabulary();
        let s = random_program(&mut rng, 6);
        let m = random_structure(&vocab, RandomShape { size, density: 0.4 }, &mut rng);
        let (_, phi) = &l_corpus()[k];
        let r = check_theta(&s, phi, &vocab, &m);
        prop_assert!(matches!(r, ThetaCheck::Agree | ThetaCheck::OutOfReserve), "{s}: {r:?}");
    }

    #[test]
    fn random_structures_satisfy_the_conditions(seed in any::<u64>(), size in 4usize..=10, density in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = company();
        let m = random_structure(&g.vocab, RandomShape { size, density }, &mut rng);
        prop_assert!(validate(&m, &g.vocab).is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn search_witnesses_are_sound_and_seeded(i in 0..L_CORPUS.len(), j in 0..L_CORPUS.len(), seed in 0u64..4) {
        let corpus = l_corpus();
        let mut q = Query::new(small_vocabulary());
        q.formulas.push(corpus[i].1.clone());
        q.formulas.push(heapdl::dl::LFormula::not(corpus[j].1.clone()));
        let opts = SearchOptions { bound: 6, seed, conflict_limit: Some(200_000) };
        let (v1, _) = find_model(&q, &opts).unwrap();
        let (v2, _) = find_model(&q, &opts).unwrap();
        prop_assert_eq!(&v1, &v2);
        if let Verdict::Counterexample(w) = v1 {
            prop_assert!(validate(&w.structure, &q.vocab).is_empty());
            prop_assert!(q.holds(&w.structure).unwrap());
        }
    }
}

#[test]
fn formulas_survive_printing() {
    let v = small_vocabulary();
    for (name, f) in l_corpus() {
        let back = parse_formula(&f.to_string(), Some(&v)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(back, f, "{name}");
    }
}

#[test]
fn programs_survive_printing() {
    for g in [company(), company_mutated(), vfs()] {
        let text = print_program(&g);
        let back = parse_program(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back, g);
    }
}

#[test]
fn vfs_invariants_have_models_and_exclude_orphans() {
    let g = vfs();
    let opts = SearchOptions::default();
    let mut q = Query::new(g.vocab.clone());
    q.formulas.push(g.formula("vfs_populated").unwrap().clone());
    let (v, _) = find_model(&q, &opts).unwrap();
    let Verdict::Counterexample(w) = v else { panic!("populated file system has no model") };
    assert!(validate(&w.structure, &g.vocab).is_empty());
    assert!(eval_formula(g.formula("vfs_invariants").unwrap(), &w.structure).unwrap());

    let mut q = Query::new(g.vocab.clone());
    q.formulas.push(g.formula("vfs_orphan").unwrap().clone());
    let (v, _) = find_model(&q, &opts).unwrap();
    assert_eq!(v, Verdict::NoCounterexampleUpTo(opts.bound));
}

#[test]
fn beta_models_of_a_split_cycle_are_shape_models() {
    let g = company();
    let phi = parse_sl("eHd != pHd | ls(eHd, pHd) * ls(pHd, eHd)").unwrap();
    let b = beta(&phi, &PartitionNaming::new(g.vocab.fields.iter().cloned())).unwrap();
    let mut q = Query::new(g.vocab.clone());
    q.ct2.push(b.clone());
    let (v, _) = find_model(&q, &SearchOptions::default()).unwrap();
    let Verdict::Counterexample(w) = v else { panic!("a two-segment cycle is a valid heap") };
    assert!(eval_ct2(&b, &w.structure, ForestStrategy::Canonical).unwrap());
    assert!(eval_sl(&phi, &w.structure, &g.vocab).unwrap());
}
