//! Generators for memory structures: exhaustive enumeration of small ones and
//! seeded random sampling.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::memstruct::{
    ElemSet, MemoryStructure, Relation, Vocabulary, ADDRESSES, ALLOC, AUX, FALSE, MEMPOOL, NULL, POSSIBLE_TARGETS, TRUE,
};

/// Structural symbols fixed by the address classes.
fn is_structural(name: &str) -> bool {
    matches!(name, ADDRESSES | ALLOC | POSSIBLE_TARGETS | MEMPOOL | AUX)
}

fn base(n: usize, classes: &[u8]) -> MemoryStructure {
    let mut names: Vec<String> = vec![NULL.into(), TRUE.into(), FALSE.into()];
    names.extend((0..n - 3).map(|i| format!("m{i}")));
    let mut m = MemoryStructure::new(names).expect("small universe");
    m.set_const(NULL, 0);
    m.set_const(TRUE, 1);
    m.set_const(FALSE, 2);
    m.set_unary(AUX, ElemSet::full(3));
    m.set_unary(ADDRESSES, ElemSet::full(n) - ElemSet::full(3));
    for (k, name) in [ALLOC, POSSIBLE_TARGETS, MEMPOOL].iter().enumerate() {
        let set = classes.iter().enumerate().filter(|(_, &c)| c as usize == k).map(|(i, _)| i + 3).collect();
        m.set_unary(name, set);
    }
    m
}

enum Dim {
    Const(String),
    Concept(String),
    Field(String, usize),
}

/// Calls `visit` on every memory structure with `4..=max_size` elements over
/// `vocab` that satisfies conditions (1)-(10). Elements are `null, T, F`
/// followed by addresses; isomorphic copies are not filtered out. Non-field
/// binary symbols are interpreted as empty.
pub fn enumerate_structures(vocab: &Vocabulary, max_size: usize, visit: &mut dyn FnMut(&MemoryStructure)) {
    for n in 4..=max_size {
        let k = n - 3;
        for code in 0..3usize.pow(k as u32) {
            let classes: Vec<u8> = (0..k).map(|i| (code / 3usize.pow(i as u32) % 3) as u8).collect();
            if !classes.contains(&2) {
                continue;
            }
            let mut m = base(n, &classes);
            let pool = m.mempool();
            let non_pool = m.all() - pool;
            for b in &vocab.binary {
                m.set_binary(b, Relation::empty(n));
            }
            let mut dims = Vec::new();
            for c in &vocab.constants {
                if m.constant(c).is_none() {
                    dims.push(Dim::Const(c.clone()));
                }
            }
            for u in &vocab.unary {
                if !is_structural(u) {
                    dims.push(Dim::Concept(u.clone()));
                }
            }
            for f in &vocab.fields {
                for a in 3..n {
                    dims.push(Dim::Field(f.clone(), a));
                }
            }
            let options: Vec<Vec<u64>> = dims
                .iter()
                .map(|d| match d {
                    Dim::Const(_) => non_pool.iter().map(|e| e as u64).collect(),
                    Dim::Concept(_) => subsets(non_pool),
                    Dim::Field(_, a) if pool.contains(*a) => vec![0, 2],
                    Dim::Field(..) => non_pool.iter().map(|e| e as u64).collect(),
                })
                .collect();
            let mut idx = vec![0usize; dims.len()];
            loop {
                for (d, (&i, opts)) in dims.iter().zip(idx.iter().zip(&options)) {
                    let v = opts[i];
                    match d {
                        Dim::Const(c) => m.set_const(c, v as usize),
                        Dim::Concept(c) => m.set_unary(c, ElemSet(v)),
                        Dim::Field(f, a) => m.set_field(f, *a, v as usize),
                    }
                }
                visit(&m);
                // odometer
                let mut pos = 0;
                loop {
                    if pos == idx.len() {
                        break;
                    }
                    idx[pos] += 1;
                    if idx[pos] < options[pos].len() {
                        break;
                    }
                    idx[pos] = 0;
                    pos += 1;
                }
                if pos == idx.len() {
                    break;
                }
            }
        }
    }
}

fn subsets(s: ElemSet) -> Vec<u64> {
    // enumerate submasks of s
    let mut out = Vec::new();
    let mut sub = s.0;
    loop {
        out.push(sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & s.0;
    }
    out.reverse();
    out
}

/// Shape parameters for random sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomShape {
    /// Total universe size, at least 4.
    pub size: usize,
    /// Probability that a concept contains a given eligible element.
    pub density: f64,
}

impl Default for RandomShape {
    fn default() -> Self {
        RandomShape { size: 6, density: 0.4 }
    }
}

/// A random memory structure satisfying conditions (1)-(10). At least one
/// address is in MemPool; fields of allocated cells lean towards other
/// addresses so that heaps have some structure.
pub fn random_structure<R: Rng>(vocab: &Vocabulary, shape: RandomShape, rng: &mut R) -> MemoryStructure {
    let n = shape.size.max(4);
    let k = n - 3;
    let mut classes: Vec<u8> = (0..k).map(|_| rng.gen_range(0..3u8)).collect();
    if !classes.contains(&2) {
        let i = rng.gen_range(0..k);
        classes[i] = 2;
    }
    let mut m = base(n, &classes);
    let pool = m.mempool();
    let non_pool: Vec<usize> = (m.all() - pool).iter().collect();
    let addresses: Vec<usize> = non_pool.iter().copied().filter(|&e| e >= 3).collect();
    for c in &vocab.constants {
        if m.constant(c).is_none() {
            let pick = if !addresses.is_empty() && rng.gen_bool(0.6) { &addresses } else { &non_pool };
            m.set_const(c, *pick.choose(rng).expect("non-empty"));
        }
    }
    for u in &vocab.unary {
        if !is_structural(u) {
            let set = non_pool.iter().copied().filter(|_| rng.gen_bool(shape.density)).collect();
            m.set_unary(u, set);
        }
    }
    for b in &vocab.binary {
        let mut r = Relation::empty(n);
        if vocab.is_field(b) {
            for a in 3..n {
                let target = if pool.contains(a) {
                    if rng.gen_bool(0.5) {
                        0
                    } else {
                        2
                    }
                } else if !addresses.is_empty() && rng.gen_bool(0.6) {
                    *addresses.choose(rng).expect("non-empty")
                } else {
                    *non_pool.choose(rng).expect("non-empty")
                };
                r.insert(a, target);
            }
        } else if vocab.avoids_mempool(b) {
            for &a in &non_pool {
                for &c in &non_pool {
                    if rng.gen_bool(shape.density / 2.0) {
                        r.insert(a, c);
                    }
                }
            }
        } else {
            for a in 0..n {
                for c in 0..n {
                    if rng.gen_bool(shape.density / 2.0) {
                        r.insert(a, c);
                    }
                }
            }
        }
        m.set_binary(b, r);
    }
    m
}
