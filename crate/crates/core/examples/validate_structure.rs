//! Samples memory structures, breaks one and shows what validation reports.

use heapdl::corpus::small_vocabulary;
use heapdl::gen::{enumerate_structures, random_structure, RandomShape};
use heapdl::memstruct::{structure_to_json, validate, ElemSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let v = small_vocabulary();
    let mut count = 0;
    enumerate_structures(&v, 4, &mut |_| count += 1);
    println!("{count} valid structures with one address\n");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut m = random_structure(&v, RandomShape { size: 6, density: 0.5 }, &mut rng);
    println!("{}", structure_to_json(&m, Some(&v)));
    println!("violations: {}", validate(&m, &v).len());

    let pool = m.mempool().first().expect("MemPool is nonempty");
    m.set_unary("C", m.unary("C").unwrap_or(ElemSet::EMPTY) | ElemSet::singleton(pool));
    for violation in validate(&m, &v) {
        println!("{violation}");
    }
}
