//! Searches for small file-system states satisfying the VFS invariants.

use heapdl::corpus::vfs;
use heapdl::memstruct::structure_to_json;
use heapdl::verify::{find_model, Query, SearchOptions, Verdict};

fn main() {
    let g = vfs();
    for name in ["vfs_populated", "vfs_orphan"] {
        let mut q = Query::new(g.vocab.clone());
        q.formulas.push(g.formula(name).expect("named formula").clone());
        let (verdict, stats) = find_model(&q, &SearchOptions::default()).expect("search completes");
        match verdict {
            Verdict::Counterexample(w) => {
                println!("{name}: model with {} elements", w.structure.size());
                println!("{}", structure_to_json(&w.structure, Some(&g.vocab)));
            }
            Verdict::NoCounterexampleUpTo(n) => println!("{name}: no model up to {n} ({} conflicts)", stats.conflicts),
        }
    }
}
