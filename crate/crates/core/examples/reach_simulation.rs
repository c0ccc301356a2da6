//! Executes every short path of both company programs from a few initial
//! states and reports annotation violations.

use heapdl::corpus::{company, company_mutated, company_state, Employee};
use heapdl::verify::simulate_reach;

fn main() {
    let g = company();
    let e = |works_for, manager| Employee { works_for, manager };
    let inits = vec![
        company_state(&g, &[e(None, false)], 0, 2),
        company_state(&g, &[e(Some(0), true), e(None, false)], 1, 2),
        company_state(&g, &[e(Some(1), false), e(Some(0), true), e(None, true)], 2, 2),
    ];
    for (name, prog) in [("company", g.clone()), ("company_mutated", company_mutated())] {
        let r = simulate_reach(&prog, &inits, 6).expect("simulation runs");
        println!("{name}: {} visits, {} aborted paths, {} violations", r.visits, r.aborted, r.violations.len());
        for v in r.violations.iter().take(3) {
            let path: Vec<String> = v.path.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            println!("  init {} via [{}]: {:?} at {}", v.init, path.join(", "), v.kind, v.location);
        }
    }
}
