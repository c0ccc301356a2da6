//! Runs the company program along a path from a small initial state.

use heapdl::corpus::{company, company_state, Employee};
use heapdl::prog::{run_path, RunOutcome};

fn main() {
    let g = company();
    let staff = [
        Employee { works_for: None, manager: false },
        Employee { works_for: Some(0), manager: true },
        Employee { works_for: None, manager: true },
    ];
    let m = company_state(&g, &staff, 1, 2);
    let path: Vec<(String, String)> = [("lb", "ll"), ("ll", "ll"), ("ll", "ll"), ("ll", "ll"), ("ll", "le")]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    match run_path(&g, &path, &m).expect("path exists") {
        RunOutcome::Result(post) => {
            let wrk = post.binary("wrkFor").expect("field");
            for e in post.unary("ELst").expect("concept").iter() {
                let target = wrk.row(e).first().map(|t| post.name(t)).unwrap_or("?");
                println!("{} works for {target}", post.name(e));
            }
        }
        other => println!("{other:?}"),
    }
}
