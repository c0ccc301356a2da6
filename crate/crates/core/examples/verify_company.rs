//! Discharges every verification condition of the bundled company program and
//! of its mutant, printing both reports.

use heapdl::corpus::{company, company_mutated};
use heapdl::verify::{check_program, SearchOptions};

fn main() {
    let opts = SearchOptions::default();
    for (name, g) in [("company", company()), ("company_mutated", company_mutated())] {
        let result = check_program(&g, &opts, 2).expect("bundled program checks");
        println!("== {name}");
        print!("{}", result.report(&g).to_text());
    }
}
