//! Backwards propagation of a formula through the loop body.

use heapdl::corpus::company;
use heapdl::syntax::parse_formula;
use heapdl::wp::{instrument, theta};

fn main() {
    let g = company();
    let e = g.edge("ll", "ll").expect("loop edge");
    println!("{:#2}\n", instrument(&e.code).expect("desugared").body);
    let phi = parse_formula("ex wrkFor . o:proj <= ELst", Some(&g.vocab)).expect("formula parses");
    println!("{}", theta(&e.code, &phi, &g.vocab).expect("theta"));
}
