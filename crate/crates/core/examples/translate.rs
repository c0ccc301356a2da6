//! Prints the two-variable translation of a content invariant and the α and β
//! images of a shape.

use heapdl::corpus::company;
use heapdl::syntax::parse_sl;
use heapdl::translate::{alpha, beta, tr};
use heapdl::verify::naming;

fn main() {
    let g = company();
    let inv = g.formula("invariants").expect("named formula");
    println!("L:   {inv}");
    println!("FO2: {}\n", tr(inv));

    let shp = parse_sl("ls(eHd, e) * ls(e, null) * ls(pHd, null)").expect("shape parses");
    let names = naming(&g);
    println!("alpha: {}", alpha(&shp, &names).expect("no collision").formula);
    let b = beta(&shp, &names).expect("no collision");
    println!("beta:  {}", b.body);
    println!("forest {} over {:?}", b.forest, b.partitions);
}
