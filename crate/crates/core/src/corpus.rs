//! The bundled example programs and formula suites.

use crate::dl::LFormula;
use crate::memstruct::{ElemSet, MemoryStructure, Relation, Vocabulary};
use crate::prog::ProgramGraph;
use crate::sl::SLFormula;
use crate::syntax::{parse_formula, parse_program, parse_sl, ParseError};

pub const COMPANY: &str = include_str!("../examples/company.sv");
pub const COMPANY_MUTATED: &str = include_str!("../examples/company_mutated.sv");
pub const VFS: &str = include_str!("../examples/vfs.sv");

pub fn company() -> ProgramGraph {
    parse_program(COMPANY).expect("bundled program parses")
}

pub fn company_mutated() -> ProgramGraph {
    parse_program(COMPANY_MUTATED).expect("bundled program parses")
}

pub fn vfs() -> ProgramGraph {
    parse_program(VFS).expect("bundled program parses")
}

/// Fields `f, g`, concepts `C, D`, variable `x`.
pub fn small_vocabulary() -> Vocabulary {
    let mut v = Vocabulary::new();
    v.add_field("f").expect("fresh");
    v.add_field("g").expect("fresh");
    v.add_concept("C").expect("fresh");
    v.add_concept("D").expect("fresh");
    v.add_var("x").expect("fresh");
    v
}

/// Twenty formulas over [`small_vocabulary`]. The company invariants use
/// ELst = C, PLst = D, wrkFor = f, mngBy = g (isMngr = g in the Boolean-field
/// invariant, f in the manager invariant). The VFS invariants use
/// UsedList = C, UnusedList = D, DTree = Alloc minus both lists,
/// dentryF = firstChild = f, FileId = nextSibling = g.
pub const L_CORPUS: [(&str, &str); 20] = [
    ("company_allocated", "D | C <= Alloc"),
    ("company_disjoint", "D & C <= bot"),
    ("company_proj_wrkfor", "D <= ex f . o:null"),
    ("company_emp_mngby", "C <= ex g . o:null"),
    ("company_wrkfor_target", "ex f^- . C <= D | o:null"),
    ("company_boolean", "ex g^- . C <= o:T | o:F"),
    ("company_manager", "ex g^- . D <= C & ex f . o:T | o:null"),
    ("company_manager_works", "g & (top x C) <= f^-"),
    ("vfs_disjoint", "C | D <= Alloc && C & D == bot && C & (Alloc & !(C | D)) == bot"),
    ("vfs_null_fields", "C | D <= ex f . o:null && Alloc & !(C | D) <= ex g . o:null"),
    ("vfs_root_dir", "Alloc & !(C | D) & !(ex f^- . Alloc) & !(ex g^- . Alloc) <= ex f . o:null"),
    ("vfs_used", "ex f^- . (Alloc & !(C | D)) == C"),
    ("vfs_leaf", "Alloc & !(C | D) & ex f . !o:null <= ex f . o:null"),
    ("vfs_unique_id", "func(g^- & (top x (C | D)))"),
    ("func_field", "func(f)"),
    ("implication", "o:x <= C -> ex f . o:x <= D"),
    ("update", "!(C <= bot) || f \\ (o:x x top) | (o:x, o:null) <= g"),
    ("role_algebra", "ex (f & g) . top == ex (f | g)^- . C"),
    ("assignment_shape", "C & ex f . o:null == D & ex f . o:x"),
    ("products", "func(f | g) && (C x D) <= f -> C <= bot"),
];

pub fn l_corpus() -> Vec<(String, LFormula)> {
    let v = small_vocabulary();
    L_CORPUS.iter().map(|(n, t)| (n.to_string(), parse_formula(t, Some(&v)).expect("corpus formula parses"))).collect()
}

pub const SL_CORPUS: [&str; 6] = [
    "emp",
    "ls(a, null)",
    "ls(a, b) * ls(b, null)",
    "a |-> [next: b]",
    "ls(a, b) * ls(b, a)",
    "true | ls(eHd, e) * ls(e, null) * ls(pHd, null)",
];

pub fn sl_corpus() -> Result<Vec<SLFormula>, ParseError> {
    SL_CORPUS.iter().map(|t| parse_sl(t)).collect()
}

/// An employee of an initial company state: the index of the project it
/// works for, if any, and whether it is a manager.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Employee {
    pub works_for: Option<usize>,
    pub manager: bool,
}

/// A state satisfying `shp` and `cnt` of the company program's initial
/// location, with `reserve` free cells. Project `p` is managed by the first
/// manager working for it, if any.
pub fn company_state(g: &ProgramGraph, employees: &[Employee], projects: usize, reserve: usize) -> MemoryStructure {
    let ne = employees.len();
    let mut m = MemoryStructure::skeleton(&g.vocab, ne + projects, 0, reserve);
    let emp = |i: usize| 3 + i;
    let proj = |p: usize| 3 + ne + p;
    let null = 0;
    for (i, em) in employees.iter().enumerate() {
        m.set_field("next", emp(i), if i + 1 < ne { emp(i + 1) } else { null });
        m.set_field("wrkFor", emp(i), em.works_for.map(proj).unwrap_or(null));
        m.set_field("mngBy", emp(i), null);
        m.set_field("isMngr", emp(i), if em.manager { 1 } else { 2 });
    }
    for p in 0..projects {
        m.set_field("next", proj(p), if p + 1 < projects { proj(p + 1) } else { null });
        m.set_field("wrkFor", proj(p), null);
        let manager = (0..ne).find(|&i| employees[i].manager && employees[i].works_for == Some(p));
        m.set_field("mngBy", proj(p), manager.map(emp).unwrap_or(null));
        m.set_field("isMngr", proj(p), null);
    }
    m.set_const("eHd", if ne > 0 { emp(0) } else { null });
    m.set_const("pHd", if projects > 0 { proj(0) } else { null });
    let elst: ElemSet = (0..ne).map(emp).collect();
    let plst: ElemSet = (0..projects).map(proj).collect();
    m.set_unary("ELst", elst);
    m.set_unary("PLst", plst);
    m.set_unary("ELst_gho", elst);
    m.set_unary("PLst_gho", plst);
    let alloc = m.alloc();
    let wrk = m.binary("wrkFor").expect("field").clone();
    let gho = Relation::from_pairs(m.size(), wrk.pairs().filter(|&(a, _)| alloc.contains(a)));
    m.set_binary("wrkFor_gho", gho);
    m
}
