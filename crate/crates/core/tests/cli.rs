use std::path::PathBuf;
use std::process::{Command, Output};

use heapdl::corpus::{company, company_state, Employee};
use heapdl::memstruct::structure_to_json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_heapdl"))
}

fn example(name: &str) -> String {
    format!("{}/examples/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("heapdl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn init_state() -> String {
    let g = company();
    let emps = [Employee { works_for: None, manager: false }, Employee { works_for: Some(0), manager: true }];
    structure_to_json(&company_state(&g, &emps, 1, 2), Some(&g.vocab))
}

#[test]
fn verify_company_exits_zero_with_json() {
    let o = bin().args(["verify", &example("company.sv"), "--bound", "5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "VERIFIED");
    assert_eq!(v["edges"].as_array().unwrap().len(), 3);
    for e in v["edges"].as_array().unwrap() {
        assert_eq!(e["verdict"], "NoCounterexampleUpTo");
        assert_eq!(e["bound"], 5);
    }
}

#[test]
fn verify_mutant_exits_one_with_a_concrete_witness() {
    let o = bin().args(["verify", &example("company_mutated.sv"), "--text"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("CONCRETE"), "{text}");
    assert!(text.trim_end().ends_with("REFUTED"), "{text}");

    let o = bin().args(["verify", &example("company_mutated.sv"), "--edge", "ll:ll"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["edges"][0]["verdict"], "Counterexample");
    assert!(v["edges"][0]["witness"].is_object());
    assert!(v["edges"][0]["assignment"].is_object());
}

#[test]
fn tiny_conflict_budget_is_inconclusive() {
    let o = bin().args(["verify", &example("company.sv"), "--conflicts", "0", "--edge", "ll:ll"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("\"verdict\": \"Inconclusive\""), "{}", stdout(&o));
}

#[test]
fn input_errors_exit_three() {
    let o = bin().args(["verify", "/nonexistent.sv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().args(["verify", &example("company.sv"), "--bound", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let bad = scratch("bad.sv", "fields next;\nlocation l0 init { shp: ls(x, null) }");
    let o = bin().args(["verify", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn interpret_runs_a_path() {
    let s = scratch("init.json", &init_state());
    let o = bin()
        .args([
            "interpret",
            &example("company.sv"),
            "--structure",
            s.to_str().unwrap(),
            "--path",
            "lb:ll,ll:ll",
            "--text",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("pHd = "), "{text}");
    assert!(text.contains("wrkFor: "), "{text}");

    let o = bin()
        .args(["interpret", &example("company.sv"), "--structure", s.to_str().unwrap(), "--path", "lb:le"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_reports_violations() {
    let good = scratch("good.json", &init_state());
    let o = bin().args(["validate", good.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "valid");

    let mut v: serde_json::Value = serde_json::from_str(&init_state()).unwrap();
    v["unary"]["MemPool"] = serde_json::json!([]);
    let bad = scratch("bad.json", &v.to_string());
    let o = bin().args(["validate", bad.to_str().unwrap(), "--json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let out: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(out.as_array().unwrap().iter().any(|x| x["condition"] == 10));
}

#[test]
fn translate_prints_fo2_and_shape_images() {
    let o = bin().args(["translate", "--formula", "C <= D"]).output().unwrap();
    assert_eq!(stdout(&o).trim(), "forall x. C(x) -> D(x)");
    let o = bin().args(["translate", "--sl", "ls(a, null)"]).output().unwrap();
    let text = stdout(&o);
    assert!(text.starts_with("alpha: "), "{text}");
    assert!(text.contains("beta:"), "{text}");
    let o = bin().args(["translate", &example("company.sv"), "--formula", "@invariants"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn wp_prints_theta_and_the_instrumented_program() {
    let o = bin()
        .args(["wp", &example("company.sv"), "--edge", "ll:le", "--formula", "o:e <= o:null", "--show-program"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("abo := F"), "{text}");
    assert!(text.lines().count() >= 2);
}
