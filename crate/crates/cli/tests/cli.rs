use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const T1: &str = r#"{"type":"set_cover","elements":["e1","e2"],
 "sets":[{"id":"S1","members":["e1"],"w1":1},{"id":"S2","members":["e2"],"w1":1},{"id":"S3","members":["e1","e2"],"w1":1.5}],
 "lambda":2,"budget":1.5,
 "distribution":{"kind":"explicit","scenarios":[
   {"active":["e1"],"w2":{"S1":2,"S2":2,"S3":3},"p":0.5},
   {"active":["e1","e2"],"w2":{"S1":2,"S2":2,"S3":3},"p":0.3},
   {"active":[],"w2":{"S1":2,"S2":2,"S3":3},"p":0.2}]}}"#;

// the only client is always active and sits at distance 1 > B
const FAR: &str = r#"{"type":"facility_location","facilities":[{"id":"f","f1":1}],"clients":["c"],
 "metric":[[1]],"lambda":2,"budgets":{"total":0.5},
 "distribution":{"kind":"explicit","scenarios":[{"active":["c"],"p":1}]}}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskaverse")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn solve_t1(inst: &str, out: &Path) -> Output {
    let o = out.to_str().unwrap();
    let args = ["solve", "--mode", "budget", "--instance", inst, "--rho", "0.3", "--kappa", "0.5", "--eps", "0.3", "--gamma", "0.05", "--seed", "7", "--out", o];
    run(&args)
}

#[test]
fn budget_mode_on_t1() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.json", T1);
    let out = solve_t1(&inst, &dir.path().join("a"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/report.json")).unwrap()).unwrap();
    assert!(rep["exceedance_estimate"].as_f64().unwrap() <= 0.45);
    assert_eq!(rep["flags"]["seed"], 7);
    let trace = fs::read_to_string(dir.path().join("a/trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("delta,cost,p_prime,wallclock_ms"));
    assert_eq!(trace.lines().count(), rep["trace"].as_array().unwrap().len() + 1);
}

#[test]
fn same_seed_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.json", T1);
    assert!(solve_t1(&inst, &dir.path().join("a")).status.success());
    assert!(solve_t1(&inst, &dir.path().join("b")).status.success());
    let a = fs::read(dir.path().join("a/report.json")).unwrap();
    let b = fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn chance_mode_rejects_budget() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.json", T1);
    let out = run(&["solve", "--mode", "chance", "--budget", "1", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--budget"));
    let out = run(&["chance", "--budget", "1", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn declared_infeasibility_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "far.json", FAR);
    let out = run(&["fl", "--instance", &inst, "--rho", "0.2", "--full-support"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(run(&["solve", "--instance", "x.json", "--rho", "nope"]).status.code(), Some(1));
    assert_eq!(run(&["gen", "--family", "unknown"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--instance", "/no/such/file.json"]).status.code(), Some(1));
}

#[test]
fn exact_and_round_on_t1() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "t1.json", T1);
    let out = run(&["exact", "--instance", &inst, "--rho", "0.3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // buying S3 up front covers every scenario at cost 1.5
    assert!((v["opt"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert_eq!(v["integer"]["cost"], 1.5);
    let out = run(&["round", "--instance", &inst, "--rho", "0.3", "--full-support"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["integer"]["stage1"][0], "S3");
}

#[test]
fn generated_lb1_matches_family() {
    let out = run(&["gen", "--family", "lb1", "--budget", "12", "--rho", "0.1", "--kappa", "0.2", "--p-a2", "0"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let w1: Vec<f64> = v["sets"].as_array().unwrap().iter().map(|s| s["w1"].as_f64().unwrap()).collect();
    assert_eq!(w1, vec![12.0; 3]);
    let again = run(&["gen", "--family", "random", "--m", "6", "--n", "5", "--seed", "1"]);
    assert_eq!(again.stdout, run(&["gen", "--family", "random", "--m", "6", "--n", "5", "--seed", "1"]).stdout);
}
