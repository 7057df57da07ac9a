use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn swsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swsync")).args(args).env_remove("SWSYNC_OUT_DIR").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn fit_reports_upper_abscissa() {
    let v = json_of(&swsync(&["fit", "--m1", "10", "--m2", "114", "--m3", "1431"]));
    assert!((v["x3"].as_f64().unwrap() - 19.76).abs() < 0.01);
    assert_eq!(v["inputs"]["m3"], 1431.0);
}

#[test]
fn expected_moments_with_note() {
    let v = json_of(&swsync(&["moments", "--expected", "--k", "3", "--r", "4", "--variant", "paper"]));
    assert_eq!((v["q1"].as_f64(), v["q2"].as_f64(), v["q3"].as_f64()), (Some(10.0), Some(114.0), Some(1406.0)));
    assert!(!v["notes"].as_array().unwrap().is_empty());
    assert_eq!(v["inputs"]["variant"], "paper");
}

#[test]
fn generate_then_eigs() {
    let gen = swsync(&["generate", "--nodes", "6", "--k", "1", "--r", "0", "--seed", "1"]);
    assert!(gen.status.success());
    let mut child = Command::new(env!("CARGO_BIN_EXE_swsync"))
        .arg("eigs")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&gen.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda"));
    let vals: Vec<f64> = lines.map(|l| l.parse().unwrap()).collect();
    for (a, b) in vals.iter().zip([0.0, 1.0, 1.0, 3.0, 3.0, 4.0]) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn generation_is_deterministic() {
    let args = ["generate", "--nodes", "300", "--k", "3", "--r", "4", "--seed", "42"];
    let (a, b) = (swsync(&args), swsync(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, swsync(&["generate", "--nodes", "300", "--k", "3", "--r", "4", "--seed", "43"]).stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(swsync(&["fit", "--m1", "6", "--m2", "42", "--m3", "294"]).status.code(), Some(1));
    assert_eq!(swsync(&["fit", "--m1", "abc", "--m2", "1", "--m3", "1"]).status.code(), Some(2));
    assert_eq!(swsync(&["fit", "--m1", "1", "--m2", "1", "--m3", "1", "--bogus"]).status.code(), Some(2));
    assert_eq!(swsync(&["generate", "--nodes", "6", "--k", "1", "--r", "0"]).status.code(), Some(2));
    assert_eq!(swsync(&["generate", "--nodes", "4", "--k", "2", "--r", "0", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(
        swsync(&["predict", "--nodes", "512", "--k", "3", "--r", "4", "--source", "exact"]).status.code(),
        Some(2)
    );
    assert_eq!(swsync(&["simulate", "g.edges", "--gamma", "1", "--dt", "0", "--seed", "1"]).status.code(), Some(2));
    let missing = swsync(&["eigs", "/nonexistent/graph.edges"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
}

#[test]
fn predict_literal_interval() {
    let v = json_of(&swsync(&[
        "predict",
        "--nodes",
        "512",
        "--k",
        "3",
        "--r",
        "4",
        "--source",
        "literal",
        "--m1",
        "10",
        "--m2",
        "114",
        "--m3",
        "1431",
        "--sigma-max",
        "4.7",
    ]));
    assert!((v["gamma_max"].as_f64().unwrap() - 0.238).abs() < 0.005);
    for key in ["sigma_max", "x1", "x3", "params", "inputs"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn files_land_in_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_swsync")).args(args).env("SWSYNC_OUT_DIR", dir.path()).output().unwrap()
    };
    assert!(run(&["generate", "--nodes", "12", "--k", "1", "--r", "0", "--seed", "3"]).status.success());
    let graph = dir.path().join("graph.edges");
    assert!(graph.exists());
    let g = graph.to_str().unwrap();
    let first = run(&["simulate", g, "--gamma", "1.0", "--t-end", "10", "--seed", "5", "--amplitude", "0.1"]);
    let v: Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(v["inputs"]["seed"], 5);
    assert!(v["verdict"].is_string());
    let trace = std::fs::read(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with(b"t,err_max,err_rms\n"));
    run(&["simulate", g, "--gamma", "1.0", "--t-end", "10", "--seed", "5", "--amplitude", "0.1"]);
    assert_eq!(trace, std::fs::read(dir.path().join("trace.csv")).unwrap());
    assert!(run(&["moments", g]).status.success());
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("moments.json")).unwrap()).unwrap();
    assert_eq!(m["q1"], 2.0);
}

#[test]
fn validate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let out = swsync(&[
        "validate",
        "--nodes",
        "30",
        "--k",
        "2",
        "--r",
        "2",
        "--gammas",
        "0,0.2",
        "--seeds",
        "1,2",
        "--amplitude",
        "0.1",
        "--t-end",
        "20",
        "--sigma-max",
        "4.7",
        "--output",
        csv.to_str().unwrap(),
    ]);
    let v = json_of(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("gamma,seed,verdict,final_err\n"));
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("0,1,not_synchronized,"));
}

#[test]
fn msf_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("msf.csv");
    let v = json_of(&swsync(&["msf", "--linearization", "fixed-z-decay", "--output", csv.to_str().unwrap()]));
    assert!((v["sigma_max"].as_f64().unwrap() - 4.7).abs() < 0.2);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 77);
}

#[test]
fn repro_needs_a_directory() {
    assert_eq!(swsync(&["repro", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(swsync(&["repro", "--out", "x"]).status.code(), Some(2));
}
