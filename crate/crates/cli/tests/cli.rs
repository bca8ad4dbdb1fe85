use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chanfactor"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

const RBSC: &str = r#"{"inputs":["a","b","c","d"],"outputs":[0,1],"rows":[[0.7,0.3],[0.3,0.7],[0.7,0.3],[0.3,0.7]]}"#;

#[test]
fn factorize_rbsc() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "rbsc.json", RBSC);
    let dist = write(&dir, "d.json", "[0.1, 0.2, 0.3, 0.4]");
    let out = run(&["factorize", s(&ch), "--dist", s(&dist)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["partition"], serde_json::json!([["a", "c"], ["b", "d"]]));
    assert_eq!(v["reduced"]["rows"], serde_json::json!([[0.7, 0.3], [0.3, 0.7]]));
    assert_eq!(v["reduced"]["inputs"], serde_json::json!(["a", "b"]));
    assert_eq!(v["cardinality"], 2);
    // H(0.4, 0.6) for the classes.
    assert!((v["h_z"].as_f64().unwrap() - 0.9709505944546686).abs() < 1e-12);
}

#[test]
fn factorize_single_input() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "one.json", r#"{"inputs":[0],"outputs":[0,1,2],"rows":[[0.2,0.3,0.5]]}"#);
    let v = json(&run(&["factorize", s(&ch)]));
    assert_eq!(v["partition"], serde_json::json!([[0]]));
    assert_eq!(v["cardinality"], 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad_rows = write(&dir, "bad.json", r#"{"inputs":[0],"outputs":[0,1],"rows":[[0.7,0.2]]}"#);
    assert_eq!(run(&["factorize", s(&bad_rows)]).status.code(), Some(2));
    let broken = write(&dir, "broken.json", "{ not json");
    assert_eq!(run(&["qfactorize", s(&broken)]).status.code(), Some(3));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["factorize", s(&missing)]).status.code(), Some(3));
    let ch = write(&dir, "rbsc.json", RBSC);
    let short = write(&dir, "d.json", "[0.5, 0.5]");
    assert_eq!(run(&["qfactorize", s(&ch), "--dist", s(&short)]).status.code(), Some(2));
}

#[test]
fn qfactorize_round_trip_and_tamper() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "rbsc.json", RBSC);
    let q = dir.path().join("q.json");
    let out = run(&["qfactorize", s(&ch), "--out", s(&q)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&q).unwrap()).unwrap();
    assert_eq!(v["verification"]["valid"], true);
    assert_eq!(v["fidelity"]["all_saturated"], true);
    let e = &v["entropy"];
    assert!(e["s_rho"].as_f64().unwrap() < e["h_z"].as_f64().unwrap());
    assert_eq!(e["h_z"].as_f64().unwrap(), 1.0);

    assert_eq!(run(&["qverify", s(&ch), s(&q)]).status.code(), Some(0));
    let bare = write(&dir, "bare.json", &v["qfactorization"].to_string());
    assert_eq!(run(&["qverify", s(&ch), s(&bare)]).status.code(), Some(0));

    // Swap the two signal states: valid states, wrong statistics.
    let mut swapped = v["qfactorization"].clone();
    let states = swapped["states"].as_array_mut().unwrap();
    states.swap(0, 1);
    let swapped = write(&dir, "swapped.json", &swapped.to_string());
    let out = run(&["qverify", s(&ch), s(&swapped)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn qfactorize_deterministic_channel_has_no_advantage() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "det.json", r#"{"inputs":[0,1,2],"outputs":[0,1],"rows":[[1,0],[0,1],[1,0]]}"#);
    let v = json(&run(&["qfactorize", s(&ch)]));
    let e = &v["entropy"];
    assert!((e["s_rho"].as_f64().unwrap() - e["h_z"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn qfactorize_with_parity_partition_at_half() {
    let dir = TempDir::new().unwrap();
    let ch = write(&dir, "half.json", r#"{"inputs":[0,1,2,3],"outputs":[0,1],"rows":[[0.5,0.5],[0.5,0.5],[0.5,0.5],[0.5,0.5]]}"#);
    let parity = write(&dir, "p.json", "[[0,2],[1,3]]");
    let v = json(&run(&["qfactorize", s(&ch), "--partition", s(&parity)]));
    assert_eq!(v["entropy"]["s_rho"].as_f64().unwrap(), 0.0);
    assert_eq!(v["entropy"]["advantage"].as_f64().unwrap(), 1.0);

    let rbsc = write(&dir, "rbsc.json", RBSC);
    let wrong = write(&dir, "w.json", r#"[["a","b"],["c","d"]]"#);
    assert_eq!(run(&["qfactorize", s(&rbsc), "--partition", s(&wrong)]).status.code(), Some(2));
}

#[test]
fn heatmap_is_deterministic_across_thread_counts() {
    let go = |threads: &str| {
        let out = bin()
            .args(["heatmap", "--p-steps", "21", "--alpha-steps", "11"])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = go("1");
    assert_eq!(one, go("4"));
    let text = String::from_utf8(one).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,alpha,advantage"));
    assert_eq!(text.lines().count(), 1 + 21 * 11);
    assert!(text.lines().any(|l| l == "0.5,0.5,1"));
    assert!(text.lines().any(|l| l.starts_with("0,0.3,") && l.ends_with(",0")));
    assert_eq!(run(&["heatmap", "--p-steps", "1"]).status.code(), Some(2));
}

#[test]
fn phase_scan_cases() {
    for n in ["2", "3"] {
        let out = run(&["phase-scan", "--random", n, "--seed", "17"]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(json(&out)["pass"], true);
    }
    let dir = TempDir::new().unwrap();
    let single = write(&dir, "one.json", r#"{"weights":[1.0],"a":[0.6],"b":[0.8]}"#);
    let v = json(&run(&["phase-scan", s(&single)]));
    assert_eq!(v["entropy"].as_f64().unwrap(), 0.0);
    assert_eq!(v["pass"], true);
    let degenerate = write(&dir, "deg.json", r#"{"weights":[0.5,0.5],"a":[1.0,0.6],"b":[0.0,0.8]}"#);
    assert_eq!(run(&["phase-scan", s(&degenerate)]).status.code(), Some(2));
    let big = run(&["phase-scan", "--random", "6", "--seed", "3"]);
    assert_eq!(json(&big)["method"], "sign-enumeration");
}

#[test]
fn casestudy_curve() {
    let out = run(&["casestudy"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,entropy_rho_t,purity_rho_t,entropy_rho_At");
    assert_eq!(lines.len(), 152);
    assert_eq!(lines[1], "-0.5,0.811278124459,0.625,1");
    assert_eq!(lines[151], "1,1,0.5,0");
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["global_min_t"], -0.5);
    assert_eq!(summary["traceless_constraint_rank"], 7);
    assert_eq!(run(&["casestudy", "--points", "2"]).status.code(), Some(2));
}

#[test]
fn merge_demo_report() {
    let v = json(&run(&["merge-demo"]));
    assert_eq!(v["min_rule_holds"], true);
    assert!((v["pure"]["b_into_c"].as_f64().unwrap() - 0.6009).abs() < 5e-4);
    assert!((v["mixed"][0]["into_near_pure"].as_f64().unwrap() - 0.65).abs() < 1e-3);
}
