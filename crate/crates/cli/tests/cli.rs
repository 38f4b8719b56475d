use std::process::{Command, Output};

use serde_json::Value;

fn horolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horolab"))
        .args(args)
        .env_remove("HOROLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json_stdout(args: &[&str]) -> Value {
    let out = horolab(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn pressure_is_normalized() {
    let v = json_stdout(&["pressure", "--model", "full2-cosh", "--u-grid", "-2:2:0.1"]);
    assert!((v["P0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((v["H0"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["curve"].as_array().unwrap().len(), 41);
}

#[test]
fn good_passes_every_trial() {
    let v = json_stdout(&["good", "--trials", "10000", "--seed", "1"]);
    assert_eq!(v["pass_count"], 10000);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = horolab(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let out = horolab(&["pressure", "--model", "/nonexistent/model.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = horolab(&["window1", "--eta", "1.5", "--samples", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_horolab"))
        .args(["good", "--trials", "3"])
        .env("HOROLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_horolab"))
            .args(["window1", "--eta", "0.5", "--samples", "40", "--seed", "7"])
            .arg("--out")
            .arg(&json)
            .arg("--csv")
            .arg(&csv)
            .env("HOROLAB_THREADS", if tag == "a" { "1" } else { "2" })
            .output()
            .unwrap();
        assert!(out.status.code().is_some());
        (std::fs::read(json).unwrap(), std::fs::read(csv).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert!(!a.0.is_empty() && !a.1.is_empty());
    assert_eq!(a, b);
}

#[test]
fn every_subcommand_runs_on_builtins() {
    let v = json_stdout(&["flow", "--T", "5", "--samples", "4"]);
    assert_eq!(v["xi_variance"].as_array().unwrap().len(), 1);
    let v = json_stdout(&[
        "clt",
        "--cover",
        "z2",
        "--T",
        "20",
        "--samples",
        "8",
        "--points",
        "4",
    ]);
    assert_eq!(v["fits"].as_array().unwrap().len(), 2);
    let v = json_stdout(&["window2", "--samples", "20", "--log-T-max", "6"]);
    assert_eq!(v["delta"], 0.05);
    let v = json_stdout(&["keylemma", "--samples", "50", "--log-T", "4,5"]);
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
    let v = json_stdout(&["orbit", "--L", "0"]);
    assert_eq!(v["cells_hit"], 1);
    let v = json_stdout(&[
        "joining",
        "--spec1",
        "kerphi",
        "--spec2",
        "kerphi_psi2",
        "--g0",
        "a1 b1",
        "--T",
        "100",
        "--starts",
        "2",
        "--volume-samples",
        "10000",
    ]);
    assert_eq!(
        (v["index1"].as_str(), v["index2"].as_str()),
        (Some("2"), Some("1"))
    );
    assert!(v["tv1_median"].as_f64().unwrap() < 1.0);
}

#[test]
fn incommensurable_pair_is_reported() {
    let v = json_stdout(&["joining", "--spec1", "kerphi", "--spec2", "kerphi_b"]);
    assert_eq!(v["commensurable"], false);
    assert!(v.get("tv1_median").is_none());
}

#[test]
fn subgroup_and_model_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("sub.json");
    std::fs::write(&sub, r#"{"kernel_of": [{"values": {"a1": [1]}}]}"#).unwrap();
    let v = json_stdout(&["orbit", "--spec", sub.to_str().unwrap(), "--L", "2"]);
    assert_eq!(v["words"], 37);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{").unwrap();
    let out = horolab(&["orbit", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
