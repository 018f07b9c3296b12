//! End-to-end tests of the `driftwave` binary: output schemas, determinism,
//! and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_driftwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn analyze_fixture_produces_expected_document() {
    let out = run(&["analyze", "--fixture", "ex-1.1"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["D"], 5);
    assert_eq!(doc["hypothesis"], "A");
    assert_eq!(doc["case"], "Thm1.3-i");
    assert!((doc["pair_r"].as_f64().unwrap() - 2.8).abs() < 1e-12);
    assert_eq!(doc["ranks"], serde_json::json!([2, 1]));

    let out = run(&["analyze", "--fixture", "kolmogorov-m1"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["D"], 4);
    assert!((doc["pair_r"].as_f64().unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn analyze_is_byte_deterministic() {
    let a = run(&["analyze", "--fixture", "anomalous-7.4-k2"]);
    let b = run(&["analyze", "--fixture", "anomalous-7.4-k2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn kernel_condition_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 2, "Q": [1,0,0,0], "B": [0,0,0,0]}"#).unwrap();
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("kernel condition"), "{msg}");
}

#[test]
fn parse_errors_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"n\": 2,\n  \"Q\": [1,0,0,0]\n  \"B\": []}").unwrap();
    let out = run(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line"), "{msg}");
}

#[test]
fn volume_csv_matches_known_rows() {
    let out = run(&[
        "volume",
        "--fixture",
        "kolmogorov-m1",
        "--t0",
        "1",
        "--t1",
        "4",
        "--samples",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,V,hyp_a_envelope,hyp_b_envelope");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let v: f64 = first[1].parse().unwrap();
    assert!((v - 1.0 / 12.0).abs() < 1e-10, "V(1) = {v}");

    // free-2d at t = 2: V = 4.
    let out = run(&[
        "volume", "--fixture", "free-2d", "--t0", "2", "--t1", "4", "--samples", "2",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let v: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 4.0).abs() < 1e-9);

    // anomalous-7.4-k2 at t = 1: (1/96)(2 + cos 2 - 1).
    let out = run(&[
        "volume", "--fixture", "anomalous-7.4-k2", "--t0", "1", "--t1", "2", "--samples", "2",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    let v: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    let want = (2.0 + 2f64.cos() - 1.0) / 96.0;
    assert!((v - want).abs() < 1e-10, "V(1) = {v} vs {want}");
}

#[test]
fn verify_volume_suite_passes_and_emits_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--fixture",
        "kolmogorov-m1",
        "--suite",
        "volume",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["suite_name"], "volume");
    assert!(dir.path().join("kolmogorov-m1.volume.json").exists());
    assert!(dir.path().join("kolmogorov-m1.volume.csv").exists());
}

#[test]
fn verify_group_suite_passes_on_free_line() {
    let out = run(&[
        "verify",
        "--fixture",
        "free-1d",
        "--suite",
        "group",
        "--grid-n",
        "256",
        "--grid-l",
        "20",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_rejects_inadmissible_pair_exponent() {
    // D = 4 bounds r strictly below 4.
    let out = run(&[
        "verify",
        "--fixture",
        "kolmogorov-m1",
        "--suite",
        "strichartz",
        "--pair-r",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("admissible range"), "{msg}");
}

#[test]
fn verify_unknown_suite_exits_one() {
    let out = run(&["verify", "--fixture", "free-1d", "--suite", "nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn propagate_roundtrip_and_guard_violation() {
    let dir = tempfile::tempdir().unwrap();
    // t = 0 must reproduce the probe bit for bit through the field file.
    let out = run(&[
        "propagate",
        "--fixture",
        "free-1d",
        "--t",
        "0",
        "--grid-n",
        "64",
        "--grid-l",
        "6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let field = dir.path().join("free-1d.t0.field");
    assert!(field.exists());
    assert!(Path::new(&format!("{}.meta", field.display())).exists());
    assert!(dir.path().join("free-1d.norms.csv").exists());

    let bytes_once = std::fs::read(&field).unwrap();
    let out2 = run(&[
        "propagate",
        "--fixture",
        "free-1d",
        "--t",
        "0",
        "--grid-n",
        "64",
        "--grid-l",
        "6",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out2.status.success());
    assert_eq!(bytes_once, std::fs::read(&field).unwrap());

    // Norm preservation at a propagated time.
    let out = run(&[
        "propagate",
        "--fixture",
        "free-1d",
        "--t",
        "0,1",
        "--grid-n",
        "256",
        "--grid-l",
        "36",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!((rows[0][1] - rows[1][1]).abs() / rows[0][1] < 1e-6, "L2 norm drifted: {rows:?}");

    // Guard violation: expanding flow over a long horizon -> exit 4.
    let out = run(&[
        "propagate",
        "--fixture",
        "conformal-1d",
        "--t",
        "3.0",
        "--grid-n",
        "128",
        "--grid-l",
        "8",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn propagate_consumes_stored_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "propagate",
        "--fixture",
        "free-1d",
        "--t",
        "0.2",
        "--grid-n",
        "128",
        "--grid-l",
        "18",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stored = dir.path().join("free-1d.t0.field");
    let out = run(&[
        "propagate",
        "--fixture",
        "free-1d",
        "--field",
        stored.to_str().unwrap(),
        "--t",
        "-0.2",
        "--out",
        dir.path().join("back").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_input_selection_exits_one() {
    let out = run(&["analyze"]);
    assert_eq!(out.status.code(), Some(1));
}
