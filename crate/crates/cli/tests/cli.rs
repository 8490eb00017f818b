use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn richcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_richcore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn write_csv(path: &Path, rows: usize, cols: usize, seed: u64) {
    // Small LCG keeps the fixture independent of the library's generators.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut text = String::new();
    for _ in 0..rows {
        let fields: Vec<String> = (0..cols)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{:.6}", ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
            })
            .collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn build_respects_size_on_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_csv(&data, 100, 6, 3);
    let out = richcore(&[
        "build", "--mode", "simple", "-r", "40", "--input", data.to_str().unwrap(), "--target-col", "5",
    ]);
    let report = json(&out);
    assert_eq!(report["n"], 100);
    assert_eq!(report["d"], 5);
    assert!(report["picks"].as_array().unwrap().len() <= 40);
    assert!(report.get("solve").is_none());
}

#[test]
fn agnostic_build_needs_no_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("a.csv");
    write_csv(&data, 50, 3, 9);
    let report = json(&richcore(&["build", "--mode", "agnostic", "-r", "20", "--input", data.to_str().unwrap()]));
    assert_eq!(report["target_agnostic"], true);
    assert!(report["notes"].as_array().unwrap().iter().any(|n| n == "target-agnostic"));
    assert!(report["omega"].is_null());
}

#[test]
fn build_is_reproducible() {
    let args = ["build", "--mode", "multiple_frobenius", "-r", "30", "--synthetic", "gaussian:80,4,3", "--seed", "11"];
    let mut first = json(&richcore(&args));
    let mut second = json(&richcore(&args));
    first.as_object_mut().unwrap().remove("wall_time_ms");
    second.as_object_mut().unwrap().remove("wall_time_ms");
    assert_eq!(first, second);
}

#[test]
fn verify_seed_seven_passes() {
    let report = json(&richcore(&["verify", "--mode", "simple", "-r", "30", "--synthetic", "gaussian:120,5", "--seed", "7"]));
    let solve = &report["solve"];
    assert_eq!(solve["pass"], true);
    let ratio = solve["achieved_ratio"].as_f64().unwrap();
    let bound = report["predicted_bound"].as_f64().unwrap();
    assert!(ratio >= 1.0 - 1e-9 && ratio <= bound);
}

#[test]
fn verify_nnls_passes() {
    let report = json(&richcore(&[
        "verify", "--mode", "simple", "-r", "25", "--synthetic", "gaussian:90,4", "--domain", "nnls", "--seed", "2",
    ]));
    assert_eq!(report["domain"], "nnls");
    assert_eq!(report["solve"]["pass"], true);
}

#[test]
fn every_mode_verifies() {
    for (mode, spec) in [
        ("multi_objective", "gaussian:60,3,3"),
        ("arbitrary_constrained", "gaussian:12,2,2"),
        ("multiple_spectral", "gaussian:60,3,3"),
        ("multiple_frobenius", "gaussian:60,3,3"),
        ("agnostic", "gaussian:60,3,3"),
    ] {
        let r = if mode == "arbitrary_constrained" { "12" } else { "30" };
        let report = json(&richcore(&["verify", "--mode", mode, "-r", r, "--synthetic", spec, "--seed", "5"]));
        assert_eq!(report["solve"]["pass"], true, "{mode}");
    }
}

#[test]
fn two_point_size_one_is_a_precondition_failure() {
    let out = richcore(&["verify", "--mode", "simple", "-r", "1", "--synthetic", "two-point"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bench_emits_documented_lines() {
    let out = richcore(&["bench", "--mode", "simple", "--synthetic", "gaussian:80,3", "--trials", "4", "--seed", "1"]);
    assert!(out.status.success());
    let lines: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let trials: Vec<&Value> = lines.iter().filter(|l| l["kind"] == "trial").collect();
    let summaries: Vec<&Value> = lines.iter().filter(|l| l["kind"] == "summary").collect();
    assert_eq!(trials.len(), 12);
    assert_eq!(summaries.len(), 3);
    let rs: Vec<u64> = summaries.iter().map(|s| s["r"].as_u64().unwrap()).collect();
    assert_eq!(rs, vec![6, 12, 24]);
    for t in &trials {
        for key in ["r", "trial", "seed", "predicted_bound", "deterministic_ratio", "baseline_ratio", "baseline_infinite"] {
            assert!(t.get(key).is_some(), "missing {key}");
        }
    }
    let keys: Vec<(u64, u64)> = trials.iter().map(|t| (t["r"].as_u64().unwrap(), t["trial"].as_u64().unwrap())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    for s in &summaries {
        assert_eq!(s["deterministic_pass"], true);
    }
}

#[test]
fn bench_threads_do_not_change_output() {
    let args = ["bench", "--mode", "simple", "--synthetic", "gaussian:60,3", "--rs", "10,20", "--trials", "6", "--seed", "4"];
    let strip = |out: Output| -> Vec<Value> {
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("deterministic_ms");
                v
            })
            .collect()
    };
    let one = Command::new(env!("CARGO_BIN_EXE_richcore")).args(args).env("RICHCORE_THREADS", "1").output().unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_richcore")).args(args).env("RICHCORE_THREADS", "4").output().unwrap();
    assert_eq!(strip(one), strip(many));
}

#[test]
fn baseline_worse_on_hard_instance() {
    let out = richcore(&["bench", "--mode", "simple", "--synthetic", "hard:60,3", "--rs", "8,16,32", "--trials", "20", "--seed", "1"]);
    assert!(out.status.success());
    for line in String::from_utf8(out.stdout).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        if v["kind"] == "summary" {
            let det = v["deterministic_ratio"].as_f64().unwrap();
            let max = v["baseline_max"].as_f64().unwrap_or(f64::INFINITY);
            assert!(max >= det, "r = {}", v["r"]);
        }
    }
}

#[test]
fn adversarial_reports() {
    let det = json(&richcore(&["adversarial", "--theorem", "7", "--n", "6", "-r", "3"]));
    assert!(det["worst_ratio"].as_f64().unwrap() >= 2.0 - 1e-6);
    assert_eq!(det["pass"], true);
    let rnd = json(&richcore(&["adversarial", "--theorem", "8", "--n", "6", "-r", "2", "--ell", "2"]));
    assert_eq!(rnd["exact_bound"], "2/5");
    assert_eq!(rnd["success_probability_lower_bound"].as_f64().unwrap(), 0.4);
    assert!(rnd["missed_coreset_ratio"].as_f64().unwrap() >= rnd["ratio_floor"].as_f64().unwrap() - 1e-9);
    let guard = richcore(&["adversarial", "--theorem", "7", "--n", "20", "-r", "3"]);
    assert_eq!(guard.status.code(), Some(3));
}

#[test]
fn malformed_flags_exit_two() {
    assert_eq!(richcore(&["build", "--mode", "simple", "--bogus"]).status.code(), Some(2));
    assert_eq!(richcore(&["build", "--mode", "simple", "-r", "x", "--synthetic", "two-point"]).status.code(), Some(2));
    assert_eq!(richcore(&["verify", "--mode", "simple", "-r", "5", "--synthetic", "gaussian:oops"]).status.code(), Some(2));
    assert_eq!(
        richcore(&["verify", "--mode", "multiple_spectral", "-r", "20", "--synthetic", "gaussian:40,2,2", "--domain", "nnls"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unparseable_csv_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1,2\n3,abc\n").unwrap();
    let out = richcore(&["build", "--mode", "agnostic", "-r", "2", "--input", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = richcore(&["build", "--mode", "simple", "-r", "10", "--synthetic", "gaussian:30,2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["command"], "build");
}
