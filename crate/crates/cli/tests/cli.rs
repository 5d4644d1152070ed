use std::process::{Command, Output};

use serde_json::Value;

fn vervaat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vervaat"))
        .args(args)
        .env_remove("VERVAAT_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn enumerate_prints_the_exact_pmf() {
    let out = vervaat(&["enumerate", "--n", "4", "--a", "-2"]);
    assert!(out.status.success());
    let v = json(&out);
    let pmf: Vec<(i64, String, String)> = v["pmf"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["l"].as_i64().unwrap(), e["num"].as_str().unwrap().into(), e["den"].as_str().unwrap().into()))
        .collect();
    assert_eq!(pmf, vec![(1, "1".into(), "4".into()), (3, "3".into(), "4".into())]);
    for key in ["pmf_matches_enumeration", "bijection_ok", "uniform_helper_ok", "factorization_ok"] {
        assert_eq!(v[key], Value::Bool(true), "{key}");
    }
}

#[test]
fn usage_and_parity_errors_exit_2() {
    assert_eq!(vervaat(&["enumerate", "--n", "4", "--bogus"]).status.code(), Some(2));
    assert_eq!(vervaat(&["enumerate", "--n", "5", "--a", "-2"]).status.code(), Some(2));
    assert_eq!(vervaat(&["sample", "--process", "nope"]).status.code(), Some(2));
    assert_eq!(vervaat(&["--help"]).status.code(), Some(0));
}

#[test]
fn density_table_has_the_requested_rows() {
    let out = vervaat(&["density", "--family", "fz", "--lambda", "-1", "--grid", "101"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,density,cdf");
    assert_eq!(lines.len(), 102);
    let row = |l: &str| -> Vec<f64> { l.split(',').map(|x| x.parse().unwrap()).collect() };
    assert_eq!(row(lines[1])[1], 0.0);
    assert_eq!(row(lines[101])[1], 0.0);
    assert!((row(lines[101])[2] - 1.0).abs() < 1e-9);
}

#[test]
fn sampling_is_reproducible_and_honours_the_seed_variable() {
    let args = ["sample", "--process", "vervaat-direct", "--grid", "64", "--reps", "3", "--seed", "11"];
    let a = vervaat(&args);
    let b = vervaat(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let from_env = Command::new(env!("CARGO_BIN_EXE_vervaat"))
        .args(["sample", "--process", "vervaat-direct", "--grid", "64", "--reps", "3"])
        .env("VERVAAT_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(from_env.stdout, a.stdout);
    let other = vervaat(&["sample", "--process", "vervaat-direct", "--grid", "64", "--reps", "3", "--seed", "12"]);
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn marginals_give_one_row_per_replicate() {
    let out = vervaat(&["sample", "--process", "bridge", "--lambda", "-0.5", "--grid", "16", "--reps", "5", "--marginals", "0.25,1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rep,0.25,1");
    assert_eq!(lines.len(), 6);
    // the bridge ends at lambda
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(2).unwrap().parse::<f64>().unwrap(), -0.5);
    }
}

#[test]
fn minorant_reads_sampled_paths() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    let csv_arg = csv.to_str().unwrap();
    assert!(vervaat(&["sample", "--grid", "32", "--reps", "4", "--out", csv_arg]).status.success());
    let out = vervaat(&["minorant", "--input", csv_arg]);
    assert!(out.status.success());
    let v = json(&out);
    let list = v["minorants"].as_array().unwrap();
    assert_eq!(list.len(), 4);
    for m in list {
        let vertices = m["vertices"].as_array().unwrap();
        assert_eq!(vertices.first().unwrap(), 0);
        assert_eq!(vertices.last().unwrap(), 32);
        assert_eq!(m["n_segments"].as_u64().unwrap() as usize, vertices.len() - 1);
    }
    let agg = json(&vervaat(&["minorant", "--input", csv_arg, "--aggregate"]));
    assert_eq!(agg["segment_counts"]["n_paths"], 4);
}

#[test]
fn verify_writes_a_report_and_signals_failure() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = vervaat(&["verify", "--experiment", "discrete", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["experiments"][0]["id"], "discrete");
    assert_eq!(v["experiments"][0]["pass"], true);

    let strict = dir.path().join("strict.json");
    std::fs::write(&strict, r#"{"z_max": 0.0}"#).unwrap();
    let out = vervaat(&["verify", "--experiment", "meander-moments", "--reps", "200", "--thresholds", strict.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_reports_are_byte_identical_without_timings() {
    let args = ["verify", "--experiment", "moments-vb", "--reps", "300", "--grid", "64"];
    assert_eq!(vervaat(&args).stdout, vervaat(&args).stdout);
}
