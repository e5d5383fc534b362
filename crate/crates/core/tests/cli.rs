use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpr")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path) -> std::path::PathBuf {
    let pop = dir.join("pop.csv");
    let out = rpr(&["generate", "--seed", "1", "--out", path(&pop)]);
    assert!(out.status.success());
    pop
}

#[test]
fn analyze_reports_c_and_design() {
    let dir = tempfile::tempdir().unwrap();
    let pop = generate(dir.path());
    assert!(dir.path().join("pop.manifest.json").exists());
    let v = json(&rpr(&["analyze", path(&pop), "--design", "112,365"]));
    assert!((v["stats"]["c"].as_f64().unwrap() - 0.6092).abs() < 0.005);
    assert_eq!(v["population_size"], 365);
    let fpc = v["design"]["fpc_rate"].as_f64().unwrap();
    assert!((fpc - (1.0 - 112.0 / 365.0) / 112.0).abs() < 1e-15);
}

#[test]
fn analyze_malformed_csv_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "y,x\n1,2\n3,4\n5,oops\n").unwrap();
    let out = rpr(&["analyze", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    let out = rpr(&["analyze", path(&dir.path().join("missing.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_examples() {
    let args = [
        "plan",
        "--sigma2",
        "0.2006",
        "--confidence",
        "0.90",
        "--population-size",
        "365",
    ];
    let a = json(&rpr(&[&args[..], &["--margin", "0.0583"]].concat()));
    assert_eq!(a["n0"], 160);
    assert_eq!(a["n"], 112);
    let b = json(&rpr(
        &[&args[..], &["--margin-percent", "10", "--mean", "0.5832"]].concat()
    ));
    assert_eq!(b["n0"], 160);
    assert_eq!(b["n"], 112);
    let bad = rpr(&[&args[..], &["--margin", "0"]].concat());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn theory_aoe_and_efficiencies() {
    let moments = "0.5832,0.6277,0.4480,0.7222,0.9125";
    let v = json(&rpr(&["theory", "--moments", moments, "--aoe", "--re"]));
    let mm = &v["aoe"]["minus_minus"];
    assert!((mm["alpha_star"].as_f64().unwrap() + 0.3349).abs() < 1e-3);
    assert!((mm["beta_star"].as_f64().unwrap() - 0.3176).abs() < 1e-3);
    let rows = v["relative_efficiency"].as_array().unwrap();
    let expected = [100.0, 196.11, 16.73, 597.28];
    for (row, e) in rows.iter().zip(expected) {
        assert!((row["percent"].as_f64().unwrap() - e).abs() < 0.5, "{row}");
    }
}

#[test]
fn theory_centre_point() {
    let v = json(&rpr(&[
        "theory",
        "--moments",
        "0.5832,0.6277,0.4480,0.7222,0.9125",
        "--alpha",
        "0.5",
        "--beta",
        "0.5",
        "--design",
        "112,365",
    ]));
    assert_eq!(v["point"]["bias1"], 0.0);
    assert_eq!(v["point"]["gradient"][0], 0.0);
    assert_eq!(v["point"]["gradient"][1], 0.0);
    let out = rpr(&["theory", "--alpha", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn theory_from_analyze_json() {
    let dir = tempfile::tempdir().unwrap();
    let pop = generate(dir.path());
    let stats = dir.path().join("stats.json");
    std::fs::write(&stats, rpr(&["analyze", path(&pop)]).stdout).unwrap();
    let v = json(&rpr(&["theory", "--stats", path(&stats), "--aoe"]));
    assert!((v["c"].as_f64().unwrap() - 0.6092).abs() < 0.005);
    let from_csv = json(&rpr(&["theory", "--stats", path(&pop), "--aoe"]));
    assert_eq!(v["aoe"], from_csv["aoe"]);
}

#[test]
fn surface_region_and_aoe() {
    let out = rpr(&[
        "surface",
        "--kind",
        "region",
        "--alpha=-1:1:0.5",
        "--beta=-1:1:0.5",
        "--c",
        "0",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,beta,c,indicator"));
    assert!(lines.all(|l| l.ends_with(",0")));
    let out = rpr(&["surface", "--kind", "aoe", "--alpha", "0.5", "--c", "0.6092"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "alpha,beta,c\n");
}

#[test]
fn simulate_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pop = generate(dir.path());
    let report = dir.path().join("report.json");
    let per_rep = dir.path().join("reps.csv");
    let out = rpr(&[
        "simulate",
        "--population",
        path(&pop),
        "--reps",
        "1",
        "--n",
        "112",
        "--estimators",
        "mean",
        "ratio",
        "rpr:-0.3349,0.3176",
        "--out",
        path(&report),
        "--per-rep-csv",
        path(&per_rep),
        "--format",
        "json",
    ]);
    let v = json(&out);
    assert_eq!(v["manifest"], "report.manifest.json");
    assert_eq!(v["ranking"].as_array().unwrap().len(), 1);
    assert_eq!(v["ranking"][0]["count"], 1);
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(&per_rep).unwrap();
    assert_eq!(csv.lines().count(), 4);

    let bad = rpr(&[
        "simulate",
        "--population",
        path(&pop),
        "--n",
        "10",
        "--estimators",
        "median",
        "--out",
        path(&report),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    let err = String::from_utf8_lossy(&bad.stderr);
    for token in [
        "mean",
        "ratio",
        "product",
        "rpr",
        "aoe",
        "srivastava",
        "reddy",
        "sahai",
        "singh",
    ] {
        assert!(err.contains(token), "{err}");
    }
}
