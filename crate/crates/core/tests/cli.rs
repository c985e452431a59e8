mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use common::{base_target, shifted_target, SuiteSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_suitegauge"));
    c.env_remove("SUITEGAUGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn four_suites(dir: &Path) -> common::Fixture {
    common::write_fixture(
        dir,
        &[
            SuiteSpec { id: "S1", k: 15, feature_mean: 0.0, target: base_target },
            SuiteSpec { id: "S2", k: 15, feature_mean: 0.0, target: base_target },
            SuiteSpec { id: "S3", k: 15, feature_mean: 2.0, target: shifted_target },
            SuiteSpec { id: "S4", k: 15, feature_mean: -1.0, target: shifted_target },
        ],
        4,
        0.2,
        9,
    )
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path, command: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, &format!("manifest_{command}.json"))).unwrap()
}

fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.file_name().unwrap().to_str().unwrap().starts_with("manifest_"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn validate_reports_dropped_instances() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let mut text = read(dir.path(), "features.csv");
    text.push_str("S1_extra,S1,10,NA,1,2,3\n");
    std::fs::write(&fx.features, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&["validate", "--features", fx.features.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let drops = read(&out, "drop_report.csv");
    assert!(drops.lines().nth(1).unwrap().starts_with("S1_extra,S1,"));
    let summary: serde_json::Value = serde_json::from_str(&read(&out, "dataset_summary.json")).unwrap();
    assert_eq!(summary["suites"].as_array().unwrap().len(), 4);
    assert_eq!(summary["dropped_instances"], 1);
    let m = manifest(&out, "validate");
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(listed, vec!["drop_report.csv", "dataset_summary.json"]);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(!out.join(".suitegauge.lock").exists());
}

#[test]
fn compare_features_writes_twelve_cells_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&[
            "compare-features",
            "--features",
            fx.features.to_str().unwrap(),
            "--permutations",
            "19",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let heat = read(&a, "feature_pvalues_heatmap.csv");
    assert_eq!(heat.lines().count(), 13);
    assert!(heat.lines().skip(1).all(|l| !l.starts_with("S1,S1,")));
    assert_eq!(outputs(&a), outputs(&b));
    let m = manifest(&a, "compare_features");
    assert_eq!(m["config"]["permutations"], "19");
    assert_eq!(m["config"]["seed"], "5");
    assert_eq!(m["config"]["scaling"], "row");
    let listed: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let on_disk: Vec<String> = outputs(&a).into_keys().collect();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, on_disk);
}

#[test]
fn evaluate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let out = dir.path().join("out");
    let (f, p, o) = (fx.features.to_str().unwrap(), fx.performance.to_str().unwrap(), out.to_str().unwrap());
    let r = run(&["compare-features", "--features", f, "--permutations", "19", "--out", o]);
    assert!(r.status.success());
    let r = run(&[
        "evaluate", "--features", f, "--performance", p, "--all-algorithms", "--n-trees", "20",
        "--pvalues", out.join("feature_pvalues.json").to_str().unwrap(), "--save-models", "--out", o,
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for name in ["mdae_alg.csv", "abs_errors_alg.csv", "error_matrix_alg.json", "alignment_alg.json", "training_errors.csv", "model_alg_S1.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert_eq!(read(&out, "mdae_alg.csv").lines().count(), 13);
    assert_eq!(read(&out, "training_errors.csv").lines().count(), 5);

    let r = run(&["report", "--out", o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rep: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
    assert_eq!(rep["summary"]["pairs"], 12);
    assert_eq!(rep["algorithms"][0]["algorithm_id"], "alg");
    let m = manifest(&out, "report");
    assert_eq!(m["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_performance_and_select() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let out = dir.path().join("out");
    let (f, p, o) = (fx.features.to_str().unwrap(), fx.performance.to_str().unwrap(), out.to_str().unwrap());
    let r = run(&["compare-performance", "--features", f, "--performance", p, "--algorithm", "alg", "--out", o]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read(&out, "performance_ks_alg_heatmap.csv").lines().count(), 7);

    let r = run(&[
        "select", "--features", f, "--performance", p, "--suite", "S1", "--suite", "S3",
        "--threshold", "0.9", "--count", "3", "--out", o,
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let feats = read(&out, "selected_features.csv");
    assert!(feats.starts_with("instance_id,suite_id,dimensionality,f0,"));
    assert!(feats.lines().skip(1).all(|l| l.split(',').nth(1).unwrap().starts_with("BS")));
    assert!(feats.lines().skip(1).all(|l| l.starts_with("S1/") || l.starts_with("S3/")));
    assert_eq!(read(&out, "selection_overlap.csv").lines().count(), 4);
    let perf = read(&out, "selected_performance.csv");
    assert_eq!(perf.lines().count(), feats.lines().count());
}

#[test]
fn config_file_and_environment_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, format!("features = {}\npermutations = 9\n", fx.features.display())).unwrap();
    let out = dir.path().join("out");
    let o = bin()
        .env("SUITEGAUGE_SEED", "77")
        .args(["compare-features", "--config", conf.to_str().unwrap(), "--permutations", "11", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out, "compare_features");
    assert_eq!(m["config"]["permutations"], "11");
    assert_eq!(m["config"]["seed"], "77");

    std::fs::write(&conf, format!("features = {}\nseed = 3\n", fx.features.display())).unwrap();
    let o = bin()
        .env("SUITEGAUGE_SEED", "77")
        .args(["compare-features", "--config", conf.to_str().unwrap(), "--permutations", "9", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(manifest(&out, "compare_features")["config"]["seed"], "3");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["validate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "--out", o]).status.code(), Some(2));
    assert_eq!(run(&["compare-features", "--features", fx.features.to_str().unwrap(), "--alpha", "2", "--out", o]).status.code(), Some(2));

    let missing = run(&["validate", "--features", "/no/such/features.csv", "--out", o]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("/no/such/features.csv"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "instance_id,suite_id,dimensionality,a\nx,S,2,1.0,9\n").unwrap();
    let r = run(&["validate", "--features", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains(":2"));

    let r = run(&["evaluate", "--features", fx.features.to_str().unwrap(), "--performance", fx.performance.to_str().unwrap(), "--algorithm", "nope", "--out", o]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn held_lock_blocks_a_second_writer() {
    let dir = tempfile::tempdir().unwrap();
    let fx = four_suites(dir.path());
    let out = dir.path().join("out");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(out.join(".suitegauge.lock"), "").unwrap();
    let r = run(&["validate", "--features", fx.features.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_ne!(r.status.code(), Some(0));
    assert!(!out.join("drop_report.csv").exists());
}
