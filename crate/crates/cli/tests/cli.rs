use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn docroute(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_docroute"))
        .args(args)
        .current_dir(dir)
        .env("DOCROUTE_WORKERS", "2")
        .output()
        .expect("binary runs");
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = docroute(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SPEC: &str = "classes = 3\ndocs_per_class = 8\nlength_mu = 5.0\nlength_sigma = 0.5\nseed = 5\n";

fn prepped(dir: &Path) {
    std::fs::write(dir.join("spec.toml"), SPEC).unwrap();
    ok(dir, &["corpus", "gen", "--spec", "spec.toml", "--out", "raw.jsonl"]);
    ok(dir, &["prep", "--in", "raw.jsonl", "--out", "prepped.jsonl"]);
}

#[test]
fn data_preparation_commands() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    prepped(dir);
    ok(
        dir,
        &["segment", "--in", "prepped.jsonl", "--width", "256", "--min-class-segments", "1", "--out", "segs.jsonl"],
    );
    ok(dir, &["folds", "--segments", "segs.jsonl", "--folds", "3", "--out", "folds.jsonl"]);
    let stats: serde_json::Value =
        serde_json::from_str(&ok(dir, &["corpus", "stats", "--in", "prepped.jsonl", "--segments", "segs.jsonl"])).unwrap();
    assert_eq!(stats["classes"].as_array().unwrap().len(), 3);
    assert_eq!(stats["documents"]["total"], 24);
    let folds = std::fs::read_to_string(dir.join("folds.jsonl")).unwrap();
    assert_eq!(folds.lines().count(), 24);
}

#[test]
fn run_then_report() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    prepped(dir);
    std::fs::write(
        dir.join("run.toml"),
        "corpus = \"prepped.jsonl\"\nbase = \"segment\"\npipeline = \"P3\"\nmin_class_segments = 1\nn_folds = 3\n\
         output = \"records\"\n[classifier]\npreset = \"seg-p3-lr\"\n",
    )
    .unwrap();
    ok(dir, &["run", "--config", "run.toml"]);
    assert!(dir.join("records/seg-p3-lr.jsonl").exists());
    let csv = ok(dir, &["report", "--in", "records", "--format", "csv"]);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("base,classifier,aggregation,pipeline"));
    let md = ok(dir, &["report", "--in", "records", "--format", "markdown"]);
    assert!(md.contains("| Seg | LR | MWA |"));
}

#[test]
fn grid_and_search() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    prepped(dir);
    std::fs::write(
        dir.join("template.toml"),
        "corpus = \"prepped.jsonl\"\nbase = \"document\"\npipeline = \"P4\"\nmin_class_segments = 1\nn_folds = 3\n\
         [classifier]\nkind = \"LR\"\n",
    )
    .unwrap();
    ok(
        dir,
        &["grid", "--config", "template.toml", "--pipelines", "3,4", "--classifiers", "LR", "--out", "grid"],
    );
    let n = std::fs::read_dir(dir.join("grid"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "jsonl"))
        .count();
    assert_eq!(n, 4);
    let out = ok(
        dir,
        &[
            "search", "--config", "template.toml", "--pipeline", "4", "--classifier", "RF", "--base", "document",
            "--budget", "3", "--seed", "2", "--log", "trials.jsonl",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["trials"], 3);
    assert_eq!(v["spec"]["kind"], "RF");
    assert_eq!(std::fs::read_to_string(dir.join("trials.jsonl")).unwrap().lines().count(), 3);
}

#[test]
fn errors_exit_nonzero() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let out = docroute(dir, &["prep", "--in", "missing.jsonl", "--out", "x.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
    let out = docroute(dir, &["report", "--in", ".", "--format", "pdf"]);
    assert!(!out.status.success());
    std::fs::write(
        dir.join("bad.toml"),
        "corpus = \"c.jsonl\"\nbase = \"document\"\npipeline = \"P4\"\nsvd_dim = 10\noutput = \"r\"\n[classifier]\nkind = \"LR\"\n",
    )
    .unwrap();
    let out = docroute(dir, &["run", "--config", "bad.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("svd_dim"));
}
