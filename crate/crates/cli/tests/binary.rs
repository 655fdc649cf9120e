mod common;

use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catalog-harvest"))
        .args(args)
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn harvest_finalize_eval_round_trip() {
    let root = common::fixture_root();
    let dir = TempDir::new().unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();

    let h = cli(&[
        "harvest",
        root.join("manifest.json").to_str().unwrap(),
        "--fixtures",
        root.join("fixtures").to_str().unwrap(),
        "--out",
        run_s,
    ]);
    assert_eq!(h.status.code(), Some(0), "{}", String::from_utf8_lossy(&h.stderr));
    assert_eq!(summary(&h)["summary"]["pairs"], 5);

    let f = cli(&["finalize", run_s]);
    assert_eq!(f.status.code(), Some(0));
    assert_eq!(summary(&f)["entries"], 5);

    let report = run.join("eval_report.json");
    let e = cli(&[
        "eval",
        run.join("annotations.jsonl").to_str().unwrap(),
        root.join("gt.jsonl").to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(summary(&e)["report"]["ap"], 1.0);
    assert!(report.exists());

    let s = cli(&["stats", run.join("annotations.jsonl").to_str().unwrap(), "--out", dir.path().join("stats").to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(summary(&s)["stats"]["total_pairs"], 5);
}

#[test]
fn sequential_flag_gives_same_matches() {
    let root = common::fixture_root();
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("seq");
    let h = cli(&[
        "harvest",
        root.join("manifest.json").to_str().unwrap(),
        "--fixtures",
        root.join("fixtures").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--sequential",
    ]);
    assert_eq!(h.status.code(), Some(0));
    assert_eq!(
        std::fs::read(out.join("matches.json")).unwrap(),
        std::fs::read(root.join("golden/matches.json")).unwrap()
    );
}

#[test]
fn stage_failures_exit_one_with_summary() {
    let root = common::fixture_root();
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        "[detector]\nurl = \"http://127.0.0.1:9\"\n\n[retry]\nmax_retries = 0\nbase_delay_ms = 1\ntimeout_ms = 500\n",
    )
    .unwrap();
    let out = cli(&[
        "harvest",
        root.join("manifest.json").to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["status"], "error");
    let errors = s["summary"]["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 3);
    assert!(errors.iter().all(|e| e["stage"] == "localization"));
}

#[test]
fn missing_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = cli(&["finalize", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out)["status"], "error");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cli(&["harvest"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}
