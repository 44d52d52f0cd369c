use std::fs;
use std::path::Path;
use std::process::Command;

use foe_lab::{run_experiment, scenario, ExperimentConfig, RunOptions};

const BIN: &str = env!("CARGO_BIN_EXE_foe-lab");

fn small(name: &str, horizon: u64, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = scenario(name).unwrap();
    cfg.horizon = horizon;
    cfg.seeds = seeds;
    cfg
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out_dir: Some(dir.to_path_buf()), summary_only: false, threads: Some(2) }
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn writes_two_files_per_seed_plus_aggregate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("adversarial-3", 500, vec![1, 2, 3]);
    let report = run_experiment(&cfg, &opts(dir.path())).unwrap();
    let names = listing(dir.path());
    assert_eq!(names.len(), 2 * 3 + 2, "{names:?}");
    for seed in 1..=3 {
        assert!(names.contains(&format!("trajectory_seed{seed}.jsonl")));
        assert!(names.contains(&format!("summary_seed{seed}.csv")));
    }
    assert!(names.contains(&"aggregate.csv".to_string()));
    assert!(names.contains(&"manifest.json".to_string()));
    assert_eq!(report.seeds.len(), 3);

    let jsonl = fs::read_to_string(dir.path().join("trajectory_seed2.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 500);
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 1);
    assert_eq!(first["gamma"].as_f64(), Some(1.0));

    let csv = fs::read_to_string(dir.path().join("summary_seed2.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["t", "foe_cum_loss"]);
    assert_eq!(header.len(), 2 + 3 + 2);
    assert_eq!(lines.count(), 500);

    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let rows: Vec<&str> = agg.lines().collect();
    assert!(rows[0].starts_with("t,seeds,"));
    assert!(rows.iter().any(|r| r.starts_with("500,3,")));
}

#[test]
fn block_runs_record_blocks_and_basic_steps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("pd-titfortat", 70_000, vec![4]);
    run_experiment(&cfg, &opts(dir.path())).unwrap();
    let csv = fs::read_to_string(dir.path().join("summary_seed4.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.ends_with("block_start,block_length,controlling_expert,block_loss,running_avg_loss"));
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    let n = last.len();
    let start: u64 = last[n - 5].parse().unwrap();
    let len: u64 = last[n - 4].parse().unwrap();
    assert_eq!(start + len - 1, 70_000);

    let jsonl = fs::read_to_string(dir.path().join("trajectory_seed4.jsonl")).unwrap();
    let mut basic = 0;
    for line in jsonl.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let steps = v["basic"].as_array().unwrap();
        assert_eq!(steps.len() as u64, v["block"]["length"].as_u64().unwrap());
        basic += steps.len();
    }
    assert_eq!(basic, 70_000);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small("iid-bandit-10", 2_000, vec![5, 6, 7]);
    run_experiment(&cfg, &opts(a.path())).unwrap();
    let one_thread = RunOptions { threads: Some(1), ..opts(b.path()) };
    run_experiment(&cfg, &one_thread).unwrap();
    for name in listing(a.path()) {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn manifest_reruns_to_the_same_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = small("heaven-hell-variant", 3_000, vec![2, 9]);
    run_experiment(&cfg, &opts(a.path())).unwrap();
    let manifest = fs::read_to_string(a.path().join("manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["config_sha256"].as_str().unwrap(), cfg.hash());

    let status = Command::new(BIN)
        .arg("--config")
        .arg(a.path().join("manifest.json"))
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(listing(a.path()), listing(b.path()));
    for name in listing(a.path()) {
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name}");
    }
    let reloaded = ExperimentConfig::from_json(&manifest).unwrap();
    assert_eq!(reloaded, cfg);
}

#[test]
fn summary_only_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let status = Command::new(BIN)
        .args(["--scenario", "adversarial-3", "--horizon", "200", "--seeds", "1", "--summary-only", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stdout).contains("seed    1"));
    assert!(!out.exists());
}

#[test]
fn environment_variable_redirects_output() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(BIN)
        .args(["--scenario", "adversarial-3", "--horizon", "50", "--seeds", "3"])
        .env("FOE_LAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    assert!(dir.path().join("trajectory_seed3.jsonl").exists());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"name": "x", "mode": "tilde_foe", "horizon": 10, "seeds": [1],
            "environment": {"kind": "bernoulli", "means": [0.1, 0.2]},
            "pool": {"kind": "uniform"}}"#,
    )
    .unwrap();
    let run = |args: &[&str]| Command::new(BIN).args(args).current_dir(dir.path()).output().unwrap();
    let out = run(&["--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("basic-scale"));
    assert_eq!(run(&["--scenario", "no-such-thing"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--config", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(&["--scenario", "adversarial-3", "--horizon", "0"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let out = Command::new(BIN)
        .args(["--scenario", "adversarial-3", "--horizon", "20", "--seeds", "1", "--out"])
        .arg(file.join("sub"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn presets_are_listed() {
    let out = Command::new(BIN).arg("--list-scenarios").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["pd-titfortat", "pd-titfortat-flat", "chicken-primitive", "heaven-hell", "heaven-hell-variant", "iid-bandit-10", "adversarial-3"] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
