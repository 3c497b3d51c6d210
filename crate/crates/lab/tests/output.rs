use std::fs;
use std::path::Path;

use gbc_lab::{parse_config, run_scenario, write_outputs, RunInfo, ScenarioOutput};
use serde_json::Value;
use sha2::{Digest, Sha256};

const SMALL_MEASUREMENT: &str = "\
[run]
scenario = measurement
seed = 3
ensemble = 3
duration = 2
[state]
c1 = 0.6
c2 = 0.8
[pointer]
sweep = [1, 4]
sweep_runs = 1
sweep_duration = 1
";

fn info(workers: usize) -> RunInfo {
    RunInfo {
        command: "measure".into(),
        config: Value::Null,
        seed: 3,
        workers,
        wall_clock_seconds: 0.0,
    }
}

fn run_into(dir: &Path, workers: usize) -> Vec<(String, String)> {
    let mut cfg = parse_config(SMALL_MEASUREMENT).unwrap();
    cfg.run.workers = workers;
    let out = run_scenario(&cfg).unwrap();
    write_outputs(&[out], dir, &info(workers)).unwrap();
    let mut digests: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let hash = Sha256::digest(fs::read(&p).unwrap());
            let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect();
    digests.sort();
    digests
}

#[test]
fn empty_run_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(&[], dir.path(), &info(1)).unwrap();
    assert_eq!(written.len(), 1);
    assert!(written[0].ends_with("manifest.json"));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(&written[0]).unwrap()).unwrap();
    assert_eq!(manifest["files"], serde_json::json!(["manifest.json"]));
    assert!(manifest["version"].is_string());
}

#[test]
fn measurement_writes_the_branch_weight_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let digests = run_into(dir.path(), 1);
    let names: Vec<&str> = digests.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"branch_weights.csv"));
    let table = fs::read_to_string(dir.path().join("branch_weights.csv")).unwrap();
    assert_eq!(
        table.lines().next(),
        Some("t,w_branch1,w_branch2,w_gap,w_empty")
    );
    let report: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("measurement_report.json")).unwrap(),
    )
    .unwrap();
    for key in ["config", "seed", "results", "warnings", "version"] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["seed"], 3);
}

#[test]
fn same_seed_reproduces_every_table() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_into(a.path(), 1), run_into(b.path(), 1));
}

#[test]
fn worker_count_does_not_change_the_tables() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(run_into(a.path(), 1), run_into(b.path(), 2));
}

#[test]
fn several_scenarios_get_prefixed_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| ScenarioOutput {
        name: name.into(),
        config: Value::Null,
        seed: 0,
        results: Value::Null,
        warnings: Vec::new(),
        tables: Vec::new(),
    };
    let written = write_outputs(&[out("a"), out("b")], dir.path(), &info(1)).unwrap();
    let names: Vec<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["a_report.json", "b_report.json", "manifest.json"]);
}
