use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonuniperc")).args(args).env("NONUNIPERC_OUT", dir).output().expect("binary runs")
}

fn run_config(dir: &Path, body: &str) -> Output {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, body).unwrap();
    run(dir, &["run", cfg.to_str().unwrap()])
}

fn manifest(dir: &Path, experiment: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(experiment).join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const CENSUS: &str = "experiment = \"census\"\nfamily = \"gp(2)\"\nradius = 3\nseed = 5\ncensus.vertices = 50\ncensus.cycles = 100\n";

#[test]
fn census_run_passes_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), CENSUS);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l == "PASS weighted_degree_equals_degree"));
    let m = manifest(dir.path(), "census");
    assert_eq!(m["status"], "pass");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config"]["census.vertices"], 50);
    assert_eq!(m["config"]["census.depth"], 6);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(files, ["census.csv", "census_summary.json"]);
    let csv = std::fs::read_to_string(dir.path().join("census/census.csv")).unwrap();
    assert!(csv.starts_with("vertex,ratio,count,inverse_count,weighted_degree\n"));
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), "experiment = \"nope\"\nfamily = \"gp(2)\"\nradius = 3\nseed = 1\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("valid ids"));
}

#[test]
fn unknown_key_is_a_config_error_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(dir.path(), &format!("{CENSUS}census.bogus = 1\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("census.bogus"));
    let m = manifest(dir.path(), "census");
    assert_eq!(m["status"], "config_error");
    assert_eq!(m["exit_code"], 2);
}

#[test]
fn bad_family_and_radius_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "experiment = \"census\"\nfamily = \"tree(0,2)\"\nradius = 3\nseed = 1\n",
        "experiment = \"census\"\nfamily = \"gp(2)\"\nradius = 0\nseed = 1\n",
        "experiment = \"census\"\nfamily = \"gp(2)\"\nradius = 3\nseed = -1\n",
        "experiment = \"census\"\nfamily = \"gp(2)\"\nradius = 3\n",
        "not toml = = =",
    ] {
        assert_eq!(run_config(dir.path(), body).status.code(), Some(2), "{body}");
    }
}

#[test]
fn exhausted_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = "experiment = \"cheeger\"\nfamily = \"gp(3)\"\nradius = 6\nseed = 1\nbudget.vertex_cap = 1000\n";
    let out = run_config(dir.path(), body);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(dir.path(), "cheeger")["status"], "budget_exceeded");
}

#[test]
fn validate_does_not_write() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, CENSUS).unwrap();
    let out = run(dir.path(), &["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["experiment"], "census");
    assert!(!dir.path().join("census").exists());
}

#[test]
fn list_experiments_names_every_id() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["list-experiments"]);
    assert_eq!(out.status.code(), Some(0));
    let ids: Vec<String> = String::from_utf8_lossy(&out.stdout).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(ids, ["census", "tmtp", "walks", "cheeger", "percolation-sweep", "forests", "psn", "phases-report"]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let body = "experiment = \"walks\"\nfamily = \"tree(2,3)\"\nradius = 5\nseed = 3\nwalk.nmax = 6\nwalk.domination_n = 6\n";
    assert_eq!(run_config(a.path(), &format!("{body}workers = 1\n")).status.code(), Some(0));
    assert_eq!(run_config(b.path(), &format!("{body}workers = 3\n")).status.code(), Some(0));
    for f in ["returns.csv", "domination.json", "walks_summary.json"] {
        let x = std::fs::read(a.path().join("walks").join(f)).unwrap();
        let y = std::fs::read(b.path().join("walks").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}
