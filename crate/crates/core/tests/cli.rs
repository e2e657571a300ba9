//! End-to-end runs of the rsverify binary.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_rsverify")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn stable_part(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn verify_flagship_and_reports_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("flagship.cfg");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for r in [&a, &b] {
        let (code, _) = run(&["verify", "--config", cfg.to_str().unwrap(), "--report", r.to_str().unwrap()]);
        assert_eq!(code, 0);
    }
    let report = stable_part(&a);
    assert_eq!(report, stable_part(&b));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["verdict"], "pass");
    let main = report["checks"].as_array().unwrap().iter().find(|c| c["name"] == "main{5,7}").unwrap();
    assert_eq!(main["pass"], true);
}

#[test]
fn cache_warm_then_verify_hits() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = config("quadratic.cfg");
    let (cfg, cache) = (cfg.to_str().unwrap(), cache.to_str().unwrap());
    assert_eq!(run(&["cache", "warm", "--config", cfg, "--cache", cache]).0, 0);
    let report = dir.path().join("r.json");
    assert_eq!(run(&["verify", "--config", cfg, "--cache", cache, "--report", report.to_str().unwrap()]).0, 0);
    let v = stable_part(&report);
    assert!(v["environment"]["cache_hits"].as_u64().unwrap() > 0);
    let listed = Command::new(env!("CARGO_BIN_EXE_rsverify")).args(["cache", "list", "--cache", cache]).output().unwrap();
    let lines: Vec<String> = String::from_utf8(listed.stdout).unwrap().lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    let mut sorted = lines.clone();
    sorted.sort();
    assert!(!lines.is_empty());
    assert_eq!(lines, sorted);
    assert_eq!(run(&["cache", "clear", "--cache", cache]).0, 0);
}

#[test]
fn exit_codes() {
    let (code, err) = run(&["verify", "--config", config("torsion.cfg").to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(err.contains("torsion-free violation"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "prime_powers = 5:1\nS = inf, 5\n").unwrap();
    assert_eq!(run(&["verify", "--config", bad.to_str().unwrap()]).0, 2);
    assert_eq!(run(&["verify", "--precision", "many"]).0, 2);
    assert_eq!(run(&["algebra-suite", "--seed", "11", "--report", dir.path().join("s.json").to_str().unwrap()]).0, 0);
}
