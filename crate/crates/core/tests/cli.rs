//! End-to-end runs of the `frackpz` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use frackpz::experiment::{ExperimentConfig, RunManifest};

fn frackpz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frackpz")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn sample_configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const POISSON: &str = r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.0078125, "sigma": 0.5, "rhs": 1}"#;

#[test]
fn solve_poisson_writes_fields_report_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", POISSON);
    let out = tmp.path().join("out");
    let o = frackpz(&["solve_poisson", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(!manifest.files.is_empty());
    for f in &manifest.files {
        assert!(out.join(&f.path).exists(), "{}", f.path);
    }
    assert!(manifest.files.iter().any(|f| f.path == "report.json"));
    let csv = manifest.files.iter().find(|f| f.path.starts_with("fields/")).unwrap();
    let text = fs::read_to_string(out.join(&csv.path)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x1,value"));
    assert_eq!(lines.count(), 256);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let err = report["result"]["interior_max_rel_error"].as_f64().unwrap();
    assert!(err < 0.05, "{err}");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.015625,
            "problem": {"s": 0.6, "t": 0.5, "q": 2, "m": 4, "variant": "stein"}}"#,
    );
    let mut payloads = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let o = frackpz(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--lambdas", "0:1.2:7", "--seed", "9"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.seed, 9);
        let files: Vec<(String, Vec<u8>)> = manifest.files.iter().map(|f| (f.path.clone(), fs::read(out.join(&f.path)).unwrap())).collect();
        assert!(files.iter().any(|(p, _)| p == "sweep.csv"));
        payloads.push(files);
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn validation_failures_exit_with_two_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("sweep", r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.1,
            "problem": {"s": 0.6, "t": 0.5, "q": 2, "m": 4, "variant": "stein"}, "lambdas": []}"#),
        ("solve_poisson", r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.1, "sigma": 0.5, "typo": 1}"#),
        ("solve_poisson", r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.1, "sigma": 1.5}"#),
        ("iterate", r#"{"kind": "sweep", "domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.1, "sigma": 0.5}"#),
        ("solve_poisson", r#"{"domain": {"shape": "disk", "center": [0, 0], "radius": 1}, "h": 3, "sigma": 0.5}"#),
        ("thresholds", r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.1,
            "problem": {"s": 0.5, "t": 0.5, "q": 9, "m": 1.5, "variant": "half_laplacian"}}"#),
        ("solve_poisson", "not json"),
    ];
    for (k, (kind, text)) in cases.iter().enumerate() {
        let cfg = write_config(tmp.path(), &format!("{k}.json"), text);
        let o = frackpz(&[kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "case {k}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "case {k} left outputs behind");
    }
    let cfg = write_config(tmp.path(), "ok.json", POISSON);
    let o = frackpz(&["sweep", "--config", cfg.to_str().unwrap(), "--lambdas", "1:0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    // The right-hand side overflows the residual norm of the linear solve.
    let cfg = write_config(
        tmp.path(),
        "big.json",
        r#"{"domain": {"shape": "interval", "a": -1, "b": 1}, "h": 0.0625, "sigma": 0.5, "rhs": 1e300}"#,
    );
    let o = frackpz(&["solve_poisson", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shipped_configs_validate() {
    let configs = sample_configs();
    assert_eq!(configs.len(), 9);
    for path in configs {
        let config = ExperimentConfig::load(&path).unwrap();
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert_eq!(config.kind.name(), stem);
        config.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
