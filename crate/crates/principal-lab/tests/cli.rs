use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_principal-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL: &str = r#"{
  "version": 1,
  "name": "small",
  "game": {"fixture": "two-action-tie", "benchmark": [0.25, 0.5]},
  "mechanism": {"kind": "general"},
  "forecaster": {"kind": "calibrated", "grid": 8, "events": "thm4"},
  "agent": "swap",
  "states": {"kind": "iid", "probs": [0.5, 0.5]},
  "horizon": 64,
  "repetitions": 2,
  "seed": 5
}"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_config_is_a_config_error() {
    let o = bin(&["run", "--config", "/nonexistent/cfg.json", "--quiet"]);
    assert_eq!(code(&o), 2);
    let o = bin(&["run", "--quiet"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&bin(&["frobnicate"])), 2);
    assert_eq!(code(&bin(&["run", "--seed", "abc"])), 2);
}

#[test]
fn bad_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"horizon\"", "\"horizn\""));
    let o = bin(&["run", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizn"));
}

#[test]
fn zero_reps_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = bin(&["run", "--config", &cfg, "--reps", "0", "--quiet"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn run_writes_outputs_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = bin(&[
        "run",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
        "--reps",
        "3",
        "--quiet",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["repetitions"], 3);
    let transcript = fs::read_to_string(out.join("transcript.csv")).unwrap();
    assert!(transcript.starts_with("#schema:transcript-v1\n"));
    assert_eq!(transcript.lines().count(), 2 + 64);
}

#[test]
fn seed_changes_the_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        let o = bin(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--quiet",
        ]);
        assert_eq!(code(&o), 0);
        fs::read(out.join("transcript.csv")).unwrap()
    };
    assert_eq!(read("1"), read("1"));
    assert_ne!(read("1"), read("2"));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = bin(&[
        "run",
        "--config",
        &cfg,
        "--out",
        blocker.join("sub").to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn lower_bound_needs_the_adversary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = bin(&["lower-bound", "--config", &cfg, "--quiet"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn impossibility_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("imp");
    let o = bin(&["impossibility", "--out", out.to_str().unwrap(), "--quiet"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&fs::read_to_string(out.join("impossibility.json")).unwrap()).unwrap();
    assert_eq!(r["certified"], true);
}

#[test]
fn bundled_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            principal_lab::harness::ExperimentConfig::load(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 10);
}
