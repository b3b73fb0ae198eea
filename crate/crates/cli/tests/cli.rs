//! End-to-end checks of the `specsense` binary: exit codes, artifact
//! emission, seed precedence, and preset expansion.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specsense"))
}

fn golden_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/golden.toml")
}

#[test]
fn run_writes_requested_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(golden_config())
        .arg("--out")
        .arg(dir.path())
        .args(["--emit", "csv,trace", "--threads", "1"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("results.csv").exists());
    assert!(dir.path().join("trace.csv").exists());
    assert!(!dir.path().join("results.json").exists());
}

#[test]
fn default_emit_is_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(golden_config())
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("results.csv").exists());
    assert!(dir.path().join("results.json").exists());
    assert!(!dir.path().join("trace.csv").exists());
}

#[test]
fn invalid_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "n_pus = 300\n").unwrap();
    let output = binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("n_pus"), "diagnostic missing: {stderr}");
}

#[test]
fn missing_config_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["run", "--config", "/nonexistent/config.toml", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn seed_precedence_flag_env_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_env = dir.path().join("env");
    let out_flag = dir.path().join("flag");
    let out_plain = dir.path().join("plain");

    let run_with = |out: &std::path::Path, env_seed: Option<&str>, flag_seed: Option<&str>| {
        let mut cmd = binary();
        cmd.args(["run", "--config"])
            .arg(golden_config())
            .arg("--out")
            .arg(out)
            .args(["--emit", "csv"]);
        if let Some(seed) = env_seed {
            cmd.env("SPECSENSE_SEED", seed);
        }
        if let Some(seed) = flag_seed {
            cmd.args(["--seed", seed]);
        }
        assert!(cmd.status().unwrap().success());
        fs::read_to_string(out.join("results.csv")).unwrap()
    };

    let plain = run_with(&out_plain, None, None);
    let via_env = run_with(&out_env, Some("777"), None);
    let via_flag = run_with(&out_flag, Some("777"), Some("42"));

    assert!(plain.lines().nth(1).unwrap().ends_with(",42"));
    assert!(via_env.lines().nth(1).unwrap().ends_with(",777"));
    // The flag beats the environment; seed 42 matches the config default.
    assert_eq!(via_flag, plain);
    assert_ne!(via_env, plain);
}

#[test]
fn env_seed_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let output = binary()
        .args(["run", "--config"])
        .arg(golden_config())
        .arg("--out")
        .arg(dir.path())
        .env("SPECSENSE_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fig4_preset_expands_to_160_cells() {
    // Keep the preset run cheap: 2 trials, everything else pinned by fig4.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tiny.toml");
    fs::write(&config, "trials = 2\n").unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .args(["--preset", "fig4", "--emit", "csv,trace"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 161, "header + 160 cells");
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    // Every cell traces steps 0..=K with K from 1 to 40, twice per (p, snr).
    let expected_rows: usize = (1..=40).map(|k| k + 1).sum::<usize>() * 4 + 1;
    assert_eq!(trace.lines().count(), expected_rows);
}
