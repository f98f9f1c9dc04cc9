mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smucrl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smucrl"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, horizon: usize) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        format!(
            r#"
[experiment]
agents = ["smucrl", "random"]
horizon = {horizon}
seeds = [0, 1]
x_guess = 2
output = "out/steps.csv"

[env]
kind = "synthetic"
model_file = "{}"
"#,
            common::fixture_path().display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_writes_all_three_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 3000);
    let out = smucrl(&["run", "--config", cfg.to_str().unwrap(), "--workers", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["out/steps.csv", "out/steps.summary.csv", "out/steps.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("smucrl") && stdout.contains("random"), "{stdout}");

    // same config, same bytes
    let again = smucrl(&["run", "--config", cfg.to_str().unwrap(), "--out", "again.csv"], dir.path());
    assert!(again.status.success());
    assert_eq!(
        fs::read(dir.path().join("out/steps.csv")).unwrap(),
        fs::read(dir.path().join("again.csv")).unwrap()
    );

    let report = smucrl(&["report", "out/steps.summary.csv", "--out", "agg.csv"], dir.path());
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    assert!(fs::read_to_string(dir.path().join("agg.csv")).unwrap().starts_with("agent,checkpoint_t,"));
}

#[test]
fn seed_and_stride_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 2000);
    let out = smucrl(
        &["run", "--config", cfg.to_str().unwrap(), "--out", "one.csv", "--seed", "5", "--stride", "500"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("one.csv")).unwrap();
    // 2 agents × 1 seed × 4 rows
    assert_eq!(text.lines().count(), 1 + 8);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(2) == Some("5")));
}

#[test]
fn usage_and_config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 100);
    assert_eq!(smucrl(&["run", "--config", cfg.to_str().unwrap(), "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(smucrl(&["frobnicate"], dir.path()).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, fs::read_to_string(&cfg).unwrap().replace("x_guess = 2", "x_guess = 2\nxguess = 2")).unwrap();
    let out = smucrl(&["run", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xguess"));

    let out = smucrl(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_override_reaches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 100);
    let out = Command::new(env!("CARGO_BIN_EXE_smucrl"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", "o.csv"])
        .current_dir(dir.path())
        .env("SMUCRL__EXPERIMENT__HORIZON", "700")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert!(text.lines().last().unwrap().contains(",700,"));
}

#[test]
fn simulate_estimate_plan_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 100);
    let cfg = cfg.to_str().unwrap();
    let out = smucrl(&["simulate", "--config", cfg, "--out", "traj.json", "--horizon", "30000", "--seed", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = smucrl(&["estimate", "traj.json", "--states", "2", "--out", "est.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!String::from_utf8_lossy(&out.stderr).contains("warning"));

    let out = smucrl(&["plan", "est.json", "--optimistic", "--out", "plan.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert!(plan["eta"].as_f64().unwrap() > 0.0);

    let fixture = common::fixture_path();
    let out = smucrl(&["plan", fixture.to_str().unwrap()], dir.path());
    assert!(out.status.success());
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((plan["eta"].as_f64().unwrap() - 3.0469).abs() < 1e-3, "{plan}");
}

#[test]
fn estimating_from_three_steps_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 100);
    let out = smucrl(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "tiny.json", "--horizon", "3"], dir.path());
    assert!(out.status.success());
    let out = smucrl(&["estimate", "tiny.json", "--states", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.matches("warning: action").count(), 2, "{stderr}");
    let model: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(model.get("bounds").is_some());
}

#[test]
fn bounds_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = smucrl(&["bounds"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["regret_bound"].as_f64().unwrap() > 0.0);

    let cfg = common::config_path("bounds.toml");
    let out = smucrl(&["bounds", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["mixing"]["theta"].as_f64().unwrap() - 0.2066).abs() < 1e-3);
    assert!(v["diameter"]["diameter"].as_f64().unwrap() >= 1.0);
}
