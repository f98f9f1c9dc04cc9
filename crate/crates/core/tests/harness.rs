mod common;

use std::fs;

use spectral_pomdp::harness::{
    emit_csv, read_summary_csv, run_experiment, AgentKind, ExperimentConfig, HarnessError, STEP_HEADER, SUMMARY_HEADER,
};

fn config(extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"
[experiment]
agents = ["smucrl", "random", "qlearning", "ucrl-mdp"]
horizon = 6000
seeds = [3, 1, 2]
x_guess = 2
stride = 250
checkpoints = 8
{extra}

[env]
kind = "synthetic"
model_file = "{}"

[estimator.constants]
C_O = 0.1
C_R = 0.1
C_T = 0.1
"#,
        common::fixture_path().display()
    );
    ExperimentConfig::from_toml_str(&text, None, std::iter::empty()).unwrap()
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (i, workers) in [1, 4].into_iter().enumerate() {
        let mut cfg = config("");
        cfg.experiment.workers = workers;
        let report = run_experiment(&cfg).unwrap();
        let out = dir.path().join(format!("run{i}.csv"));
        let summary = emit_csv(&report, &out).unwrap();
        paths.push((out, summary));
    }
    assert_eq!(fs::read(&paths[0].0).unwrap(), fs::read(&paths[1].0).unwrap());
    assert_eq!(fs::read(&paths[0].1).unwrap(), fs::read(&paths[1].1).unwrap());

    let text = fs::read_to_string(&paths[0].0).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(STEP_HEADER));
    assert!(!text.contains('\r'));
    // 4 agents × 3 seeds × (6000 / 250) rows
    assert_eq!(lines.count(), 4 * 3 * 24);
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("qlearning-1,qlearning,1,250,"), "{first}");
}

#[test]
fn summary_csv_round_trips_and_matches_the_report() {
    let report = run_experiment(&config("")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = emit_csv(&report, &dir.path().join("s.csv")).unwrap();
    assert_eq!(fs::read_to_string(&summary).unwrap().lines().next(), Some(SUMMARY_HEADER));
    let rows = read_summary_csv(&summary).unwrap();
    assert_eq!(rows.len(), 4 * 3 * report.checkpoints.len());
    for run in &report.runs {
        let mine: Vec<_> = rows.iter().filter(|r| r.agent == run.agent.name() && r.seed == run.seed).collect();
        for (row, avg) in mine.iter().zip(&run.checkpoint_avg_reward) {
            assert_eq!(row.avg_reward, *avg);
        }
    }
}

#[test]
fn final_aggregate_regret_is_the_mean_regret() {
    let report = run_experiment(&config("")).unwrap();
    let eta = report.eta_plus.unwrap();
    let n = report.horizon as f64;
    for agent in [AgentKind::SmUcrl, AgentKind::Random, AgentKind::QLearning, AgentKind::UcrlMdp] {
        let runs: Vec<_> = report.runs_of(agent).collect();
        let expected = runs.iter().map(|r| n * eta - r.total_reward).sum::<f64>() / runs.len() as f64;
        let got = *report.aggregate(agent).unwrap().regret_mean.as_ref().unwrap().last().unwrap();
        assert!((got - expected).abs() <= 1e-9, "{agent}: {got} vs {expected}");
    }
}

#[test]
fn configured_eta_is_used_verbatim() {
    let report = run_experiment(&config("eta_plus = 3.5")).unwrap();
    assert_eq!(report.eta_plus, Some(3.5));
}

#[test]
fn gridworld_runs_without_regret() {
    let text = r#"
[experiment]
agents = ["random", "qlearning"]
horizon = 3000
seeds = [0, 1]
x_guess = 3

[env]
kind = "grid-triple"
actions = 8
"#;
    let cfg = ExperimentConfig::from_toml_str(text, None, std::iter::empty()).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert!(report.eta_plus.is_none());
    assert!(report.runs.iter().all(|r| r.checkpoint_regret.is_none()));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    emit_csv(&report, &out).unwrap();
    let second = fs::read_to_string(&out).unwrap().lines().nth(1).unwrap().to_string();
    assert!(second.ends_with(','), "regret column should be empty: {second}");
}

#[test]
fn overrides_and_errors() {
    let path = common::config_path("synthetic.toml");
    let text = fs::read_to_string(&path).unwrap();
    let vars = vec![
        ("SMUCRL__EXPERIMENT__HORIZON".to_string(), "1234".to_string()),
        ("SMUCRL__SMUCRL__BOOTSTRAP".to_string(), "7".to_string()),
        ("UNRELATED".to_string(), "x".to_string()),
    ];
    let cfg = ExperimentConfig::from_toml_str(&text, path.parent(), vars).unwrap();
    assert_eq!(cfg.experiment.horizon, 1234);
    assert_eq!(cfg.smucrl.bootstrap, 7);
    assert!(cfg.env.model_file.as_ref().unwrap().exists());

    let bad = text.replace("stride = 100", "stride = 100\nstrdie = 3");
    let err = ExperimentConfig::from_toml_str(&bad, path.parent(), std::iter::empty()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("strdie"), "{err}");

    let zero = text.replace("horizon = 200000", "horizon = 0");
    let err = ExperimentConfig::from_toml_str(&zero, path.parent(), std::iter::empty()).unwrap_err();
    assert!(matches!(err, HarnessError::Invalid { .. }), "{err}");

    let vars = vec![("SMUCRL__EXPERIMENT__HORIZON".to_string(), "lots".to_string())];
    assert!(ExperimentConfig::from_toml_str(&text, path.parent(), vars).is_err());
}

#[test]
fn example_configs_parse() {
    for name in ["synthetic.toml", "grid_single.toml"] {
        let path = common::config_path(name);
        let text = fs::read_to_string(&path).unwrap();
        ExperimentConfig::from_toml_str(&text, path.parent(), std::iter::empty()).unwrap();
    }
}
