//! The `smucrl` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Deserialize;

use super::{
    aggregate_summary_rows, emit_csv, json_path, read_summary_csv, run_experiment, write_aggregate_csv,
    write_report_json, EnvFactory, EnvSection, ExperimentConfig, HarnessError,
};
use crate::diagnostics::{bounds_report, BoundsRequest};
use crate::env::rollout;
use crate::planning::{alternating_maximization, optimistic_policy, AdmissibleSet, PlanResultJson, PlannerConfig};
use crate::pomdp::{MemorylessPolicy, PolicyJson, PomdpModel, TrajectoryFile};
use crate::spectral::{estimate, Alphabet, EstimatedModel, EstimatorConfig};

#[derive(Debug, Parser)]
#[command(name = "smucrl", version, about = "Spectral POMDP learning and optimistic exploration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Roll out a fixed memoryless policy and write the trajectory as JSON.
    Simulate {
        /// Config with an [env] section.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        /// Policy JSON (`pi`, `eps_floor`) or a plan result; uniform when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate a model from a trajectory file.
    Estimate {
        trajectory: PathBuf,
        /// Number of hidden states.
        #[arg(long)]
        states: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Config whose [estimator] section overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Find a memoryless policy for a model file.
    Plan {
        model: PathBuf,
        /// Plan on the optimistic model of an estimated model file.
        #[arg(long)]
        optimistic: bool,
        /// Config whose [planner] section overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment and write step, summary and JSON reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Step-log CSV; defaults to `experiment.output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Print the mixing, concentration, diameter and regret calculators as JSON.
    Bounds {
        /// Config with an optional [bounds] section and optional `model_file`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregate summary CSVs by agent and checkpoint.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// The sections a tool subcommand may read; any other key is an error, but
/// experiment sections are accepted so one file can serve every command.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolConfig {
    env: Option<EnvSection>,
    #[serde(default)]
    estimator: EstimatorConfig,
    #[serde(default)]
    planner: PlannerConfig,
    bounds: Option<BoundsRequest>,
    #[serde(rename = "experiment")]
    _experiment: Option<toml::Value>,
    #[serde(rename = "smucrl")]
    _smucrl: Option<toml::Value>,
    #[serde(rename = "qlearning")]
    _qlearning: Option<toml::Value>,
    #[serde(rename = "ucrl_mdp")]
    _ucrl_mdp: Option<toml::Value>,
}

fn read_tool_config(path: Option<&Path>) -> Result<ToolConfig, HarnessError> {
    let Some(path) = path else {
        return Ok(ToolConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
    super::config::apply_overrides(&mut table, std::env::vars())?;
    let mut config: ToolConfig = table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let Some(f) = config.env.as_mut().and_then(|e| e.model_file.as_mut()) {
        resolve(f);
    }
    if let Some(f) = config.bounds.as_mut().and_then(|b| b.model_file.as_mut()) {
        resolve(f);
    }
    Ok(config)
}

fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_policy(path: &Path) -> Result<MemorylessPolicy, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    let raw = serde_json::from_str::<PolicyJson>(&text)
        .or_else(|_| serde_json::from_str::<PlanResultJson>(&text).map(|p| p.policy))
        .map_err(|e| HarnessError::Config(format!("{} is not a policy file: {e}", path.display())))?;
    MemorylessPolicy::from_json_value(&raw).map_err(|e| HarnessError::Config(e.to_string()))
}

fn simulate(config: &Path, out: &Path, horizon: usize, policy: Option<&Path>, seed: u64) -> Result<(), HarnessError> {
    let tool = read_tool_config(Some(config))?;
    let section = tool.env.ok_or_else(|| HarnessError::Invalid {
        key: "env".into(),
        msg: "simulate needs an [env] section".into(),
    })?;
    let factory = EnvFactory::from_section(&section)?;
    let mut env = factory.make();
    let policy = match policy {
        Some(p) => read_policy(p)?,
        None => MemorylessPolicy::uniform(env.num_actions(), env.num_observations()),
    };
    if policy.num_actions() != env.num_actions() || policy.num_observations() != env.num_observations() {
        return Err(HarnessError::Config(format!(
            "policy is {}x{} but the environment has A={} Y={}",
            policy.num_actions(),
            policy.num_observations(),
            env.num_actions(),
            env.num_observations()
        )));
    }
    let trajectory = rollout(&mut env, &policy, horizon, seed).map_err(runtime)?;
    let file = TrajectoryFile {
        actions: env.num_actions(),
        observations: env.num_observations(),
        reward_values: env.reward_values().to_vec(),
        r_max: env.r_max(),
        policy: Some(policy.to_json_value()),
        trajectory,
    };
    file.write(out).map_err(runtime)
}

fn estimate_cmd(
    trajectory: &Path,
    states: usize,
    delta: f64,
    config: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let mut tool = read_tool_config(config)?;
    if let Some(s) = seed {
        tool.estimator.seed = s;
    }
    if states == 0 {
        return Err(HarnessError::Config("--states must be at least 1".into()));
    }
    let file = TrajectoryFile::read(trajectory).map_err(|e| HarnessError::Config(e.to_string()))?;
    let policy = match &file.policy {
        Some(p) => MemorylessPolicy::from_json_value(p).map_err(|e| HarnessError::Config(e.to_string()))?,
        None => MemorylessPolicy::uniform(file.actions, file.observations),
    };
    let alphabet = Alphabet {
        actions: file.actions,
        observations: file.observations,
        reward_values: file.reward_values.clone(),
        r_max: file.r_max,
    };
    let est = estimate(&file.trajectory, &policy, states, delta, &alphabet, &tool.estimator).map_err(runtime)?;
    for (l, f) in est.failures.iter().enumerate() {
        if let Some(msg) = f {
            eprintln!("warning: action {l}: {msg}; using a uniform placeholder with infinite widths");
        }
    }
    write_output(out, &est.to_json_string())
}

fn plan_cmd(
    model: &Path,
    optimistic: bool,
    config: Option<&Path>,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(), HarnessError> {
    let mut tool = read_tool_config(config)?;
    if let Some(s) = seed {
        tool.planner.seed = s;
    }
    let result = if optimistic {
        let est = EstimatedModel::read_json(model).map_err(|e| HarnessError::Config(e.to_string()))?;
        optimistic_policy(&AdmissibleSet::new(est), &tool.planner).map_err(runtime)?
    } else {
        let model = match PomdpModel::read_json(model) {
            Ok(m) => m,
            Err(_) => EstimatedModel::read_json(model).map_err(|e| HarnessError::Config(e.to_string()))?.model,
        };
        alternating_maximization(&model, &tool.planner).map_err(runtime)?
    };
    let text = serde_json::to_string_pretty(&result.to_json_value()).map_err(runtime)?;
    write_output(out, &text)
}

fn run_cmd(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    stride: Option<usize>,
) -> Result<(), HarnessError> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        config.experiment.seeds = vec![s];
    }
    if let Some(w) = workers {
        config.experiment.workers = w;
    }
    if let Some(s) = stride {
        config.experiment.stride = s;
    }
    if out.is_some() {
        config.experiment.output = out;
    }
    config.validate()?;
    let out = config.experiment.output.clone().ok_or_else(|| HarnessError::Invalid {
        key: "experiment.output".into(),
        msg: "no output path (set it or pass --out)".into(),
    })?;
    let report = run_experiment(&config)?;
    let summary = emit_csv(&report, &out)?;
    let json = json_path(&out);
    write_report_json(&report, &json)?;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    for a in &report.aggregates {
        let regret = a.regret_mean.as_ref().and_then(|r| r.last()).map_or("-".to_string(), |r| format!("{r:.1}"));
        writeln!(
            w,
            "{:<10} seeds={} avg_reward={:.4} tail_avg_reward={:.4} regret={regret}",
            a.agent.name(),
            a.seeds,
            a.final_avg_reward_mean,
            a.tail_avg_reward_mean
        )
        .map_err(runtime)?;
    }
    writeln!(w, "wrote {}, {} and {}", out.display(), summary.display(), json.display()).map_err(runtime)?;
    Ok(())
}

fn bounds_cmd(config: Option<&Path>, out: Option<&Path>, seed: Option<u64>) -> Result<(), HarnessError> {
    let tool = read_tool_config(config)?;
    let mut request = tool.bounds.unwrap_or_default();
    if let Some(s) = seed {
        request.seed = s;
    }
    let model = match &request.model_file {
        Some(p) => Some(PomdpModel::read_json(p).map_err(|e| HarnessError::Invalid {
            key: "bounds.model_file".into(),
            msg: e.to_string(),
        })?),
        None => None,
    };
    let report = bounds_report(&request, model.as_ref()).map_err(|e| HarnessError::Config(e.to_string()))?;
    write_output(out, &serde_json::to_string_pretty(&report).map_err(runtime)?)
}

fn report_cmd(summaries: &[PathBuf], out: Option<&Path>) -> Result<(), HarnessError> {
    let mut rows = Vec::new();
    for p in summaries {
        rows.extend(read_summary_csv(p)?);
    }
    let agg = aggregate_summary_rows(&rows);
    match out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
            write_aggregate_csv(&agg, f)
        }
        None => write_aggregate_csv(&agg, std::io::stdout().lock()),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            horizon,
            policy,
            seed,
        } => simulate(&config, &out, horizon, policy.as_deref(), seed),
        Command::Estimate {
            trajectory,
            states,
            delta,
            config,
            out,
            seed,
        } => estimate_cmd(&trajectory, states, delta, config.as_deref(), out.as_deref(), seed),
        Command::Plan {
            model,
            optimistic,
            config,
            out,
            seed,
        } => plan_cmd(&model, optimistic, config.as_deref(), out.as_deref(), seed),
        Command::Run {
            config,
            out,
            seed,
            workers,
            stride,
        } => run_cmd(&config, out, seed, workers, stride),
        Command::Bounds { config, out, seed } => bounds_cmd(config.as_deref(), out.as_deref(), seed),
        Command::Report { summaries, out } => report_cmd(&summaries, out.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
