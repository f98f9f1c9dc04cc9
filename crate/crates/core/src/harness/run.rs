use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentKind, EnvKind, EnvSection, ExperimentConfig};
use super::report::{aggregate_runs, checkpoint_times, Report};
use super::HarnessError;
use crate::agents::{q_learning_agent, random_agent, smucrl_run, ucrl_mdp_agent, RunLog};
use crate::env::{ActionSet, Environment, GridAppleEnv, ObservationMode, SyntheticEnv};
use crate::pomdp::{best_policy_bruteforce, InitialState, PomdpModel};
use crate::rng::derive_seed;

/// Builds fresh environment instances for independent runs.
#[derive(Debug, Clone)]
pub enum EnvFactory {
    Synthetic(PomdpModel),
    Grid(ActionSet, ObservationMode),
}

impl EnvFactory {
    pub fn from_section(env: &EnvSection) -> Result<Self, HarnessError> {
        match env.kind {
            EnvKind::Synthetic => {
                let path = env.model_file.as_ref().ok_or_else(|| HarnessError::Invalid {
                    key: "env.model_file".into(),
                    msg: "required for the synthetic environment".into(),
                })?;
                let model = PomdpModel::read_json(path).map_err(|e| HarnessError::Invalid {
                    key: "env.model_file".into(),
                    msg: e.to_string(),
                })?;
                Ok(Self::Synthetic(model))
            }
            EnvKind::GridSingle | EnvKind::GridTriple => {
                let actions = ActionSet::from_count(env.actions).ok_or_else(|| HarnessError::Invalid {
                    key: "env.actions".into(),
                    msg: format!("{} is not 4 or 8", env.actions),
                })?;
                let mode = if env.kind == EnvKind::GridSingle {
                    ObservationMode::Single
                } else {
                    ObservationMode::Triple
                };
                Ok(Self::Grid(actions, mode))
            }
        }
    }

    pub fn make(&self) -> Box<dyn Environment> {
        match self {
            Self::Synthetic(model) => Box::new(SyntheticEnv::new(model.clone(), InitialState::Uniform)),
            Self::Grid(actions, mode) => Box::new(GridAppleEnv::new(*actions, *mode)),
        }
    }

    pub fn ground_truth(&self) -> Option<&PomdpModel> {
        match self {
            Self::Synthetic(model) => Some(model),
            Self::Grid(..) => None,
        }
    }
}

/// One subsampled step-log row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: usize,
    pub epoch: usize,
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
    pub cum_reward: f64,
    pub regret: Option<f64>,
}

/// Estimation errors of the model SM-UCRL planned from at an epoch start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochErrorRow {
    pub epoch: usize,
    pub start: usize,
    pub observation_l1: f64,
    pub observation_l2: f64,
    pub reward_l1: Option<f64>,
    pub transition_l1: Option<f64>,
}

/// What is kept of a run once its full log has been reduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub agent: AgentKind,
    pub seed: u64,
    pub horizon: usize,
    pub total_reward: f64,
    pub final_avg_reward: f64,
    /// Mean reward over the last 10% of the run.
    pub tail_avg_reward: f64,
    pub epochs: usize,
    pub checkpoint_avg_reward: Vec<f64>,
    pub checkpoint_regret: Option<Vec<f64>>,
    #[serde(skip)]
    pub rows: Vec<StepRow>,
    pub estimation: Vec<EpochErrorRow>,
}

pub fn run_id(agent: AgentKind, seed: u64) -> String {
    format!("{agent}-{seed}")
}

/// Reduces a log to its summary: subsampled rows every `stride` steps plus the
/// final step, and averages at `checkpoints`.
pub fn summarize(
    log: &RunLog,
    agent: AgentKind,
    seed: u64,
    eta_plus: Option<f64>,
    stride: usize,
    checkpoints: &[usize],
) -> RunSummary {
    let n = log.len();
    let regret_at = |t: usize| eta_plus.map(|e| t as f64 * e - log.cum_reward[t - 1]);
    let mut rows: Vec<StepRow> = (1..=n)
        .filter(|t| t % stride == 0 || *t == n)
        .map(|t| {
            let s = log.steps[t - 1];
            StepRow {
                t,
                epoch: s.epoch as usize,
                action: s.a as usize,
                observation: s.y as usize,
                reward: s.r,
                cum_reward: log.cum_reward[t - 1],
                regret: regret_at(t),
            }
        })
        .collect();
    rows.dedup_by_key(|r| r.t);
    let estimation = log
        .epochs
        .iter()
        .filter_map(|e| {
            e.errors.as_ref().map(|err| EpochErrorRow {
                epoch: e.epoch,
                start: e.start,
                observation_l1: err.observation_l1,
                observation_l2: err.observation_l2,
                reward_l1: err.reward_l1,
                transition_l1: err.transition_l1,
            })
        })
        .collect();
    RunSummary {
        run_id: run_id(agent, seed),
        agent,
        seed,
        horizon: n,
        total_reward: log.total_reward(),
        final_avg_reward: if n == 0 { 0.0 } else { log.total_reward() / n as f64 },
        tail_avg_reward: if n == 0 { 0.0 } else { log.tail_mean_reward(0.1) },
        epochs: log.epoch_count(),
        checkpoint_avg_reward: checkpoints.iter().map(|&t| log.cum_reward[t - 1] / t as f64).collect(),
        checkpoint_regret: eta_plus.map(|_| checkpoints.iter().map(|&t| regret_at(t).unwrap()).collect()),
        rows,
        estimation,
    }
}

/// Runs one agent on a fresh environment.
pub fn run_agent(
    config: &ExperimentConfig,
    factory: &EnvFactory,
    agent: AgentKind,
    seed: u64,
) -> RunLog {
    let mut env = factory.make();
    let horizon = config.experiment.horizon;
    let seed = if config.env.seed == 0 { seed } else { derive_seed(seed, config.env.seed) };
    match agent {
        AgentKind::SmUcrl => smucrl_run(&mut env, horizon, config.experiment.x_guess, &config.smucrl_config(), seed),
        AgentKind::Random => random_agent(&mut env, horizon, seed),
        AgentKind::QLearning => q_learning_agent(&mut env, horizon, &config.qlearning, seed).0,
        AgentKind::UcrlMdp => ucrl_mdp_agent(&mut env, horizon, &config.ucrl_mdp, seed),
    }
}

/// The regret reference: the configured value, else grid search on the true
/// model when there is one.
pub fn reference_eta(config: &ExperimentConfig, factory: &EnvFactory) -> Result<Option<f64>, HarnessError> {
    if let Some(e) = config.experiment.eta_plus {
        return Ok(Some(e));
    }
    match factory.ground_truth() {
        Some(model) => {
            let (_, eta) = best_policy_bruteforce(model, config.experiment.eta_grid_step)
                .map_err(|e| HarnessError::Runtime(format!("reference policy search failed: {e}")))?;
            Ok(Some(eta))
        }
        None => Ok(None),
    }
}

/// Runs every (agent, seed) cell, up to `experiment.workers` at a time, and
/// aggregates the results.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    config.validate()?;
    let factory = EnvFactory::from_section(&config.env)?;
    let eta_plus = reference_eta(config, &factory)?;
    let checkpoints = checkpoint_times(config.experiment.horizon, config.experiment.checkpoints);
    let cells: Vec<(AgentKind, u64)> = config
        .experiment
        .agents
        .iter()
        .flat_map(|&a| config.experiment.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.experiment.workers)
        .build()
        .map_err(|e| HarnessError::Runtime(format!("cannot start worker pool: {e}")))?;
    let mut runs: Vec<RunSummary> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(agent, seed)| {
                let log = run_agent(config, &factory, agent, seed);
                let summary = summarize(&log, agent, seed, eta_plus, config.experiment.stride, &checkpoints);
                info!("{} finished: average reward {:.4}", summary.run_id, summary.final_avg_reward);
                summary
            })
            .collect()
    });
    runs.sort_by(|a, b| (a.agent.name(), a.seed).cmp(&(b.agent.name(), b.seed)));
    let aggregates = aggregate_runs(&runs);
    Ok(Report {
        eta_plus,
        horizon: config.experiment.horizon,
        checkpoints,
        runs,
        aggregates,
    })
}
