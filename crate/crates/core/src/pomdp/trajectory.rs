use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{chain, MemorylessPolicy, PomdpError, PomdpModel};
use crate::rng::{self, categorical_cdf, cumulative};

/// One interaction step: observation seen, action taken, reward symbol and
/// value received.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub y: usize,
    pub a: usize,
    pub m: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    /// Hidden states, recorded by simulators for diagnostics only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_states: Option<Vec<usize>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks every index against the alphabet sizes.
    pub fn validate(&self, actions: usize, observations: usize, rewards: usize) -> Result<(), PomdpError> {
        for (t, s) in self.steps.iter().enumerate() {
            if s.y >= observations || s.a >= actions || s.m >= rewards {
                return Err(PomdpError::DimensionMismatch(format!(
                    "step {t} has (y={}, a={}, m={}) outside Y={observations}, A={actions}, R={rewards}",
                    s.y, s.a, s.m
                )));
            }
        }
        Ok(())
    }
}

/// Where a simulated trajectory starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Uniform,
    Stationary,
    Fixed(usize),
}

/// Cumulative tables for fast repeated sampling from a model.
#[derive(Debug, Clone)]
pub struct ModelSampler {
    states: usize,
    reward_values: Vec<f64>,
    obs_cdf: Vec<Vec<f64>>,
    trans_cdf: Vec<Vec<Vec<f64>>>,
    reward_cdf: Vec<Vec<Vec<f64>>>,
}

impl ModelSampler {
    pub fn new(model: &PomdpModel) -> Self {
        let x = model.num_states();
        let obs_cdf = (0..x)
            .map(|i| cumulative(model.observation().column(i).iter().copied()))
            .collect();
        let trans_cdf = model
            .transitions()
            .iter()
            .map(|t| (0..x).map(|i| cumulative(t.row(i).iter().copied())).collect())
            .collect();
        let reward_cdf = model
            .reward_distributions()
            .iter()
            .map(|fr| (0..x).map(|i| cumulative(fr.row(i).iter().copied())).collect())
            .collect();
        Self {
            states: x,
            reward_values: model.reward_values().to_vec(),
            obs_cdf,
            trans_cdf,
            reward_cdf,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R, state: usize) -> usize {
        categorical_cdf(rng, &self.obs_cdf[state])
    }

    /// Draws `(reward index, reward value, next state)` for `(state, action)`.
    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R, state: usize, action: usize) -> (usize, f64, usize) {
        let m = categorical_cdf(rng, &self.reward_cdf[action][state]);
        let next = categorical_cdf(rng, &self.trans_cdf[action][state]);
        (m, self.reward_values[m], next)
    }
}

/// Cumulative action tables per observation.
pub(crate) fn policy_cdfs(policy: &MemorylessPolicy) -> Vec<Vec<f64>> {
    policy
        .matrix()
        .column_iter()
        .map(|c| cumulative(c.iter().copied()))
        .collect()
}

pub(crate) fn initial_state<R: Rng + ?Sized>(
    rng: &mut R,
    model: &PomdpModel,
    policy: &MemorylessPolicy,
    init: InitialState,
) -> Result<usize, PomdpError> {
    match init {
        InitialState::Uniform => Ok(rng.random_range(0..model.num_states())),
        InitialState::Fixed(x) if x < model.num_states() => Ok(x),
        InitialState::Fixed(x) => Err(PomdpError::DimensionMismatch(format!("initial state {x} out of range"))),
        InitialState::Stationary => {
            let c = chain::induced_transition(model, policy)?;
            let w = chain::stationary_distribution(&c)?;
            Ok(rng::categorical(rng, w.as_slice()))
        }
    }
}

/// Simulates `n` steps: for each step x → y → a → (r, x').
pub fn sample_trajectory(
    model: &PomdpModel,
    policy: &MemorylessPolicy,
    n: usize,
    seed: u64,
    init: InitialState,
) -> Result<Trajectory, PomdpError> {
    if n == 0 {
        return Err(PomdpError::InvalidArgument("trajectory length must be at least 1".into()));
    }
    if policy.num_actions() != model.num_actions() || policy.num_observations() != model.num_observations() {
        return Err(PomdpError::DimensionMismatch("policy does not match model".into()));
    }
    let mut rng = rng::seeded(seed);
    let sampler = ModelSampler::new(model);
    let pcdf = policy_cdfs(policy);
    let mut x = initial_state(&mut rng, model, policy, init)?;
    let mut steps = Vec::with_capacity(n);
    let mut hidden = Vec::with_capacity(n);
    for _ in 0..n {
        hidden.push(x);
        let y = sampler.observe(&mut rng, x);
        let a = categorical_cdf(&mut rng, &pcdf[y]);
        let (m, r, next) = sampler.act(&mut rng, x, a);
        steps.push(Step { y, a, m, r });
        x = next;
    }
    Ok(Trajectory {
        steps,
        hidden_states: Some(hidden),
    })
}

/// Trajectory plus the alphabet and behaviour policy needed to estimate from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    #[serde(rename = "A")]
    pub actions: usize,
    #[serde(rename = "Y")]
    pub observations: usize,
    pub reward_values: Vec<f64>,
    pub r_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<super::PolicyJson>,
    #[serde(flatten)]
    pub trajectory: Trajectory,
}

impl TrajectoryFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, PomdpError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PomdpError::Io(path.display().to_string(), e))?;
        let file: Self = serde_json::from_str(&text)?;
        file.trajectory
            .validate(file.actions, file.observations, file.reward_values.len())?;
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), PomdpError> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        fs::write(path, text + "\n").map_err(|e| PomdpError::Io(path.display().to_string(), e))
    }
}
