//! Simulated environments: a wrapper around a known POMDP and the apple
//! gridworld.

mod grid;
mod synthetic;

pub use grid::{ActionSet, Apple, AppleColor, CellClass, GridAppleEnv, ObservationMode, GRID_SIZE};
pub use synthetic::SyntheticEnv;

use thiserror::Error;

use crate::pomdp::{policy_cdfs, MemorylessPolicy, PomdpModel, Step, Trajectory};
use crate::rng::{self, categorical_cdf, derive_seed};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("action {action} is not one of the {actions} available actions")]
    InvalidAction { action: usize, actions: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Observation emitted after the transition.
    pub observation: usize,
    pub reward_index: usize,
    pub reward: f64,
}

/// A discrete environment driven one action at a time. After `reset` the
/// current observation is available; `step` returns the reward of the action
/// and the next observation.
pub trait Environment: Send {
    fn num_actions(&self) -> usize;
    fn num_observations(&self) -> usize;
    fn reward_values(&self) -> &[f64];
    fn r_max(&self) -> f64;

    fn reset(&mut self, seed: u64) -> usize;
    fn observation(&self) -> usize;
    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError>;

    /// Hidden state index, for environments that have one.
    fn hidden_state(&self) -> Option<usize> {
        None
    }

    /// The true model, when the environment is a finite POMDP.
    fn ground_truth(&self) -> Option<&PomdpModel> {
        None
    }

    fn num_rewards(&self) -> usize {
        self.reward_values().len()
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn num_observations(&self) -> usize {
        (**self).num_observations()
    }
    fn reward_values(&self) -> &[f64] {
        (**self).reward_values()
    }
    fn r_max(&self) -> f64 {
        (**self).r_max()
    }
    fn reset(&mut self, seed: u64) -> usize {
        (**self).reset(seed)
    }
    fn observation(&self) -> usize {
        (**self).observation()
    }
    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        (**self).step(action)
    }
    fn hidden_state(&self) -> Option<usize> {
        (**self).hidden_state()
    }
    fn ground_truth(&self) -> Option<&PomdpModel> {
        (**self).ground_truth()
    }
}

/// Plays a fixed memoryless policy for `horizon` steps from `reset(seed)`.
/// Hidden states are recorded when the environment exposes them.
pub fn rollout<E: Environment + ?Sized>(
    env: &mut E,
    policy: &MemorylessPolicy,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, EnvError> {
    let mut rng = rng::seeded(derive_seed(seed, 0xA9E));
    let mut obs = env.reset(derive_seed(seed, 0xE17));
    let cdfs = policy_cdfs(policy);
    let mut steps = Vec::with_capacity(horizon);
    let mut hidden = env.hidden_state().map(|_| Vec::with_capacity(horizon));
    for _ in 0..horizon {
        if let (Some(h), Some(x)) = (hidden.as_mut(), env.hidden_state()) {
            h.push(x);
        }
        let a = categorical_cdf(&mut rng, &cdfs[obs]);
        let out = env.step(a)?;
        steps.push(Step {
            y: obs,
            a,
            m: out.reward_index,
            r: out.reward,
        });
        obs = out.observation;
    }
    Ok(Trajectory {
        steps,
        hidden_states: hidden,
    })
}
