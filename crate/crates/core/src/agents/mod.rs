//! Learning agents and their run logs.

mod baselines;
mod smucrl;

pub use baselines::{q_learning_agent, random_agent, ucrl_mdp_agent, QLearningConfig, UcrlMdpConfig};
pub use smucrl::{epoch_should_end, smucrl_run, EpochInfo, SmUcrlConfig, SmUcrlState, StoredBatch};

use serde::{Deserialize, Serialize};

/// One executed step. `t` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStep {
    pub t: u32,
    pub y: u32,
    pub a: u32,
    pub m: u32,
    pub r: f64,
    pub epoch: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub agent: String,
    pub steps: Vec<LogStep>,
    /// `cum_reward[t - 1] = Σ_{s ≤ t} r_s`.
    pub cum_reward: Vec<f64>,
    pub regret: Option<Vec<f64>>,
    /// Epoch bookkeeping; empty for agents without epochs.
    pub epochs: Vec<EpochInfo>,
}

impl RunLog {
    pub fn new(agent: &str, horizon: usize) -> Self {
        Self {
            agent: agent.to_string(),
            steps: Vec::with_capacity(horizon),
            cum_reward: Vec::with_capacity(horizon),
            regret: None,
            epochs: Vec::new(),
        }
    }

    pub fn push(&mut self, y: usize, a: usize, m: usize, r: f64, epoch: usize) {
        let t = self.steps.len() as u32 + 1;
        self.steps.push(LogStep {
            t,
            y: y as u32,
            a: a as u32,
            m: m as u32,
            r,
            epoch: epoch as u32,
        });
        let prev = self.cum_reward.last().copied().unwrap_or(0.0);
        self.cum_reward.push(prev + r);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_reward(&self) -> f64 {
        self.cum_reward.last().copied().unwrap_or(0.0)
    }

    /// Mean reward over steps `from..to` (0-based, half open).
    pub fn mean_reward(&self, from: usize, to: usize) -> f64 {
        assert!(from < to && to <= self.len());
        let before = if from == 0 { 0.0 } else { self.cum_reward[from - 1] };
        (self.cum_reward[to - 1] - before) / (to - from) as f64
    }

    /// Mean reward over the final `fraction` of the run.
    pub fn tail_mean_reward(&self, fraction: f64) -> f64 {
        let n = self.len();
        let k = ((n as f64 * fraction).ceil() as usize).clamp(1, n);
        self.mean_reward(n - k, n)
    }

    /// Fills `regret` against the given reference value.
    pub fn attach_regret(&mut self, eta_plus: f64) {
        self.regret = Some(compute_regret(self, eta_plus));
    }

    /// Number of distinct epochs visited.
    pub fn epoch_count(&self) -> usize {
        self.steps.last().map_or(0, |s| s.epoch as usize)
    }
}

/// `Reg_t = t·η⁺ − Σ_{s ≤ t} r_s` for every `t`.
pub fn compute_regret(log: &RunLog, eta_plus: f64) -> Vec<f64> {
    log.cum_reward
        .iter()
        .enumerate()
        .map(|(i, &c)| (i + 1) as f64 * eta_plus - c)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regret_arithmetic() {
        let mut log = RunLog::new("x", 10);
        for t in 0..10 {
            log.push(0, 0, 0, if t < 3 { 1.0 } else { 0.0 }, 1);
        }
        let reg = compute_regret(&log, 0.5);
        assert!((reg[9] - 2.0).abs() < 1e-15);

        let mut flat = RunLog::new("x", 4);
        for _ in 0..4 {
            flat.push(0, 0, 0, 0.25, 1);
        }
        assert!(compute_regret(&flat, 0.25).iter().all(|&r| r == 0.0));
        assert_eq!(flat.mean_reward(1, 3), 0.25);
        assert_eq!(flat.tail_mean_reward(0.1), 0.25);
    }
}
