use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RunLog;
use crate::env::Environment;
use crate::rng::{self, derive_seed};

fn start<E: Environment + ?Sized>(env: &mut E, seed: u64) -> (rng::SeededRng, usize) {
    (rng::seeded(derive_seed(seed, 0xA9E)), env.reset(derive_seed(seed, 0xE17)))
}

/// Uniformly random actions.
pub fn random_agent<E: Environment + ?Sized>(env: &mut E, horizon: usize, seed: u64) -> RunLog {
    let (mut rng, mut obs) = start(env, seed);
    let a = env.num_actions();
    let mut log = RunLog::new("random", horizon);
    for _ in 0..horizon {
        let action = rng.random_range(0..a);
        let out = env.step(action).expect("valid action");
        log.push(obs, action, out.reward_index, out.reward, 1);
        obs = out.observation;
    }
    log
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QLearningConfig {
    pub gamma: f64,
    /// Exploration rate of the ε-greedy rule.
    pub epsilon: f64,
    /// Constant learning rate; `None` uses `1 / n(y, a)`.
    pub alpha: Option<f64>,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            epsilon: 0.1,
            alpha: None,
        }
    }
}

fn argmax(row: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in row.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Tabular Q-learning over (observation, action) with ε-greedy exploration.
/// Returns the log and the final Q table (Y×A).
pub fn q_learning_agent<E: Environment + ?Sized>(
    env: &mut E,
    horizon: usize,
    config: &QLearningConfig,
    seed: u64,
) -> (RunLog, DMatrix<f64>) {
    assert!((0.0..1.0).contains(&config.gamma), "gamma must lie in [0, 1)");
    let (mut rng, mut obs) = start(env, seed);
    let a = env.num_actions();
    let mut q = DMatrix::zeros(env.num_observations(), a);
    let mut visits = DMatrix::<u64>::zeros(env.num_observations(), a);
    let mut log = RunLog::new("qlearning", horizon);
    for _ in 0..horizon {
        let action = if rng.random::<f64>() < config.epsilon {
            rng.random_range(0..a)
        } else {
            argmax(q.row(obs).iter().copied())
        };
        let out = env.step(action).expect("valid action");
        visits[(obs, action)] += 1;
        let alpha = config.alpha.unwrap_or(1.0 / visits[(obs, action)] as f64);
        let next_best = q.row(out.observation).max();
        q[(obs, action)] += alpha * (out.reward + config.gamma * next_best - q[(obs, action)]);
        log.push(obs, action, out.reward_index, out.reward, 1);
        obs = out.observation;
    }
    (log, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UcrlMdpConfig {
    pub delta: f64,
    /// Relative value iteration stops once the span of successive updates is below this.
    pub vi_tol: f64,
    pub vi_max_iters: usize,
}

impl Default for UcrlMdpConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            vi_tol: 1e-6,
            vi_max_iters: 2000,
        }
    }
}

/// Relative value iteration on an observation MDP with optimistic rewards.
/// Returns the greedy action per observation and the bias vector.
pub(crate) fn optimistic_plan(
    rewards: &DMatrix<f64>,
    transitions: &[DMatrix<f64>],
    tol: f64,
    max_iters: usize,
) -> (Vec<usize>, DVector<f64>) {
    let (y, a) = rewards.shape();
    let mut h = DVector::zeros(y);
    let backup = |h: &DVector<f64>| {
        DMatrix::from_fn(y, a, |s, l| rewards[(s, l)] + transitions[l].row(s).transpose().dot(h))
    };
    for _ in 0..max_iters {
        let q = backup(&h);
        let next = DVector::from_fn(y, |s, _| q.row(s).max());
        // damped update keeps periodic chains from oscillating
        let next = (&next + &h) * 0.5;
        let diff = &next - &h;
        let span = diff.max() - diff.min();
        h = next.add_scalar(-next[0]);
        if span < tol {
            break;
        }
    }
    let q = backup(&h);
    let greedy = (0..y).map(|s| argmax(q.row(s).iter().copied())).collect();
    (greedy, h)
}

/// UCRL over observations treated as states: empirical transitions and
/// rewards, a reward bonus `r_max·√(2 log(1/δ) / n(y,a))` (unvisited pairs
/// get `r_max`), epochs ended by the doubling rule on (y, a) counts.
pub fn ucrl_mdp_agent<E: Environment + ?Sized>(
    env: &mut E,
    horizon: usize,
    config: &UcrlMdpConfig,
    seed: u64,
) -> RunLog {
    let (_, mut obs) = start(env, seed);
    let (y, a) = (env.num_observations(), env.num_actions());
    let r_max = env.r_max();
    let log_term = (1.0 / config.delta).ln();
    let mut counts = DMatrix::<f64>::zeros(y, a);
    let mut reward_sum = DMatrix::<f64>::zeros(y, a);
    let mut trans_counts: Vec<DMatrix<f64>> = vec![DMatrix::zeros(y, y); a];
    let mut stored = DMatrix::<f64>::zeros(y, a);
    let mut in_epoch = DMatrix::<f64>::zeros(y, a);
    let mut log = RunLog::new("ucrl-mdp", horizon);
    let mut epoch = 1;
    let mut greedy = vec![0usize; y];
    let mut needs_plan = true;
    for _ in 0..horizon {
        if needs_plan {
            let rewards = DMatrix::from_fn(y, a, |s, l| {
                let n = counts[(s, l)];
                if n == 0.0 {
                    r_max
                } else {
                    (reward_sum[(s, l)] / n + r_max * (2.0 * log_term / n).sqrt()).min(r_max)
                }
            });
            let transitions: Vec<DMatrix<f64>> = (0..a)
                .map(|l| {
                    DMatrix::from_fn(y, y, |s, s2| {
                        let n = counts[(s, l)];
                        if n == 0.0 {
                            1.0 / y as f64
                        } else {
                            trans_counts[l][(s, s2)] / n
                        }
                    })
                })
                .collect();
            greedy = optimistic_plan(&rewards, &transitions, config.vi_tol, config.vi_max_iters).0;
            needs_plan = false;
        }
        let action = greedy[obs];
        let out = env.step(action).expect("valid action");
        log.push(obs, action, out.reward_index, out.reward, epoch);
        counts[(obs, action)] += 1.0;
        in_epoch[(obs, action)] += 1.0;
        reward_sum[(obs, action)] += out.reward;
        trans_counts[action][(obs, out.observation)] += 1.0;
        let n0 = stored[(obs, action)];
        if in_epoch[(obs, action)] >= if n0 == 0.0 { 2.0 } else { 2.0 * n0 } {
            stored.copy_from(&counts);
            in_epoch.fill(0.0);
            epoch += 1;
            needs_plan = true;
        }
        obs = out.observation;
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::SyntheticEnv;
    use crate::pomdp::{InitialState, PomdpModel};

    fn bandit() -> SyntheticEnv {
        // one state, action 0 pays 1, action 1 pays 0
        let one = DMatrix::from_element(1, 1, 1.0);
        let model = PomdpModel::new(
            vec![0.0, 1.0],
            1.0,
            vec![one.clone(), one.clone()],
            one,
            vec![DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])],
        )
        .unwrap();
        SyntheticEnv::new(model, InitialState::Uniform)
    }

    #[test]
    fn q_learning_prefers_the_paying_arm() {
        let mut env = bandit();
        let (log, q) = q_learning_agent(&mut env, 2000, &QLearningConfig::default(), 3);
        assert!(q[(0, 0)] > q[(0, 1)]);
        assert!(log.tail_mean_reward(0.5) > 0.9);
    }

    #[test]
    fn zero_discount_unit_rate_keeps_last_reward() {
        let mut env = bandit();
        let cfg = QLearningConfig { gamma: 0.0, epsilon: 1.0, alpha: Some(1.0) };
        let (log, q) = q_learning_agent(&mut env, 50, &cfg, 1);
        for l in 0..2 {
            let last = log.steps.iter().rev().find(|s| s.a as usize == l).unwrap();
            assert_eq!(q[(0, l)], last.r);
        }
    }

    #[test]
    fn random_agent_is_reproducible() {
        let mut e1 = bandit();
        let mut e2 = bandit();
        assert_eq!(random_agent(&mut e1, 300, 9), random_agent(&mut e2, 300, 9));
    }

    #[test]
    fn ucrl_mdp_finds_the_paying_arm() {
        let mut env = bandit();
        let log = ucrl_mdp_agent(&mut env, 5000, &UcrlMdpConfig::default(), 0);
        assert!(log.tail_mean_reward(0.2) > 0.95);
    }
}
