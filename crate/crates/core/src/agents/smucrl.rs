use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::RunLog;
use crate::env::Environment;
use crate::planning::{optimistic_policy, AdmissibleSet, PlannerConfig};
use crate::pomdp::{policy_cdfs, MemorylessPolicy, PolicyJson, DEFAULT_EPS_FLOOR};
use crate::rng::{self, categorical_cdf, derive_seed};
use crate::spectral::{
    encode_view1, encode_view2, estimate_from_views, estimation_errors, Alphabet, EstimationErrors,
    EstimatorConfig, ViewDataset,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmUcrlConfig {
    /// Interior triples per action the first epoch collects.
    pub bootstrap: usize,
    pub eps_floor: f64,
    pub delta_prime: f64,
    pub estimator: EstimatorConfig,
    pub planner: PlannerConfig,
}

impl Default for SmUcrlConfig {
    fn default() -> Self {
        Self {
            bootstrap: 50,
            eps_floor: DEFAULT_EPS_FLOOR,
            delta_prime: 0.05,
            estimator: EstimatorConfig::default(),
            planner: PlannerConfig::default(),
        }
    }
}

/// Triples of one action from one epoch, with the policy that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredBatch {
    pub views: ViewDataset,
    pub policy: MemorylessPolicy,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmUcrlState {
    /// Current epoch, starting at 1.
    pub k: usize,
    /// Stored sample counts `N^{(k)}(l)`.
    pub n_k: Vec<usize>,
    /// In-epoch counts `v^{(k)}(l)`.
    pub v_k: Vec<usize>,
    pub store: Vec<Option<StoredBatch>>,
    pub current_policy: MemorylessPolicy,
    pub delta_prime: f64,
    /// `δ′ / N⁶` for horizon `N`.
    pub delta: f64,
    pub t: usize,
}

impl SmUcrlState {
    pub fn new(actions: usize, observations: usize, horizon: usize, delta_prime: f64) -> Self {
        Self {
            k: 1,
            n_k: vec![0; actions],
            v_k: vec![0; actions],
            store: vec![None; actions],
            current_policy: MemorylessPolicy::uniform(actions, observations),
            delta_prime,
            delta: delta_prime / (horizon.max(1) as f64).powi(6),
            t: 0,
        }
    }

    /// Closes the epoch: keeps, per action, the batch of the epoch with the
    /// most samples so far (newest wins ties) and sets `N^{(k+1)}(l)` to the
    /// running maximum of the in-epoch counts.
    pub fn close_epoch(&mut self, epoch_views: Vec<ViewDataset>) {
        for (l, views) in epoch_views.into_iter().enumerate() {
            let v = self.v_k[l];
            debug_assert_eq!(v, views.len());
            if v > 0 && v >= self.n_k[l] {
                self.store[l] = Some(StoredBatch {
                    views,
                    policy: self.current_policy.clone(),
                    epoch: self.k,
                });
            }
            self.n_k[l] = self.n_k[l].max(v);
            self.v_k[l] = 0;
        }
        self.k += 1;
    }
}

/// True iff some action's in-epoch count reached twice its stored count
/// (threshold 2 when nothing is stored).
pub fn epoch_should_end(state: &SmUcrlState) -> bool {
    state
        .v_k
        .iter()
        .zip(&state.n_k)
        .any(|(&v, &n)| v >= if n == 0 { 2 } else { 2 * n })
}

/// Per-epoch diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochInfo {
    pub epoch: usize,
    /// First step of the epoch (1-based).
    pub start: usize,
    /// Stored counts the epoch's policy was planned from.
    pub stored: Vec<usize>,
    /// Planned optimistic average reward, when planning ran.
    pub planned_eta: Option<f64>,
    /// Errors of the model estimated at the epoch start, when the
    /// environment exposes ground truth of matching size.
    pub errors: Option<EstimationErrors>,
    /// Actions whose decomposition failed at the epoch start.
    pub failed_actions: Vec<usize>,
    /// The policy executed during the epoch.
    pub policy: PolicyJson,
}

/// Runs SM-UCRL for `horizon` steps with `x_guess` hidden states.
pub fn smucrl_run<E: Environment + ?Sized>(
    env: &mut E,
    horizon: usize,
    x_guess: usize,
    config: &SmUcrlConfig,
    seed: u64,
) -> RunLog {
    let a = env.num_actions();
    let y = env.num_observations();
    let r = env.num_rewards();
    let alphabet = Alphabet {
        actions: a,
        observations: y,
        reward_values: env.reward_values().to_vec(),
        r_max: env.r_max(),
    };
    let mut rng = rng::seeded(derive_seed(seed, 0xA9E));
    let mut obs = env.reset(derive_seed(seed, 0xE17));
    let mut state = SmUcrlState::new(a, y, horizon, config.delta_prime);
    state.current_policy = MemorylessPolicy::uniform(a, y)
        .with_floor(config.eps_floor.min(1.0 / a as f64))
        .expect("uniform policy satisfies any floor up to 1/A");
    let mut log = RunLog::new("smucrl", horizon);
    let mut cdfs = policy_cdfs(&state.current_policy);
    let mut epoch_views: Vec<ViewDataset> = (0..a).map(|l| ViewDataset::empty(l, a, y, r)).collect();
    // the previous step of the current epoch, as (a, y, m)
    let mut prev: Option<(usize, usize, usize)> = None;
    log.epochs.push(EpochInfo {
        epoch: 1,
        start: 1,
        stored: state.n_k.clone(),
        planned_eta: None,
        errors: None,
        failed_actions: Vec::new(),
        policy: state.current_policy.to_json_value(),
    });

    while state.t < horizon {
        let action = categorical_cdf(&mut rng, &cdfs[obs]);
        let out = env
            .step(action)
            .expect("agents only choose actions the environment offers");
        state.t += 1;
        log.push(obs, action, out.reward_index, out.reward, state.k);
        let cur = (action, obs, out.reward_index);
        if let Some((pa, py, pm)) = prev {
            epoch_views[action].push(
                encode_view1(pa, py, pm, a, y),
                encode_view2(obs, out.reward_index, y),
                out.observation,
            );
            state.v_k[action] += 1;
        }
        prev = Some(cur);
        obs = out.observation;

        let ended = if state.k == 1 {
            state.v_k.iter().all(|&v| v >= config.bootstrap.max(1))
        } else {
            epoch_should_end(&state)
        };
        if !ended || state.t >= horizon {
            continue;
        }

        let finished = std::mem::replace(
            &mut epoch_views,
            (0..a).map(|l| ViewDataset::empty(l, a, y, r)).collect(),
        );
        state.close_epoch(finished);
        prev = None;
        let mut info = EpochInfo {
            epoch: state.k,
            start: state.t + 1,
            stored: state.n_k.clone(),
            planned_eta: None,
            errors: None,
            failed_actions: Vec::new(),
            policy: state.current_policy.to_json_value(),
        };
        let batches: Vec<(ViewDataset, &MemorylessPolicy)> = state
            .store
            .iter()
            .enumerate()
            .map(|(l, b)| match b {
                Some(b) => (b.views.clone(), &b.policy),
                None => (ViewDataset::empty(l, a, y, r), &state.current_policy),
            })
            .collect();
        let mut est_config = config.estimator.clone();
        est_config.seed = derive_seed(config.estimator.seed ^ seed, state.k as u64);
        match estimate_from_views(&batches, x_guess, state.delta, &alphabet, &est_config) {
            Ok(est) => {
                info.failed_actions = (0..a).filter(|&l| !est.is_estimated(l)).collect();
                if let Some(truth) = env.ground_truth() {
                    if truth.num_states() == x_guess {
                        info.errors = estimation_errors(&est, truth).ok();
                    }
                }
                let mut planner = config.planner.clone();
                planner.eps_floor = config.eps_floor;
                planner.seed = derive_seed(config.planner.seed ^ seed, state.k as u64);
                match optimistic_policy(&AdmissibleSet::new(est), &planner) {
                    Ok(plan) => {
                        debug!("epoch {} planned eta {:.4}", state.k, plan.eta);
                        info.planned_eta = Some(plan.eta);
                        state.current_policy = plan.policy;
                    }
                    Err(e) => warn!("epoch {}: planning failed ({e}); keeping the previous policy", state.k),
                }
            }
            Err(e) => warn!("epoch {}: estimation failed ({e}); keeping the previous policy", state.k),
        }
        debug_assert!(state
            .current_policy
            .matrix()
            .iter()
            .all(|&p| p >= config.eps_floor - 1e-12));
        cdfs = policy_cdfs(&state.current_policy);
        info.policy = state.current_policy.to_json_value();
        log.epochs.push(info);
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(v: &[usize], n: &[usize]) -> SmUcrlState {
        let mut s = SmUcrlState::new(v.len(), 1, 10, 0.1);
        s.v_k = v.to_vec();
        s.n_k = n.to_vec();
        s
    }

    #[test]
    fn doubling_rule() {
        assert!(!epoch_should_end(&state(&[3, 0], &[2, 5])));
        assert!(epoch_should_end(&state(&[4, 0], &[2, 5])));
        assert!(epoch_should_end(&state(&[2], &[0])));
        assert!(!epoch_should_end(&state(&[1], &[0])));
    }

    #[test]
    fn stored_counts_track_the_running_maximum() {
        let mut s = SmUcrlState::new(2, 1, 10, 0.1);
        let batch = |l: usize, n: usize| {
            let mut v = ViewDataset::empty(l, 2, 1, 1);
            for _ in 0..n {
                v.push(0, 0, 0);
            }
            v
        };
        for (v0, v1) in [(5, 2), (3, 7), (9, 1)] {
            s.v_k = vec![v0, v1];
            s.close_epoch(vec![batch(0, v0), batch(1, v1)]);
        }
        assert_eq!(s.n_k, vec![9, 7]);
        assert_eq!(s.store[0].as_ref().unwrap().epoch, 3);
        assert_eq!(s.store[1].as_ref().unwrap().epoch, 2);
        assert_eq!(s.k, 4);
        assert!((s.delta - 0.1 / 1e6).abs() < 1e-20);
    }
}
