//! Memoryless-policy optimization for a fixed model and for an optimistic
//! surrogate of a confidence set.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pomdp::{
    action_given_state, average_reward, induced_transition, stationary_distribution, MemorylessPolicy, PolicyJson,
    PomdpError, PomdpModel, DEFAULT_EPS_FLOOR,
};
use crate::rng::{self, derive_seed};
use crate::spectral::EstimatedModel;

/// How the policy is updated at a fixed stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyUpdate {
    /// Per observation, jump to the floored argmax of the immediate reward
    /// `Σ_x ω(x) f_O(n|x) r̄(x,a)`.
    Myopic,
    /// Per observation, move toward the floored argmax of
    /// `Σ_x ω(x) f_O(n|x) Q(x,a)`, where `Q` adds the bias of the next state,
    /// with a backtracking step size.
    #[default]
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub eps_floor: f64,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub update: PolicyUpdate,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            eps_floor: DEFAULT_EPS_FLOOR,
            restarts: 20,
            max_iters: 200,
            tol: 1e-9,
            update: PolicyUpdate::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub policy: MemorylessPolicy,
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResultJson {
    pub policy: PolicyJson,
    pub eta: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl PlanResult {
    pub fn to_json_value(&self) -> PlanResultJson {
        PlanResultJson {
            policy: self.policy.to_json_value(),
            eta: self.eta,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

/// A confidence set around an estimated model.
#[derive(Debug, Clone)]
pub struct AdmissibleSet {
    pub center: EstimatedModel,
    pub r_max: f64,
}

impl AdmissibleSet {
    pub fn new(center: EstimatedModel) -> Self {
        let r_max = center.model.r_max();
        Self { center, r_max }
    }
}

/// Per observation, the index of the largest score (lowest index on ties).
fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    (0..scores.nrows())
        .map(|n| {
            let mut best = 0;
            for a in 1..scores.ncols() {
                if scores[(n, a)] > scores[(n, best)] {
                    best = a;
                }
            }
            best
        })
        .collect()
}

/// `scores[(n, a)] = Σ_x ω(x) f_O(n|x) value[(x, a)]`.
fn observation_scores(model: &PomdpModel, omega: &DVector<f64>, value: &DMatrix<f64>) -> DMatrix<f64> {
    let o = model.observation();
    let weighted = DMatrix::from_fn(o.nrows(), o.ncols(), |n, x| o[(n, x)] * omega[x]);
    weighted * value
}

/// The floored policy maximizing `Σ_x ω(x) r̄_π(x)` at fixed `ω`.
pub fn myopic_update(
    model: &PomdpModel,
    omega: &DVector<f64>,
    eps_floor: f64,
) -> Result<MemorylessPolicy, PomdpError> {
    let choice = argmax_rows(&observation_scores(model, omega, model.mean_reward()));
    MemorylessPolicy::deterministic(model.num_actions(), &choice, eps_floor)
}

/// Stationary distribution, bias `h` (with `ω·h = 0`) and state-action values
/// `Q(x,a) = r̄(x,a) + Σ_x' f_T(x'|x,a) h(x')` of a policy.
pub fn policy_values(
    model: &PomdpModel,
    policy: &MemorylessPolicy,
) -> Result<(DVector<f64>, f64, DMatrix<f64>), PomdpError> {
    let chain = induced_transition(model, policy)?;
    let omega = stationary_distribution(&chain)?;
    let q = action_given_state(model, policy)?;
    let x = model.num_states();
    let r_pi = DVector::from_fn(x, |i, _| {
        (0..model.num_actions()).map(|a| q[(i, a)] * model.mean_reward()[(i, a)]).sum::<f64>()
    });
    let eta = omega.dot(&r_pi);
    // (I - P + 1ωᵀ) h = r_π - η 1 has a unique solution with ω·h = 0
    let p = chain.matrix();
    let mut system = DMatrix::identity(x, x) - p;
    for i in 0..x {
        for j in 0..x {
            system[(i, j)] += omega[j];
        }
    }
    let rhs = r_pi.add_scalar(-eta);
    let h = system.lu().solve(&rhs).ok_or(PomdpError::ReducibleChain)?;
    let values = DMatrix::from_fn(x, model.num_actions(), |i, a| {
        model.mean_reward()[(i, a)] + model.transition(a).row(i).transpose().dot(&h)
    });
    Ok((omega, eta, values))
}

fn random_floored_policy(a: usize, y: usize, eps_floor: f64, seed: u64) -> MemorylessPolicy {
    let mut r = rng::seeded(seed);
    let free = 1.0 - eps_floor * a as f64;
    let mut pi = DMatrix::zeros(a, y);
    for n in 0..y {
        let d = rng::random_distribution(&mut r, a);
        for l in 0..a {
            pi[(l, n)] = eps_floor + free * d[l];
        }
    }
    normalize_columns(&mut pi);
    MemorylessPolicy::new(pi, eps_floor).expect("floored random policy is valid")
}

fn normalize_columns(pi: &mut DMatrix<f64>) {
    for mut c in pi.column_iter_mut() {
        let s = c.sum();
        c /= s;
    }
}

fn mix(from: &MemorylessPolicy, to: &MemorylessPolicy, step: f64) -> MemorylessPolicy {
    let mut pi = from.matrix() * (1.0 - step) + to.matrix() * step;
    normalize_columns(&mut pi);
    let floor = from.eps_floor().min(to.eps_floor());
    MemorylessPolicy::new(pi, floor).unwrap_or_else(|_| to.clone())
}

fn run_from(
    model: &PomdpModel,
    start: MemorylessPolicy,
    config: &PlannerConfig,
) -> Result<PlanResult, PomdpError> {
    let mut policy = start;
    let mut eta = average_reward(model, &policy)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iters {
        iterations += 1;
        let candidate = match config.update {
            PolicyUpdate::Myopic => {
                let omega = stationary_distribution(&induced_transition(model, &policy)?)?;
                let next = myopic_update(model, &omega, config.eps_floor)?;
                average_reward(model, &next).ok().map(|e| (next, e))
            }
            PolicyUpdate::Gradient => gradient_step(model, &policy, eta, config)?,
        };
        match candidate {
            Some((next, next_eta)) if next_eta >= eta => {
                let gain = next_eta - eta;
                debug_assert!(next_eta >= eta);
                policy = next;
                eta = next_eta;
                if gain < config.tol {
                    converged = true;
                    break;
                }
            }
            _ => {
                converged = true;
                break;
            }
        }
    }
    Ok(PlanResult {
        policy,
        eta,
        iterations,
        converged,
    })
}

/// Conditional-gradient step: the target is the floored argmax of the policy
/// gradient, and the step size halves until `η` does not decrease.
fn gradient_step(
    model: &PomdpModel,
    policy: &MemorylessPolicy,
    eta: f64,
    config: &PlannerConfig,
) -> Result<Option<(MemorylessPolicy, f64)>, PomdpError> {
    let (omega, _, values) = policy_values(model, policy)?;
    let choice = argmax_rows(&observation_scores(model, &omega, &values));
    let target = MemorylessPolicy::deterministic(model.num_actions(), &choice, config.eps_floor)?;
    let mut step = 1.0;
    for _ in 0..30 {
        let next = mix(policy, &target, step);
        if let Ok(e) = average_reward(model, &next) {
            if e >= eta {
                return Ok(Some((next, e)));
            }
        }
        step *= 0.5;
    }
    Ok(None)
}

/// Alternates between the stationary distribution of the current policy and a
/// policy update at that distribution, from `restarts` initial policies: the
/// uniform policy, then each single-action policy (floored), then random
/// floored policies. The best run is returned; ties go to the earliest restart.
pub fn alternating_maximization(model: &PomdpModel, config: &PlannerConfig) -> Result<PlanResult, PomdpError> {
    let a = model.num_actions();
    let y = model.num_observations();
    if !(config.eps_floor >= 0.0 && config.eps_floor * (a as f64) < 1.0 + 1e-12) || (a > 1 && config.eps_floor >= 1.0 / a as f64)
    {
        return Err(PomdpError::InvalidArgument(format!(
            "eps_floor {} must lie in [0, 1/A)",
            config.eps_floor
        )));
    }
    let runs: Vec<Result<PlanResult, PomdpError>> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut last = Err(PomdpError::ReducibleChain);
            // a reducible start is retried with a perturbed policy
            for attempt in 0..4u64 {
                let start = match (r, attempt) {
                    (0, 0) => MemorylessPolicy::uniform(a, y),
                    // blind policies: one action everywhere
                    (r, 0) if r <= a => MemorylessPolicy::deterministic(a, &vec![r - 1; y], config.eps_floor)
                        .expect("floor below 1/A"),
                    _ => random_floored_policy(a, y, config.eps_floor, derive_seed(config.seed, (r as u64) << 8 | attempt)),
                };
                last = run_from(model, start, config);
                if !matches!(last, Err(PomdpError::ReducibleChain)) {
                    break;
                }
            }
            last
        })
        .collect();
    let mut best: Option<PlanResult> = None;
    let mut first_err = None;
    for run in runs {
        match run {
            Ok(res) => {
                if best.as_ref().is_none_or(|b| res.eta > b.eta) {
                    best = Some(res);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(PomdpError::ReducibleChain))
}

/// Center model with every mean reward raised by `r_max · (B_R + B_T + B_O)`
/// of its action and clipped at `r_max`.
pub fn optimistic_model(adm: &AdmissibleSet) -> PomdpModel {
    let model = &adm.center.model;
    let rbar = model.mean_reward();
    let bonus: Vec<f64> = adm.center.bounds.per_action.iter().map(|b| b.total()).collect();
    let boosted = DMatrix::from_fn(rbar.nrows(), rbar.ncols(), |i, l| {
        let b = bonus[l];
        if b.is_finite() {
            (rbar[(i, l)] + adm.r_max * b).min(adm.r_max)
        } else {
            adm.r_max
        }
    });
    model.with_mean_reward(boosted)
}

pub fn optimistic_policy(adm: &AdmissibleSet, config: &PlannerConfig) -> Result<PlanResult, PomdpError> {
    alternating_maximization(&optimistic_model(adm), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::best_policy_bruteforce;
    use crate::pomdp::random::{random_model, RandomModelSpec};
    use crate::rng::seeded;
    use crate::spectral::{ActionBounds, ConfidenceBounds, ConfidenceConstants};

    fn with_bounds(model: PomdpModel, per_action: Vec<ActionBounds>) -> AdmissibleSet {
        let a = model.num_actions();
        AdmissibleSet::new(EstimatedModel {
            model,
            bounds: ConfidenceBounds {
                per_action,
                constants: ConfidenceConstants::default(),
                delta: 0.1,
            },
            per_action_fo: vec![None; a],
            failures: vec![None; a],
        })
    }

    fn bounds(b_o: f64, b_r: f64, b_t: f64) -> ActionBounds {
        ActionBounds { b_o, b_r, b_t, n_l: 10 }
    }

    fn dominant_model() -> PomdpModel {
        // action 1 always pays 1, action 0 pays 0
        let t = DMatrix::from_row_slice(2, 2, &[0.7, 0.3, 0.4, 0.6]);
        let o = DMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.2, 0.7]);
        let r0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let r1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        PomdpModel::new(vec![0.0, 1.0], 4.0, vec![t.clone(), t], o, vec![r0, r1]).unwrap()
    }

    #[test]
    fn dominant_action_wins_in_one_step() {
        let model = dominant_model();
        for update in [PolicyUpdate::Myopic, PolicyUpdate::Gradient] {
            let cfg = PlannerConfig { eps_floor: 0.05, update, ..Default::default() };
            let res = alternating_maximization(&model, &cfg).unwrap();
            assert!((res.policy.prob(1, 0) - 0.95).abs() < 1e-12);
            assert!((res.policy.prob(1, 1) - 0.95).abs() < 1e-12);
            assert!((res.eta - 0.95).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_tolerance_stops_after_one_sweep() {
        let cfg = PlannerConfig {
            tol: f64::INFINITY,
            restarts: 1,
            eps_floor: 0.0,
            update: PolicyUpdate::Myopic,
            ..Default::default()
        };
        let res = alternating_maximization(&dominant_model(), &cfg).unwrap();
        assert_eq!(res.iterations, 1);
        assert!((res.eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn close_to_the_grid_optimum() {
        let mut rng = seeded(77);
        for _ in 0..3 {
            let spec = RandomModelSpec::new(2, 2, 3, vec![0.0, 1.0, 2.0]);
            let model = random_model(&spec, &mut rng);
            let (_, best) = best_policy_bruteforce(&model, 0.05).unwrap();
            let cfg = PlannerConfig { eps_floor: 0.0, ..Default::default() };
            let res = alternating_maximization(&model, &cfg).unwrap();
            assert!(res.eta >= best - 1e-3, "{} vs {best}", res.eta);
        }
    }

    #[test]
    fn optimistic_bonus_arithmetic() {
        let model = dominant_model();
        let adm = with_bounds(model.clone(), vec![bounds(0.0, 0.1, 0.0), bounds(0.0, 0.0, 0.0)]);
        let opt = optimistic_model(&adm);
        // r̄(x, 0) = 0 -> 0.4; r̄(x, 1) = 1 unchanged
        assert!((opt.mean_reward()[(0, 0)] - 0.4).abs() < 1e-15);
        assert_eq!(opt.mean_reward()[(1, 1)], 1.0);

        let zero = with_bounds(model.clone(), vec![bounds(0.0, 0.0, 0.0); 2]);
        assert_eq!(optimistic_model(&zero), model);

        let inf = with_bounds(model, vec![ActionBounds::infinite(0), bounds(0.0, 0.0, 0.0)]);
        let opt = optimistic_model(&inf);
        assert!(opt.mean_reward().column(0).iter().all(|&v| v == 4.0));
    }

    #[test]
    fn linearized_update_beats_random_policies() {
        let mut rng = seeded(5);
        let spec = RandomModelSpec::new(3, 3, 4, vec![0.0, 1.0, 3.0]);
        let model = random_model(&spec, &mut rng);
        let start = MemorylessPolicy::uniform(3, 4);
        let omega = stationary_distribution(&induced_transition(&model, &start).unwrap()).unwrap();
        let floor = 0.02;
        let lin = |p: &MemorylessPolicy| {
            omega.dot(&crate::pomdp::policy_mean_reward(&model, p).unwrap())
        };
        let best = lin(&myopic_update(&model, &omega, floor).unwrap());
        for s in 0..100 {
            let p = random_floored_policy(3, 4, floor, s);
            assert!(lin(&p) <= best + 1e-12);
        }
    }
}
