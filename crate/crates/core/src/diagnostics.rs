//! Calculators for mixing, concentration widths, the diameter and the regret
//! bound.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pomdp::{policy_cdfs, InducedChain, MemorylessPolicy, ModelSampler, PomdpError, PomdpModel};
use crate::rng::{self, categorical_cdf, derive_seed};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("mixing coefficient θ = {0} must be below 1")]
    ThetaOne(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Pomdp(#[from] PomdpError),
}

/// Geometric mixing surrogate θ and the constant G of a policy's chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub theta: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

impl MixingEstimate {
    pub fn from_chain(chain: &InducedChain, g: f64) -> Self {
        Self {
            theta: dobrushin_theta(chain),
            g,
        }
    }
}

/// One-step Dobrushin coefficient: the largest total-variation distance
/// between two rows of the chain.
pub fn dobrushin_theta(chain: &InducedChain) -> f64 {
    dobrushin_of_matrix(chain.matrix())
}

pub(crate) fn dobrushin_of_matrix(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            let tv = 0.5 * (0..p.ncols()).map(|j| (p[(i, j)] - p[(k, j)]).abs()).sum::<f64>();
            worst = worst.max(tv);
        }
    }
    worst.min(1.0)
}

fn check_theta(theta: f64) -> Result<(), DiagnosticsError> {
    if !(theta < 1.0) {
        return Err(DiagnosticsError::ThetaOne(theta));
    }
    if !(theta >= 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!("θ = {theta} is negative")));
    }
    Ok(())
}

/// The log term needs `dim / δ > 1`; only `δ > 0` is required beyond that.
fn check_log_term(dim: f64, delta: f64) -> Result<(), DiagnosticsError> {
    if !(delta > 0.0 && dim / delta > 1.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "δ = {delta} must be positive and below the dimension term {dim}"
        )));
    }
    Ok(())
}

/// Matrix Azuma width `√(8 c² n log((d1 + d2)/δ)) / (1 − θ)`. The symmetric
/// form (d1 = d2 = d) uses `√(2 c² n log(d/δ))`.
pub fn azuma_width(
    c: f64,
    n: f64,
    d1: usize,
    d2: usize,
    theta: f64,
    delta: f64,
    symmetric: bool,
) -> Result<f64, DiagnosticsError> {
    check_theta(theta)?;
    let (factor, dim) = if symmetric { (2.0, d1 as f64) } else { (8.0, (d1 + d2) as f64) };
    check_log_term(dim, delta)?;
    Ok((factor * c * c * n * (dim / delta).ln()).sqrt() / (1.0 - theta))
}

/// High-probability bound on `‖K̂ − K‖₂` for a pair moment estimated from
/// `n_l` samples of dimensions `d_a × d_b`:
/// `G/(1−θ) · √(8 log((d_a + d_b)/δ) / n_l)`.
pub fn moment_concentration_width(
    g: f64,
    theta: f64,
    n_l: usize,
    d_a: usize,
    d_b: usize,
    delta: f64,
) -> Result<f64, DiagnosticsError> {
    check_theta(theta)?;
    check_log_term((d_a + d_b) as f64, delta)?;
    if n_l == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(g / (1.0 - theta) * (8.0 * ((d_a + d_b) as f64 / delta).ln() / n_l as f64).sqrt())
}

/// Triple-moment version, with `d_a·d_b + d_c` in the logarithm.
pub fn triple_concentration_width(
    g: f64,
    theta: f64,
    n_l: usize,
    dims: [usize; 3],
    delta: f64,
) -> Result<f64, DiagnosticsError> {
    moment_concentration_width(g, theta, n_l, dims[0] * dims[1], dims[2], delta)
}

/// Mean hitting time for one `((x, a), (x', a'))` cell under one policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingTime {
    pub mean: f64,
    /// Rollouts that reached `horizon_cap` without hitting the target.
    pub capped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterEstimate {
    pub diameter: f64,
    /// `times[x·A + a][x'·A + a']`: the policy-minimized mean hitting time.
    pub times: Vec<Vec<f64>>,
    /// Cells whose minimizing estimate contains capped rollouts.
    pub capped_cells: usize,
    pub rollouts: usize,
    pub horizon_cap: usize,
}

/// The floored deterministic observation-to-action maps (`A^Y` policies).
pub fn deterministic_policy_set(actions: usize, observations: usize, eps_floor: f64) -> Result<Vec<MemorylessPolicy>, PomdpError> {
    let total = (actions as u64)
        .checked_pow(observations as u32)
        .filter(|&t| t <= 1 << 16)
        .ok_or_else(|| PomdpError::InvalidArgument(format!("{actions}^{observations} deterministic maps is too many")))?;
    (0..total)
        .map(|mut code| {
            let choice: Vec<usize> = (0..observations)
                .map(|_| {
                    let c = (code % actions as u64) as usize;
                    code /= actions as u64;
                    c
                })
                .collect();
            MemorylessPolicy::deterministic(actions, &choice, eps_floor)
        })
        .collect()
}

fn hitting_time(
    sampler: &ModelSampler,
    cdfs: &[Vec<f64>],
    from: (usize, usize),
    to: (usize, usize),
    rollouts: usize,
    horizon_cap: usize,
    seed: u64,
) -> HittingTime {
    let mut rng = rng::seeded(seed);
    let mut total = 0.0;
    let mut capped = 0;
    for _ in 0..rollouts {
        let (mut x, mut a) = from;
        let mut s = 0;
        loop {
            s += 1;
            x = sampler.act(&mut rng, x, a).2;
            let y = sampler.observe(&mut rng, x);
            a = categorical_cdf(&mut rng, &cdfs[y]);
            if (x, a) == to {
                break;
            }
            if s >= horizon_cap {
                capped += 1;
                break;
            }
        }
        total += s as f64;
    }
    HittingTime {
        mean: total / rollouts as f64,
        capped,
    }
}

/// Monte-Carlo diameter: for each ordered pair of state-action cells, the
/// smallest mean hitting time over `policies`, maximized over pairs. Every
/// policy sees the same random stream within a cell, so enlarging the set
/// never increases the estimate.
pub fn estimate_diameter(
    model: &PomdpModel,
    policies: &[MemorylessPolicy],
    rollouts: usize,
    horizon_cap: usize,
    seed: u64,
) -> Result<DiameterEstimate, DiagnosticsError> {
    if policies.is_empty() {
        return Err(DiagnosticsError::InvalidArgument("policy set is empty".into()));
    }
    if rollouts == 0 || horizon_cap == 0 {
        return Err(DiagnosticsError::InvalidArgument("rollouts and horizon_cap must be positive".into()));
    }
    for p in policies {
        if p.num_actions() != model.num_actions() || p.num_observations() != model.num_observations() {
            return Err(PomdpError::DimensionMismatch("policy does not match the model".into()).into());
        }
    }
    let (x, a) = (model.num_states(), model.num_actions());
    let cells = x * a;
    let sampler = ModelSampler::new(model);
    let tables: Vec<Vec<Vec<f64>>> = policies.iter().map(policy_cdfs).collect();
    let results: Vec<(f64, bool)> = (0..cells * cells)
        .into_par_iter()
        .map(|idx| {
            let (src, dst) = (idx / cells, idx % cells);
            let cell_seed = derive_seed(seed, idx as u64);
            tables
                .iter()
                .map(|cdfs| {
                    hitting_time(
                        &sampler,
                        cdfs,
                        (src / a, src % a),
                        (dst / a, dst % a),
                        rollouts,
                        horizon_cap,
                        cell_seed,
                    )
                })
                .fold((f64::INFINITY, false), |best, h| {
                    if h.mean < best.0 {
                        (h.mean, h.capped > 0)
                    } else {
                        best
                    }
                })
        })
        .collect();
    let times: Vec<Vec<f64>> = results.chunks(cells).map(|row| row.iter().map(|r| r.0).collect()).collect();
    Ok(DiameterEstimate {
        diameter: results.iter().map(|r| r.0).fold(0.0, f64::max),
        times,
        capped_cells: results.iter().filter(|r| r.1).count(),
        rollouts,
        horizon_cap,
    })
}

/// Inputs of the regret bound `C₁ r_max D X^{3/2} √(A Y N log(N/δ′))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub r_max: f64,
    pub delta_prime: f64,
}

pub fn regret_bound(inputs: &BoundInputs) -> Result<f64, DiagnosticsError> {
    let BoundInputs { d, c1, n, x, a, y, r, r_max, delta_prime } = *inputs;
    let positive = [d, c1, n, x as f64, a as f64, y as f64, r as f64, r_max, delta_prime];
    if positive.iter().any(|&v| !(v > 0.0)) {
        return Err(DiagnosticsError::InvalidArgument("regret bound inputs must all be positive".into()));
    }
    Ok(c1 * r_max * d * (x as f64).powf(1.5) * (a as f64 * y as f64 * n * (n / delta_prime).ln()).sqrt())
}

/// Inputs of the `bounds` report. Sizes, `r_max`, θ and the diameter are
/// taken from `model` when one is given and the field is unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsRequest {
    /// Model JSON the sizes, θ and diameter are read from.
    pub model_file: Option<std::path::PathBuf>,
    /// Lipschitz constant of the Azuma bound.
    pub c: f64,
    /// Samples per action for the widths.
    pub samples: usize,
    pub delta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub theta: Option<f64>,
    #[serde(rename = "D")]
    pub diameter: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Horizon of the regret bound.
    pub horizon: f64,
    pub delta_prime: f64,
    pub states: Option<usize>,
    pub actions: Option<usize>,
    pub observations: Option<usize>,
    pub rewards: Option<usize>,
    pub r_max: Option<f64>,
    pub eps_floor: f64,
    pub rollouts: usize,
    pub horizon_cap: usize,
    pub seed: u64,
}

impl Default for BoundsRequest {
    fn default() -> Self {
        Self {
            model_file: None,
            c: 1.0,
            samples: 10_000,
            delta: 0.05,
            g: 1.0,
            theta: None,
            diameter: None,
            c1: 1.0,
            horizon: 1e4,
            delta_prime: 0.05,
            states: None,
            actions: None,
            observations: None,
            rewards: None,
            r_max: None,
            eps_floor: crate::pomdp::DEFAULT_EPS_FLOOR,
            rollouts: 200,
            horizon_cap: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub mixing: MixingEstimate,
    pub azuma_width: f64,
    pub azuma_width_symmetric: f64,
    /// Widths for the (1,2), (1,3) and (2,3) view pairs.
    pub pair_widths: [f64; 3],
    pub triple_width: f64,
    pub diameter: Option<DiameterEstimate>,
    pub inputs: BoundInputs,
    pub regret_bound: f64,
}

/// Evaluates every calculator for one request. Without a model the sizes
/// default to X=2, A=2, Y=4, R=4, r_max=4, θ=0 and D=10.
pub fn bounds_report(req: &BoundsRequest, model: Option<&PomdpModel>) -> Result<BoundsReport, DiagnosticsError> {
    let pick = |v: Option<usize>, f: fn(&PomdpModel) -> usize, default: usize| v.or(model.map(f)).unwrap_or(default);
    let x = pick(req.states, PomdpModel::num_states, 2);
    let a = pick(req.actions, PomdpModel::num_actions, 2);
    let y = pick(req.observations, PomdpModel::num_observations, 4);
    let r = pick(req.rewards, PomdpModel::num_rewards, 4);
    let r_max = req.r_max.or(model.map(PomdpModel::r_max)).unwrap_or(4.0);

    let uniform = MemorylessPolicy::uniform(a, y);
    let theta = match (req.theta, model) {
        (Some(t), _) => t,
        (None, Some(m)) => dobrushin_theta(&crate::pomdp::induced_transition(m, &uniform)?),
        (None, None) => 0.0,
    };
    let mixing = MixingEstimate { theta, g: req.g };
    let n = req.samples as f64;
    let [d1, d2, d3] = crate::spectral::view_dims(a, y, r);
    let diameter = match (req.diameter, model) {
        (None, Some(m)) => {
            let set = deterministic_policy_set(a, y, req.eps_floor)?;
            Some(estimate_diameter(m, &set, req.rollouts, req.horizon_cap, req.seed)?)
        }
        _ => None,
    };
    let d = req.diameter.or(diameter.as_ref().map(|e| e.diameter)).unwrap_or(10.0);
    let inputs = BoundInputs {
        d,
        c1: req.c1,
        n: req.horizon,
        x,
        a,
        y,
        r,
        r_max,
        delta_prime: req.delta_prime,
    };
    Ok(BoundsReport {
        mixing,
        azuma_width: azuma_width(req.c, n, d1, d2, theta, req.delta, false)?,
        azuma_width_symmetric: azuma_width(req.c, n, d3, d3, theta, req.delta, true)?,
        pair_widths: [
            moment_concentration_width(req.g, theta, req.samples, d1, d2, req.delta)?,
            moment_concentration_width(req.g, theta, req.samples, d1, d3, req.delta)?,
            moment_concentration_width(req.g, theta, req.samples, d2, d3, req.delta)?,
        ],
        triple_width: triple_concentration_width(req.g, theta, req.samples, [d1, d2, d3], req.delta)?,
        diameter,
        regret_bound: regret_bound(&inputs)?,
        inputs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[f64], n: usize) -> InducedChain {
        InducedChain::new(DMatrix::from_row_slice(n, n, rows)).unwrap()
    }

    #[test]
    fn dobrushin_examples() {
        assert_eq!(dobrushin_theta(&chain(&[0.3, 0.7, 0.3, 0.7], 2)), 0.0);
        assert_eq!(dobrushin_theta(&chain(&[1.0, 0.0, 0.0, 1.0], 2)), 1.0);
        assert!((dobrushin_theta(&chain(&[0.9, 0.1, 0.5, 0.5], 2)) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn azuma_example_and_scaling() {
        let delta = 2.0 * (-8.0f64).exp();
        assert!((azuma_width(1.0, 1.0, 1, 1, 0.0, delta, false).unwrap() - 8.0).abs() < 1e-12);
        let w1 = azuma_width(1.0, 10.0, 3, 4, 0.2, 0.05, false).unwrap();
        let w4 = azuma_width(1.0, 40.0, 3, 4, 0.2, 0.05, false).unwrap();
        assert!((w4 / w1 - 2.0).abs() < 1e-12);
        assert!(matches!(azuma_width(1.0, 1.0, 1, 1, 1.0, 0.05, false), Err(DiagnosticsError::ThetaOne(_))));
    }

    #[test]
    fn concentration_example() {
        let delta = 4.0 / std::f64::consts::E;
        let w = moment_concentration_width(1.0, 0.0, 800, 2, 2, delta).unwrap();
        assert!((w - 0.1).abs() < 1e-12);
        assert!(moment_concentration_width(1.0, 0.0, 0, 2, 2, 0.1).unwrap().is_infinite());
    }

    #[test]
    fn regret_bound_example() {
        let b = regret_bound(&BoundInputs {
            d: 10.0,
            c1: 1.0,
            n: 1e4,
            x: 2,
            a: 2,
            y: 4,
            r: 4,
            r_max: 4.0,
            delta_prime: 0.05,
        })
        .unwrap();
        let hand = 40.0 * 2f64.powf(1.5) * (8e4 * (2e5f64).ln()).sqrt();
        assert!((b - hand).abs() < 1e-9 * hand);
        assert!((b / 1.118e5 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn deterministic_cycle_hitting_times() {
        // 0 -> 1 -> 0 regardless of the single action
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let model = PomdpModel::new(
            vec![0.0],
            1.0,
            vec![swap],
            DMatrix::identity(2, 2),
            vec![DMatrix::from_element(2, 1, 1.0)],
        )
        .unwrap();
        let set = deterministic_policy_set(1, 2, 0.0).unwrap();
        let est = estimate_diameter(&model, &set, 20, 100, 1).unwrap();
        assert_eq!(est.times[0][1], 1.0);
        assert_eq!(est.times[0][0], 2.0);
        assert_eq!(est.diameter, 2.0);
        assert_eq!(est.capped_cells, 0);
    }
}
