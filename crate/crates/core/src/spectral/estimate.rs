use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    align, bounds, cross_moments, recover_observation, recover_reward, recover_transition, recover_v2,
    symmetrize, tensor_power_method, unwhiten_and_recover_v3, whiten, whitened_tensor, ConfidenceBounds,
    ConfidenceConstants, MomentSet, SpectralError, TpmConfig, ViewDataset,
};
use crate::pomdp::{MemorylessPolicy, ModelJson, PomdpError, PomdpModel, Trajectory};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Relative singular-value threshold of every rank-X pseudo-inverse.
    pub rank_tol: f64,
    pub tpm: TpmConfig,
    pub constants: ConfidenceConstants,
    /// Base seed of the per-action decompositions.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            tpm: TpmConfig::default(),
            constants: ConfidenceConstants::default(),
            seed: 0,
        }
    }
}

/// Everything about the symbol sets the estimator cannot infer from data.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    pub actions: usize,
    pub observations: usize,
    pub reward_values: Vec<f64>,
    pub r_max: f64,
}

impl Alphabet {
    pub fn of_model(model: &PomdpModel) -> Self {
        Self {
            actions: model.num_actions(),
            observations: model.num_observations(),
            reward_values: model.reward_values().to_vec(),
            r_max: model.r_max(),
        }
    }

    pub fn rewards(&self) -> usize {
        self.reward_values.len()
    }
}

/// Per-action output of the decomposition, in that action's own state labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionEstimate {
    pub v2: DMatrix<f64>,
    pub v3: DMatrix<f64>,
    pub weights: DVector<f64>,
    /// X×R reward distribution.
    pub reward: DMatrix<f64>,
    pub rho: DVector<f64>,
    /// Y×X observation matrix seen through this action.
    pub observation: DMatrix<f64>,
}

impl ActionEstimate {
    fn relabel(&self, perm: &[usize]) -> Self {
        let cols = |m: &DMatrix<f64>| DMatrix::from_fn(m.nrows(), perm.len(), |r, i| m[(r, perm[i])]);
        Self {
            v2: cols(&self.v2),
            v3: cols(&self.v3),
            weights: DVector::from_fn(perm.len(), |i, _| self.weights[perm[i]]),
            reward: DMatrix::from_fn(perm.len(), self.reward.ncols(), |i, m| self.reward[(perm[i], m)]),
            rho: DVector::from_fn(perm.len(), |i, _| self.rho[perm[i]]),
            observation: cols(&self.observation),
        }
    }
}

/// Moments of one action together with the policy that generated them.
#[derive(Debug, Clone)]
pub struct MomentBatch<'a> {
    pub moments: MomentSet,
    pub policy: &'a MemorylessPolicy,
    pub samples: usize,
}

/// Estimated model, its confidence widths, and the per-action observation
/// estimates (already relabeled to the merged state order).
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedModel {
    pub model: PomdpModel,
    pub bounds: ConfidenceBounds,
    pub per_action_fo: Vec<Option<DMatrix<f64>>>,
    /// Why an action fell back to placeholders, if it did.
    pub failures: Vec<Option<String>>,
}

impl EstimatedModel {
    pub fn is_estimated(&self, l: usize) -> bool {
        self.failures[l].is_none()
    }
}

/// Runs the full decomposition for one action.
pub fn estimate_action(
    moments: &MomentSet,
    policy: &MemorylessPolicy,
    l: usize,
    x: usize,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<ActionEstimate, SpectralError> {
    let [_, d2, y] = moments.dims();
    let sym = symmetrize(moments, x, config.rank_tol)?;
    let m2 = sym.m2.as_ref().expect("symmetrize fills M2");
    let m3 = sym.m3.as_ref().expect("symmetrize fills M3");
    let w = whiten(m2, x, config.rank_tol)?;
    let pairs = tensor_power_method(&whitened_tensor(m3, &w), x, &config.tpm, seed)?;
    let (v3, weights) = unwhiten_and_recover_v3(&w, &pairs)?;
    let v2 = recover_v2(moments, &v3, &weights, config.rank_tol)?;
    let reward = recover_reward(&v2, y, d2 / y);
    let (rho, observation) = recover_observation(&v2, policy, l)?;
    Ok(ActionEstimate {
        v2,
        v3,
        weights,
        reward,
        rho,
        observation,
    })
}

fn check_delta(delta: f64) -> Result<(), SpectralError> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(SpectralError::InvalidDelta(delta))
    }
}

/// Merges per-action moment batches into one model. `None` batches (actions
/// with no data) and actions whose decomposition fails get uniform
/// placeholders with infinite widths.
pub fn estimate_from_moments(
    batches: &[Option<MomentBatch<'_>>],
    x: usize,
    delta: f64,
    alphabet: &Alphabet,
    config: &EstimatorConfig,
) -> Result<EstimatedModel, SpectralError> {
    check_delta(delta)?;
    let a = alphabet.actions;
    let y = alphabet.observations;
    let r = alphabet.rewards();
    if batches.len() != a || x == 0 {
        return Err(SpectralError::DimensionMismatch(format!(
            "{} batches for {a} actions",
            batches.len()
        )));
    }

    let results: Vec<Result<ActionEstimate, String>> = batches
        .par_iter()
        .enumerate()
        .map(|(l, b)| match b {
            None => Err(SpectralError::EmptyViewSet { action: l }.to_string()),
            Some(b) => estimate_action(&b.moments, b.policy, l, x, config, derive_seed(config.seed, l as u64))
                .map_err(|e| e.to_string()),
        })
        .collect();
    let samples: Vec<usize> = batches.iter().map(|b| b.as_ref().map_or(0, |b| b.samples)).collect();

    // reference = estimated action with the most samples (lowest index on ties)
    let reference = (0..a)
        .filter(|&l| results[l].is_ok())
        .fold(None, |best: Option<usize>, l| match best {
            Some(b) if samples[b] >= samples[l] => Some(b),
            _ => Some(l),
        });

    let mut failures: Vec<Option<String>> = results.iter().map(|r| r.as_ref().err().cloned()).collect();
    let mut aligned: Vec<Option<ActionEstimate>> = vec![None; a];
    let merged_o = match reference {
        None => DMatrix::from_element(y, x, 1.0 / y as f64),
        Some(reference) => {
            let fos: Vec<Option<DMatrix<f64>>> =
                results.iter().map(|r| r.as_ref().ok().map(|e| e.observation.clone())).collect();
            let perms = align::align_states(&fos, reference);
            let mut o = DMatrix::zeros(y, x);
            let mut total = 0.0;
            for l in 0..a {
                if let (Ok(est), Some(perm)) = (&results[l], &perms[l]) {
                    let e = est.relabel(perm);
                    let n = samples[l].max(1) as f64;
                    o += &e.observation * n;
                    total += n;
                    aligned[l] = Some(e);
                }
            }
            o /= total;
            crate::linalg::project_columns(&mut o);
            o
        }
    };

    let uniform_t = DMatrix::from_element(x, x, 1.0 / x as f64);
    let uniform_r = DMatrix::from_element(x, r, 1.0 / r as f64);
    let mut transitions = Vec::with_capacity(a);
    let mut rewards = Vec::with_capacity(a);
    for l in 0..a {
        let fit = aligned[l]
            .as_ref()
            .map(|e| recover_transition(&merged_o, &e.v3, config.rank_tol).map(|t| (t, e.reward.clone())));
        match fit {
            Some(Ok((t, fr))) => {
                transitions.push(t);
                rewards.push(fr);
            }
            other => {
                if let Some(Err(e)) = other {
                    failures[l] = Some(e.to_string());
                    aligned[l] = None;
                }
                transitions.push(uniform_t.clone());
                rewards.push(uniform_r.clone());
            }
        }
    }

    let mut per_action = Vec::with_capacity(a);
    for l in 0..a {
        if failures[l].is_some() {
            per_action.push(bounds::ActionBounds::infinite(samples[l]));
        } else {
            per_action.push(bounds::confidence_widths(samples[l], x, y, delta, &config.constants)?);
        }
    }
    let model = PomdpModel::new(
        alphabet.reward_values.clone(),
        alphabet.r_max,
        transitions,
        merged_o,
        rewards,
    )?;
    Ok(EstimatedModel {
        model,
        bounds: ConfidenceBounds {
            per_action,
            constants: config.constants,
            delta,
        },
        per_action_fo: aligned.into_iter().map(|e| e.map(|e| e.observation)).collect(),
        failures,
    })
}

/// Like [`estimate_from_moments`], from per-action view datasets, each with
/// the policy that produced it. Empty datasets are treated as missing.
pub fn estimate_from_views(
    batches: &[(ViewDataset, &MemorylessPolicy)],
    x: usize,
    delta: f64,
    alphabet: &Alphabet,
    config: &EstimatorConfig,
) -> Result<EstimatedModel, SpectralError> {
    let moments: Vec<Option<MomentBatch<'_>>> = batches
        .iter()
        .map(|(views, policy)| {
            if views.is_empty() {
                Ok(None)
            } else {
                cross_moments(views).map(|moments| {
                    Some(MomentBatch {
                        moments,
                        policy,
                        samples: views.len(),
                    })
                })
            }
        })
        .collect::<Result<_, _>>()?;
    estimate_from_moments(&moments, x, delta, alphabet, config)
}

/// Estimates a model from one trajectory collected under `policy`.
pub fn estimate(
    traj: &Trajectory,
    policy: &MemorylessPolicy,
    x: usize,
    delta: f64,
    alphabet: &Alphabet,
    config: &EstimatorConfig,
) -> Result<EstimatedModel, SpectralError> {
    let views = super::build_all_views(traj, alphabet.actions, alphabet.observations, alphabet.rewards())?;
    let batches: Vec<(ViewDataset, &MemorylessPolicy)> = views.into_iter().map(|v| (v, policy)).collect();
    estimate_from_views(&batches, x, delta, alphabet, config)
}

/// Mean ℓ₁ / ℓ₂ errors against a ground-truth model, after matching the
/// estimate's states to the truth's by observation columns. Only actions with
/// a real estimate contribute to the reward and transition errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrors {
    pub observation_l1: f64,
    pub observation_l2: f64,
    pub reward_l1: Option<f64>,
    pub reward_l2: Option<f64>,
    pub transition_l1: Option<f64>,
    pub transition_l2: Option<f64>,
}

fn lp_errors<'a>(pairs: impl Iterator<Item = (Vec<f64>, Vec<f64>)> + 'a) -> Option<(f64, f64)> {
    let mut n = 0usize;
    let (mut l1, mut l2) = (0.0, 0.0);
    for (a, b) in pairs {
        let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        l1 += d.iter().map(|v| v.abs()).sum::<f64>();
        l2 += d.iter().map(|v| v * v).sum::<f64>().sqrt();
        n += 1;
    }
    (n > 0).then(|| (l1 / n as f64, l2 / n as f64))
}

pub fn estimation_errors(estimated: &EstimatedModel, truth: &PomdpModel) -> Result<EstimationErrors, SpectralError> {
    let est = &estimated.model;
    if est.num_states() != truth.num_states()
        || est.num_observations() != truth.num_observations()
        || est.num_actions() != truth.num_actions()
        || est.num_rewards() != truth.num_rewards()
    {
        return Err(SpectralError::DimensionMismatch(
            "estimated and true models differ in size".into(),
        ));
    }
    let perm = align::match_columns(est.observation(), truth.observation());
    let est = est.permute_states(&perm);
    let x = truth.num_states();
    let col = |m: &DMatrix<f64>, i: usize| m.column(i).iter().copied().collect::<Vec<f64>>();
    let row = |m: &DMatrix<f64>, i: usize| m.row(i).iter().copied().collect::<Vec<f64>>();
    let (o1, o2) = lp_errors((0..x).map(|i| (col(est.observation(), i), col(truth.observation(), i))))
        .expect("at least one state");
    let live: Vec<usize> = (0..truth.num_actions()).filter(|&l| estimated.is_estimated(l)).collect();
    let rew = lp_errors(live.iter().flat_map(|&l| {
        let (e, t) = (est.reward_distribution(l), truth.reward_distribution(l));
        (0..x).map(move |i| (row(e, i), row(t, i)))
    }));
    let tr = lp_errors(live.iter().flat_map(|&l| {
        let (e, t) = (est.transition(l), truth.transition(l));
        (0..x).map(move |i| (row(e, i), row(t, i)))
    }));
    Ok(EstimationErrors {
        observation_l1: o1,
        observation_l2: o2,
        reward_l1: rew.map(|v| v.0),
        reward_l2: rew.map(|v| v.1),
        transition_l1: tr.map(|v| v.0),
        transition_l2: tr.map(|v| v.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundJson {
    /// `null` encodes an infinite width.
    #[serde(rename = "B_O")]
    pub b_o: Option<f64>,
    #[serde(rename = "B_R")]
    pub b_r: Option<f64>,
    #[serde(rename = "B_T")]
    pub b_t: Option<f64>,
    #[serde(rename = "N_l")]
    pub n_l: usize,
}

/// On-disk form: the model schema plus `bounds`, `constants` and `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedModelJson {
    #[serde(flatten)]
    pub model: ModelJson,
    pub bounds: BTreeMap<String, BoundJson>,
    pub constants: ConfidenceConstants,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<Option<String>>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl EstimatedModel {
    pub fn to_json_value(&self) -> EstimatedModelJson {
        let bounds = self
            .bounds
            .per_action
            .iter()
            .enumerate()
            .map(|(l, b)| {
                (
                    l.to_string(),
                    BoundJson {
                        b_o: finite(b.b_o),
                        b_r: finite(b.b_r),
                        b_t: finite(b.b_t),
                        n_l: b.n_l,
                    },
                )
            })
            .collect();
        EstimatedModelJson {
            model: self.model.to_json_value(),
            bounds,
            constants: self.bounds.constants,
            delta: self.bounds.delta,
            failures: self.failures.clone(),
        }
    }

    /// Restores a model and its bounds. Per-action observation estimates are
    /// not part of the file and come back empty.
    pub fn from_json_value(raw: EstimatedModelJson) -> Result<Self, SpectralError> {
        let model = PomdpModel::from_json_value(raw.model)?;
        let a = model.num_actions();
        let inf = |v: Option<f64>| v.unwrap_or(f64::INFINITY);
        let per_action = (0..a)
            .map(|l| {
                raw.bounds
                    .get(&l.to_string())
                    .map(|b| bounds::ActionBounds {
                        b_o: inf(b.b_o),
                        b_r: inf(b.b_r),
                        b_t: inf(b.b_t),
                        n_l: b.n_l,
                    })
                    .ok_or_else(|| SpectralError::DimensionMismatch(format!("no bounds for action {l}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let failures = if raw.failures.len() == a {
            raw.failures
        } else {
            per_action
                .iter()
                .map(|b| b.is_infinite().then(|| "no estimate".to_string()))
                .collect()
        };
        Ok(Self {
            model,
            bounds: ConfidenceBounds {
                per_action,
                constants: raw.constants,
                delta: raw.delta,
            },
            per_action_fo: vec![None; a],
            failures,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("estimate serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), SpectralError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string() + "\n")
            .map_err(|e| SpectralError::Pomdp(PomdpError::Io(path.display().to_string(), e)))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, SpectralError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| SpectralError::Pomdp(PomdpError::Io(path.display().to_string(), e)))?;
        let raw: EstimatedModelJson = serde_json::from_str(&text).map_err(PomdpError::from)?;
        Self::from_json_value(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::random::{random_model, RandomModelSpec};
    use crate::pomdp::{sample_trajectory, InitialState, Step};
    use crate::rng::seeded;
    use crate::spectral::analytic::{population_moments, population_views};

    fn exact_batches<'a>(model: &PomdpModel, policy: &'a MemorylessPolicy) -> Vec<Option<MomentBatch<'a>>> {
        (0..model.num_actions())
            .map(|l| {
                let v = population_views(model, policy, l).unwrap();
                Some(MomentBatch {
                    moments: population_moments(&v),
                    policy,
                    samples: 1000,
                })
            })
            .collect()
    }

    #[test]
    fn exact_moments_recover_the_model() {
        let mut rng = seeded(21);
        let spec = RandomModelSpec::new(2, 2, 3, vec![0.0, 1.0]).well_conditioned(0.1, 0.05);
        let truth = random_model(&spec, &mut rng);
        let policy = MemorylessPolicy::uniform(2, 3);
        let est = estimate_from_moments(
            &exact_batches(&truth, &policy),
            2,
            0.05,
            &Alphabet::of_model(&truth),
            &EstimatorConfig::default(),
        )
        .unwrap();
        let err = estimation_errors(&est, &truth).unwrap();
        assert!(err.observation_l1 < 1e-8, "{err:?}");
        assert!(err.reward_l1.unwrap() < 1e-8 && err.transition_l1.unwrap() < 1e-8, "{err:?}");
    }

    #[test]
    fn missing_action_gets_placeholders() {
        let mut rng = seeded(3);
        let spec = RandomModelSpec::new(2, 2, 3, vec![0.0, 1.0]).well_conditioned(0.1, 0.05);
        let truth = random_model(&spec, &mut rng);
        let policy = MemorylessPolicy::uniform(2, 3);
        let mut batches = exact_batches(&truth, &policy);
        batches[1] = None;
        let est = estimate_from_moments(&batches, 2, 0.05, &Alphabet::of_model(&truth), &Default::default())
            .unwrap();
        assert!(est.bounds.per_action[1].is_infinite());
        assert!(!est.bounds.per_action[0].is_infinite());
        assert!(est.failures[1].is_some() && est.failures[0].is_none());
        assert_eq!(est.model.transition(1)[(0, 0)], 0.5);
    }

    #[test]
    fn minimal_trajectory_degrades_without_error() {
        let steps = vec![
            Step { y: 0, a: 0, m: 0, r: 0.0 },
            Step { y: 1, a: 1, m: 1, r: 1.0 },
            Step { y: 2, a: 0, m: 0, r: 0.0 },
        ];
        let traj = Trajectory { steps, hidden_states: None };
        let alphabet = Alphabet {
            actions: 2,
            observations: 3,
            reward_values: vec![0.0, 1.0],
            r_max: 1.0,
        };
        let est = estimate(&traj, &MemorylessPolicy::uniform(2, 3), 2, 0.1, &alphabet, &Default::default())
            .unwrap();
        assert!(est.bounds.per_action.iter().all(|b| b.is_infinite()));
        assert_eq!(est.bounds.per_action[1].n_l, 1);
    }

    #[test]
    fn json_round_trip_keeps_infinite_widths() {
        let mut rng = seeded(8);
        let spec = RandomModelSpec::new(2, 2, 3, vec![0.0, 1.0]);
        let truth = random_model(&spec, &mut rng);
        let policy = MemorylessPolicy::uniform(2, 3);
        let traj = sample_trajectory(&truth, &policy, 2000, 1, InitialState::Uniform).unwrap();
        let mut est = estimate(&traj, &policy, 2, 0.1, &Alphabet::of_model(&truth), &Default::default()).unwrap();
        est.bounds.per_action[1] = bounds::ActionBounds::infinite(7);
        est.failures[1] = Some("forced".into());
        let text = est.to_json_string();
        assert!(text.contains("\"B_O\": null"));
        let raw: EstimatedModelJson = serde_json::from_str(&text).unwrap();
        let back = EstimatedModel::from_json_value(raw).unwrap();
        assert_eq!(back.model, est.model);
        assert_eq!(back.bounds, est.bounds);
        assert_eq!(back.failures, est.failures);
    }
}
