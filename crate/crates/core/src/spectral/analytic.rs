//! Population (infinite-sample) views and moments of a known model run under
//! a fixed policy from its stationary distribution. Used to check the
//! estimator against exact answers and to measure sampling error.

use nalgebra::{DMatrix, DVector};

use super::{view_dims, MomentSet, SpectralError, TripleMass};
use crate::pomdp::{action_given_state, induced_transition, stationary_distribution, MemorylessPolicy, PomdpModel};

/// Exact view matrices of one action: `v1` is (A·Y·R)×X, `v2` is (Y·R)×X,
/// `v3` is Y×X, and `weights[i] = P(x_t = i | a_t = l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationViews {
    pub action: usize,
    pub v1: DMatrix<f64>,
    pub v2: DMatrix<f64>,
    pub v3: DMatrix<f64>,
    pub weights: DVector<f64>,
    /// `P(a_t = l)` in the stationary regime.
    pub action_rate: f64,
}

pub fn population_views(
    model: &PomdpModel,
    policy: &MemorylessPolicy,
    l: usize,
) -> Result<PopulationViews, SpectralError> {
    let (x, a, y, r) = (
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.num_rewards(),
    );
    if l >= a {
        return Err(SpectralError::DimensionMismatch(format!("action {l} out of range")));
    }
    let omega = stationary_distribution(&induced_transition(model, policy)?)?;
    let q = action_given_state(model, policy)?;
    let o = model.observation();
    let [d1, d2, _] = view_dims(a, y, r);

    let mut v1 = DMatrix::zeros(d1, x);
    for i in 0..x {
        if omega[i] <= 0.0 {
            continue;
        }
        for k in 0..a {
            let t = model.transition(k);
            let fr = model.reward_distribution(k);
            for n in 0..y {
                for m in 0..r {
                    let mass: f64 = (0..x)
                        .map(|j| omega[j] * o[(n, j)] * policy.prob(k, n) * fr[(j, m)] * t[(j, i)])
                        .sum();
                    v1[(k + a * n + a * y * m, i)] = mass / omega[i];
                }
            }
        }
    }

    let fr = model.reward_distribution(l);
    let mut v2 = DMatrix::zeros(d2, x);
    for i in 0..x {
        if q[(i, l)] <= 0.0 {
            continue;
        }
        for n in 0..y {
            for m in 0..r {
                v2[(n + y * m, i)] = policy.prob(l, n) * o[(n, i)] * fr[(i, m)] / q[(i, l)];
            }
        }
    }

    let v3 = o * model.transition(l).transpose();
    let joint: Vec<f64> = (0..x).map(|i| omega[i] * q[(i, l)]).collect();
    let rate: f64 = joint.iter().sum();
    let weights = DVector::from_iterator(x, joint.iter().map(|&p| p / rate));
    Ok(PopulationViews {
        action: l,
        v1,
        v2,
        v3,
        weights,
        action_rate: rate,
    })
}

/// `K_ab = V_a diag(w) V_bᵀ` and the triple mass `Σ_i w_i V1[:,i] ⊗ V2[:,i] ⊗ V3[:,i]`.
pub fn population_moments(views: &PopulationViews) -> MomentSet {
    let d = DMatrix::from_diagonal(&views.weights);
    let k12 = &views.v1 * &d * views.v2.transpose();
    let k13 = &views.v1 * &d * views.v3.transpose();
    let k23 = &views.v2 * &d * views.v3.transpose();
    let (d1, d2, d3) = (views.v1.nrows(), views.v2.nrows(), views.v3.nrows());
    let x = views.weights.len();
    let mut entries = Vec::new();
    // lexicographic (v1, v2, v3) order, as the symmetrization step expects
    for s1 in 0..d1 {
        for s2 in 0..d2 {
            for s3 in 0..d3 {
                let p: f64 = (0..x)
                    .map(|i| views.weights[i] * views.v1[(s1, i)] * views.v2[(s2, i)] * views.v3[(s3, i)])
                    .sum();
                if p != 0.0 {
                    entries.push((s1, s2, s3, p));
                }
            }
        }
    }
    MomentSet::from_pairs(k12, k13, k23, TripleMass { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::random::{random_model, RandomModelSpec};
    use crate::rng::seeded;

    #[test]
    fn views_are_column_stochastic_and_moments_sum_to_one() {
        let mut rng = seeded(4);
        let spec = RandomModelSpec::new(3, 2, 4, vec![0.0, 1.0, 2.0]);
        let model = random_model(&spec, &mut rng);
        let policy = MemorylessPolicy::uniform(2, 4);
        for l in 0..2 {
            let v = population_views(&model, &policy, l).unwrap();
            for m in [&v.v1, &v.v2, &v.v3] {
                for c in m.column_iter() {
                    assert!((c.sum() - 1.0).abs() < 1e-12);
                }
            }
            assert!((v.weights.sum() - 1.0).abs() < 1e-12);
            let k = population_moments(&v);
            assert!((k.k12.sum() - 1.0).abs() < 1e-12);
            let total: f64 = k.triples.entries.iter().map(|e| e.3).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
