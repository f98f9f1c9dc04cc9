use nalgebra::DMatrix;
use rand::Rng;

use super::PomdpModel;
use crate::linalg;
use crate::rng::random_distribution;

/// Shape and conditioning requirements for [`random_model`].
#[derive(Debug, Clone)]
pub struct RandomModelSpec {
    pub states: usize,
    pub actions: usize,
    pub observations: usize,
    pub reward_values: Vec<f64>,
    /// Reject draws whose observation matrix has a smaller X-th singular value.
    pub min_observation_sv: f64,
    /// Reject draws where some transition matrix has a smaller X-th singular value.
    pub min_transition_sv: f64,
}

impl RandomModelSpec {
    pub fn new(states: usize, actions: usize, observations: usize, reward_values: Vec<f64>) -> Self {
        Self {
            states,
            actions,
            observations,
            reward_values,
            min_observation_sv: 0.0,
            min_transition_sv: 0.0,
        }
    }

    pub fn well_conditioned(mut self, observation_sv: f64, transition_sv: f64) -> Self {
        self.min_observation_sv = observation_sv;
        self.min_transition_sv = transition_sv;
        self
    }
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    let s = linalg::singular_values(m);
    s.last().copied().unwrap_or(0.0)
}

/// Draws every distribution from the flat Dirichlet, rejecting draws that
/// violate the conditioning requirements. Panics after 100 000 rejections.
pub fn random_model<R: Rng + ?Sized>(spec: &RandomModelSpec, rng: &mut R) -> PomdpModel {
    let (x, a, y, r) = (spec.states, spec.actions, spec.observations, spec.reward_values.len());
    let r_max = spec.reward_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..100_000 {
        let mut o = DMatrix::zeros(y, x);
        for i in 0..x {
            let d = random_distribution(rng, y);
            o.column_mut(i).copy_from_slice(&d);
        }
        if x > 1 && sigma_min(&o) < spec.min_observation_sv {
            continue;
        }
        let transitions: Vec<DMatrix<f64>> = (0..a).map(|_| random_stochastic(rng, x, x)).collect();
        if x > 1 && transitions.iter().any(|t| sigma_min(t) < spec.min_transition_sv) {
            continue;
        }
        let rewards = (0..a).map(|_| random_stochastic(rng, x, r)).collect();
        return PomdpModel::new(spec.reward_values.clone(), r_max, transitions, o, rewards)
            .expect("random model is valid");
    }
    panic!("could not draw a model satisfying {spec:?}");
}

/// Random row-stochastic matrix.
pub fn random_stochastic<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        let d = random_distribution(rng, cols);
        for (j, v) in d.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}
