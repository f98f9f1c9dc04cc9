use super::{EnvError, Environment, StepOutcome};
use crate::pomdp::{InitialState, ModelSampler, PomdpModel};
use crate::rng::{self, SeededRng};
use rand::Rng;

/// A known POMDP run as an environment. The hidden state is exposed for
/// diagnostics only.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    model: PomdpModel,
    sampler: ModelSampler,
    init: InitialState,
    rng: SeededRng,
    state: usize,
    obs: usize,
}

impl SyntheticEnv {
    /// The first hidden state is uniform unless `init` says otherwise.
    /// `InitialState::Stationary` is interpreted under the uniform policy.
    pub fn new(model: PomdpModel, init: InitialState) -> Self {
        let sampler = ModelSampler::new(&model);
        let mut env = Self {
            model,
            sampler,
            init,
            rng: rng::seeded(0),
            state: 0,
            obs: 0,
        };
        env.reset(0);
        env
    }

    pub fn model(&self) -> &PomdpModel {
        &self.model
    }
}

impl Environment for SyntheticEnv {
    fn num_actions(&self) -> usize {
        self.model.num_actions()
    }

    fn num_observations(&self) -> usize {
        self.model.num_observations()
    }

    fn reward_values(&self) -> &[f64] {
        self.model.reward_values()
    }

    fn r_max(&self) -> f64 {
        self.model.r_max()
    }

    fn reset(&mut self, seed: u64) -> usize {
        self.rng = rng::seeded(seed);
        let x = self.model.num_states();
        self.state = match self.init {
            InitialState::Fixed(s) if s < x => s,
            InitialState::Stationary => {
                let uniform = crate::pomdp::MemorylessPolicy::uniform(self.num_actions(), self.num_observations());
                crate::pomdp::induced_transition(&self.model, &uniform)
                    .and_then(|c| crate::pomdp::stationary_distribution(&c))
                    .map(|w| rng::categorical(&mut self.rng, w.as_slice()))
                    .unwrap_or_else(|_| self.rng.random_range(0..x))
            }
            _ => self.rng.random_range(0..x),
        };
        self.obs = self.sampler.observe(&mut self.rng, self.state);
        self.obs
    }

    fn observation(&self) -> usize {
        self.obs
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if action >= self.num_actions() {
            return Err(EnvError::InvalidAction {
                action,
                actions: self.num_actions(),
            });
        }
        let (m, r, next) = self.sampler.act(&mut self.rng, self.state, action);
        self.state = next;
        self.obs = self.sampler.observe(&mut self.rng, next);
        Ok(StepOutcome {
            observation: self.obs,
            reward_index: m,
            reward: r,
        })
    }

    fn hidden_state(&self) -> Option<usize> {
        Some(self.state)
    }

    fn ground_truth(&self) -> Option<&PomdpModel> {
        Some(&self.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn deterministic_model_forces_the_sequence() {
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let o = DMatrix::identity(2, 2);
        let fr = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let model = PomdpModel::new(vec![0.0, 1.0], 1.0, vec![t], o, vec![fr]).unwrap();
        let mut env = SyntheticEnv::new(model, InitialState::Fixed(0));
        assert_eq!(env.reset(5), 0);
        for k in 0..6 {
            let s = env.step(0).unwrap();
            assert_eq!(s.reward_index, k % 2);
            assert_eq!(s.observation, (k + 1) % 2);
        }
        assert_eq!(env.step(1), Err(EnvError::InvalidAction { action: 1, actions: 1 }));
    }

    #[test]
    fn same_seed_same_stream() {
        let model = crate::pomdp::random::random_model(
            &crate::pomdp::random::RandomModelSpec::new(2, 2, 3, vec![0.0, 1.0]),
            &mut rng::seeded(1),
        );
        let mut a = SyntheticEnv::new(model.clone(), InitialState::Uniform);
        let mut b = SyntheticEnv::new(model, InitialState::Uniform);
        assert_eq!(a.reset(9), b.reset(9));
        for t in 0..200 {
            assert_eq!(a.step(t % 2).unwrap(), b.step(t % 2).unwrap());
        }
    }
}
