#![allow(dead_code)]

use std::path::PathBuf;

use spectral_pomdp::pomdp::random::{random_model, RandomModelSpec};
use spectral_pomdp::pomdp::{MemorylessPolicy, PomdpModel};
use spectral_pomdp::rng::seeded;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic_x2y4a2r4.json")
}

pub fn fixture() -> PomdpModel {
    PomdpModel::read_json(fixture_path()).unwrap()
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

/// A random model with every distribution drawn from the flat Dirichlet.
pub fn model(seed: u64, x: usize, a: usize, y: usize, r: usize) -> PomdpModel {
    let rewards = (0..r).map(|k| k as f64).collect();
    random_model(&RandomModelSpec::new(x, a, y, rewards), &mut seeded(seed))
}

pub fn random_policy(seed: u64, a: usize, y: usize, floor: f64) -> MemorylessPolicy {
    let mut rng = seeded(seed);
    let pi = spectral_pomdp::pomdp::random::random_stochastic(&mut rng, y, a).transpose();
    MemorylessPolicy::new(pi, 0.0).unwrap().with_floor(floor).unwrap()
}
