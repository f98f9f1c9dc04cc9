//! Spectral learning and optimistic control of POMDPs with memoryless policies.

pub mod agents;
pub mod diagnostics;
pub mod env;
pub mod harness;
pub mod linalg;
pub mod planning;
pub mod pomdp;
pub mod rng;
pub mod spectral;
