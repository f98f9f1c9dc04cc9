//! POMDP data model and the exact quantities of a fixed memoryless policy:
//! the induced state chain, its stationary distribution, the average reward,
//! and trajectory simulation.

mod chain;
mod model;
mod policy;
pub mod random;
mod search;
mod trajectory;

pub use chain::{
    action_given_state, average_reward, induced_transition, policy_mean_reward,
    stationary_distribution, InducedChain,
};
pub use model::{ModelJson, PomdpModel};
pub use policy::{MemorylessPolicy, PolicyJson, DEFAULT_EPS_FLOOR};
pub use search::{best_policy_bruteforce, grid_size, MAX_GRID_POINTS};
pub use trajectory::{sample_trajectory, InitialState, ModelSampler, Step, Trajectory, TrajectoryFile};
pub(crate) use trajectory::policy_cdfs;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PomdpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} is not a probability distribution (sum = {sum})")]
    InvalidDistribution { what: String, sum: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("induced chain is reducible: stationary distribution not unique")]
    ReducibleChain,
    #[error("policy grid has {points} points, above the enumeration limit")]
    GridTooLarge { points: u128 },
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
