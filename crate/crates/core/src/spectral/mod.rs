//! Multi-view spectral estimation of POMDP parameters from one trajectory.
//!
//! For every action `l` the interior steps where `l` was played give three
//! conditionally independent views of the hidden state. Their empirical
//! cross-moments are symmetrized toward the third view, whitened and
//! decomposed by a tensor power method; the resulting view matrices yield the
//! reward, observation and transition models of that action.

pub mod align;
pub mod analytic;
pub mod bounds;
mod decompose;
mod estimate;
mod moments;
mod recover;
mod views;

pub use align::{align_states, match_columns};
pub use bounds::{confidence_widths, ActionBounds, ConfidenceBounds, ConfidenceConstants};
pub use decompose::{
    tensor_power_method, unwhiten, unwhiten_and_recover_v3, whiten, whitened_tensor, TpmConfig,
};
pub use estimate::{
    estimate, estimate_action, estimate_from_moments, estimate_from_views, estimation_errors,
    ActionEstimate, Alphabet, EstimatedModel, EstimatedModelJson, EstimationErrors, EstimatorConfig,
    MomentBatch,
};
pub use moments::{cross_moments, symmetrization_maps, symmetrize, MomentSet, TripleMass, MAX_PAIR_CELLS};
pub use recover::{
    recover_observation, recover_reward, recover_transition, recover_v2, ViewMatrices, MIN_POLICY_MASS,
    MIN_WEIGHT,
};
pub use views::{build_all_views, build_views, encode_view1, encode_view2, view_dims, ViewDataset};

use thiserror::Error;

use crate::pomdp::PomdpError;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("action {action} has no interior samples")]
    EmptyViewSet { action: usize },
    #[error("trajectory of length {0} is too short (need at least 3 steps)")]
    TrajectoryTooShort(usize),
    #[error("{0} is numerically rank deficient")]
    RankDeficient(&'static str),
    #[error("tensor power method did not converge (lambda = {lambda:e}, residual = {residual:e})")]
    ConvergenceFailure { lambda: f64, residual: f64 },
    #[error("non-positive tensor eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("mixture weight {0:e} is too small to invert")]
    ZeroWeight(f64),
    #[error("policy never plays action {action} after observation {observation}")]
    PolicyZeroMass { action: usize, observation: usize },
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Pomdp(#[from] PomdpError),
}
