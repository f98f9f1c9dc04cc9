use nalgebra::{DMatrix, DVector};

use super::{MemorylessPolicy, PomdpError, PomdpModel};
use crate::linalg;

/// Relative tolerance used to decide the rank of `P - I`.
const RANK_TOL: f64 = 1e-9;

/// State-to-state chain obtained by marginalizing observations and actions.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    p: DMatrix<f64>,
}

impl InducedChain {
    /// Wraps a row-stochastic matrix (rows within 1e-12 of one, entries ≥ 0).
    pub fn new(p: DMatrix<f64>) -> Result<Self, PomdpError> {
        if !p.is_square() || p.nrows() == 0 {
            return Err(PomdpError::DimensionMismatch("chain matrix must be square".into()));
        }
        for (i, row) in p.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(PomdpError::InvalidDistribution { what: format!("P[{i}]"), sum: s });
            }
        }
        Ok(Self { p })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn num_states(&self) -> usize {
        self.p.nrows()
    }
}

fn check_dims(model: &PomdpModel, policy: &MemorylessPolicy) -> Result<(), PomdpError> {
    if policy.num_actions() != model.num_actions() || policy.num_observations() != model.num_observations() {
        return Err(PomdpError::DimensionMismatch(format!(
            "policy is {}x{}, model has A={} Y={}",
            policy.num_actions(),
            policy.num_observations(),
            model.num_actions(),
            model.num_observations()
        )));
    }
    Ok(())
}

/// `q[(x, a)] = P(a | x) = Σ_y f_O(y|x) f_pi(a|y)`.
pub fn action_given_state(model: &PomdpModel, policy: &MemorylessPolicy) -> Result<DMatrix<f64>, PomdpError> {
    check_dims(model, policy)?;
    // (Y×X)^T (A×Y)^T = X×A
    Ok(model.observation().transpose() * policy.matrix().transpose())
}

/// `f_{T,pi}(x'|x) = Σ_a Σ_y f_pi(a|y) f_O(y|x) f_T(x'|x,a)`.
pub fn induced_transition(model: &PomdpModel, policy: &MemorylessPolicy) -> Result<InducedChain, PomdpError> {
    let q = action_given_state(model, policy)?;
    Ok(InducedChain {
        p: induced_from_action_marginal(model, &q),
    })
}

pub(crate) fn induced_from_action_marginal(model: &PomdpModel, q: &DMatrix<f64>) -> DMatrix<f64> {
    let x = model.num_states();
    let mut p = DMatrix::zeros(x, x);
    for (l, t) in model.transitions().iter().enumerate() {
        for i in 0..x {
            let w = q[(i, l)];
            if w == 0.0 {
                continue;
            }
            for j in 0..x {
                p[(i, j)] += w * t[(i, j)];
            }
        }
    }
    p
}

/// Unique stationary distribution via a direct solve of `(P^T - I) w = 0`
/// augmented with the normalization row.
pub fn stationary_distribution(chain: &InducedChain) -> Result<DVector<f64>, PomdpError> {
    stationary_of_matrix(&chain.p)
}

pub(crate) fn stationary_of_matrix(p: &DMatrix<f64>) -> Result<DVector<f64>, PomdpError> {
    let x = p.nrows();
    if x == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let mut shifted = p - DMatrix::identity(x, x);
    let svals = linalg::singular_values(&shifted);
    let top = svals[0].max(1.0);
    let rank = svals.iter().filter(|&&s| s > RANK_TOL * top).count();
    if rank < x - 1 {
        return Err(PomdpError::ReducibleChain);
    }
    shifted.transpose_mut();
    let mut system = DMatrix::zeros(x + 1, x);
    system.view_mut((0, 0), (x, x)).copy_from(&shifted);
    system.row_mut(x).fill(1.0);
    let mut rhs = DVector::zeros(x + 1);
    rhs[x] = 1.0;
    let svd = system.svd(true, true);
    let mut w = svd
        .solve(&rhs, 1e-14)
        .map_err(|_| PomdpError::ReducibleChain)?;
    linalg::project_to_simplex(w.as_mut_slice());
    // one step of the chain removes the residual left by clipping
    let refined = p.tr_mul(&w);
    let mut refined: DVector<f64> = refined;
    linalg::project_to_simplex(refined.as_mut_slice());
    let res_w = (p.tr_mul(&w) - &w).amax();
    let res_r = (p.tr_mul(&refined) - &refined).amax();
    Ok(if res_r < res_w { refined } else { w })
}

/// `r_pi(x) = Σ_a Σ_y f_O(y|x) f_pi(a|y) rbar(x,a)`.
pub fn policy_mean_reward(model: &PomdpModel, policy: &MemorylessPolicy) -> Result<DVector<f64>, PomdpError> {
    let q = action_given_state(model, policy)?;
    Ok(mean_reward_from_action_marginal(model.mean_reward(), &q))
}

pub(crate) fn mean_reward_from_action_marginal(rbar: &DMatrix<f64>, q: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(rbar.nrows(), |x, _| {
        (0..rbar.ncols()).map(|a| q[(x, a)] * rbar[(x, a)]).sum()
    })
}

/// `eta(pi; M) = Σ_x w_pi(x) r_pi(x)`.
pub fn average_reward(model: &PomdpModel, policy: &MemorylessPolicy) -> Result<f64, PomdpError> {
    let q = action_given_state(model, policy)?;
    eta_from_action_marginal(model, model.mean_reward(), &q)
}

pub(crate) fn eta_from_action_marginal(
    model: &PomdpModel,
    rbar: &DMatrix<f64>,
    q: &DMatrix<f64>,
) -> Result<f64, PomdpError> {
    let p = induced_from_action_marginal(model, q);
    let w = stationary_of_matrix(&p)?;
    let r = mean_reward_from_action_marginal(rbar, q);
    Ok(w.dot(&r))
}
