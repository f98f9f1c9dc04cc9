//! Whitening and the robust tensor power method.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SpectralError;
use crate::linalg::{self, Tensor3};
use crate::rng::{self, standard_normal};

/// Power-iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TpmConfig {
    /// Random restarts per extracted component.
    pub restarts: usize,
    /// Iterations per restart (and for the final refinement).
    pub iters: usize,
    /// Stop a run once successive iterates differ by less than this.
    pub tol: f64,
    /// A component is rejected when `‖T(I,φ,φ) − λφ‖` exceeds this.
    pub max_residual: f64,
}

impl Default for TpmConfig {
    fn default() -> Self {
        Self {
            restarts: 25,
            iters: 100,
            tol: 1e-10,
            max_residual: 1e-2,
        }
    }
}

/// Whitening matrix from the top-`x` eigenpairs: `W = U Λ^{-1/2}`, so that
/// `Wᵀ M2 W = I`.
pub fn whiten(m2: &DMatrix<f64>, x: usize, rank_tol: f64) -> Result<DMatrix<f64>, SpectralError> {
    if !m2.is_square() || x == 0 || x > m2.nrows() {
        return Err(SpectralError::RankDeficient("M2"));
    }
    let sym = (m2 + m2.transpose()) * 0.5;
    let (values, vectors) = linalg::sorted_symmetric_eigen(&sym);
    let top = values[0];
    let last = values[x - 1];
    if !(top > 0.0) || !(last > rank_tol * top) {
        return Err(SpectralError::RankDeficient("M2"));
    }
    let mut w = DMatrix::zeros(m2.nrows(), x);
    for c in 0..x {
        w.set_column(c, &(vectors.column(c) / values[c].sqrt()));
    }
    Ok(w)
}

/// `M3(W, W, W)`, averaged over mode permutations.
pub fn whitened_tensor(m3: &Tensor3, w: &DMatrix<f64>) -> Tensor3 {
    m3.multilinear(w, w, w).symmetrized()
}

fn normalize(v: &mut DVector<f64>) -> f64 {
    let n = v.norm();
    if n > 0.0 {
        *v /= n;
    }
    n
}

fn power_iterate(t: &Tensor3, start: DVector<f64>, iters: usize, tol: f64) -> DVector<f64> {
    let mut theta = start;
    for _ in 0..iters {
        let mut next = t.contract_two(&theta);
        if normalize(&mut next) == 0.0 {
            return next;
        }
        // odd-order tensors: fix the sign so that λ = T(θ,θ,θ) stays positive
        if t.contract_three(&next) < 0.0 {
            next = -next;
        }
        let delta = (&next - &theta).norm();
        theta = next;
        if delta < tol {
            break;
        }
    }
    theta
}

/// Extracts `components` eigenpairs of a symmetric cubical tensor by power
/// iteration with random restarts and deflation. Pairs come out in the order
/// they were extracted (largest eigenvalue first).
pub fn tensor_power_method(
    tensor: &Tensor3,
    components: usize,
    config: &TpmConfig,
    seed: u64,
) -> Result<Vec<(f64, DVector<f64>)>, SpectralError> {
    let [d, d1, d2] = tensor.dims();
    if d != d1 || d != d2 || components > d {
        return Err(SpectralError::DimensionMismatch(format!(
            "cannot extract {components} components from a {d}x{d1}x{d2} tensor"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut deflated = tensor.clone();
    let mut pairs = Vec::with_capacity(components);
    let scale = tensor.frobenius_norm().max(f64::MIN_POSITIVE);
    for _ in 0..components {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for _ in 0..config.restarts.max(1) {
            let mut start = DVector::from_fn(d, |_, _| standard_normal(&mut rng));
            normalize(&mut start);
            let theta = power_iterate(&deflated, start, config.iters, config.tol);
            let lambda = deflated.contract_three(&theta);
            if best.as_ref().is_none_or(|(b, _)| lambda > *b) {
                best = Some((lambda, theta));
            }
        }
        let (_, theta) = best.expect("at least one restart");
        let theta = power_iterate(&deflated, theta, config.iters, config.tol * 1e-2);
        let lambda = deflated.contract_three(&theta);
        let residual = (deflated.contract_two(&theta) - &theta * lambda).norm();
        if !(lambda > 1e-12 * scale) || !(residual <= config.max_residual) {
            return Err(SpectralError::ConvergenceFailure { lambda, residual });
        }
        let phi: Vec<f64> = theta.iter().copied().collect();
        deflated.add_rank_one(-lambda, &phi, &phi, &phi);
        pairs.push((lambda, theta));
    }
    Ok(pairs)
}

/// Column `i` of the unprojected third view is `λ_i (Wᵀ)⁺ φ_i`; the matching
/// mixture weight is `1/λ_i²`.
pub fn unwhiten(
    w: &DMatrix<f64>,
    pairs: &[(f64, DVector<f64>)],
) -> Result<(DMatrix<f64>, DVector<f64>), SpectralError> {
    let back = linalg::pinv(&w.transpose());
    let mut v3 = DMatrix::zeros(w.nrows(), pairs.len());
    let mut weights = DVector::zeros(pairs.len());
    for (i, (lambda, phi)) in pairs.iter().enumerate() {
        if !(*lambda > 0.0) {
            return Err(SpectralError::NegativeEigenvalue(*lambda));
        }
        v3.set_column(i, &(&back * phi * *lambda));
        weights[i] = 1.0 / (lambda * lambda);
    }
    Ok((v3, weights))
}

/// [`unwhiten`] followed by simplex projection of the columns and
/// renormalization of the weights.
pub fn unwhiten_and_recover_v3(
    w: &DMatrix<f64>,
    pairs: &[(f64, DVector<f64>)],
) -> Result<(DMatrix<f64>, DVector<f64>), SpectralError> {
    let (mut v3, mut weights) = unwhiten(w, pairs)?;
    linalg::project_columns(&mut v3);
    linalg::project_to_simplex(weights.as_mut_slice());
    Ok((v3, weights))
}
