//! Parameter recovery from the second and third view matrices.

use nalgebra::{DMatrix, DVector};

use super::{MomentSet, SpectralError};
use crate::linalg;
use crate::pomdp::MemorylessPolicy;

/// Weights below this are treated as zero by [`recover_v2`].
pub const MIN_WEIGHT: f64 = 1e-10;
/// Policy entries below this make [`recover_observation`] fail.
pub const MIN_POLICY_MASS: f64 = 1e-12;

/// Recovered view matrices of one action: `v2` is (Y·R)×X, `v3` is Y×X.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewMatrices {
    pub v2: DMatrix<f64>,
    pub v3: DMatrix<f64>,
    /// `P(x_t = i | a_t = l)`.
    pub weights: DVector<f64>,
}

/// Solves `K23 = V2 · diag(w) · V3ᵀ` for `V2`, then projects its columns.
pub fn recover_v2(
    moments: &MomentSet,
    v3: &DMatrix<f64>,
    weights: &DVector<f64>,
    rank_tol: f64,
) -> Result<DMatrix<f64>, SpectralError> {
    let x = v3.ncols();
    if weights.len() != x {
        return Err(SpectralError::DimensionMismatch("weights do not match V3".into()));
    }
    if let Some(&w) = weights.iter().find(|&&w| !(w >= MIN_WEIGHT)) {
        return Err(SpectralError::ZeroWeight(w));
    }
    let inv = linalg::truncated_pinv(&v3.transpose(), x, rank_tol)
        .ok_or(SpectralError::RankDeficient("V3"))?;
    let mut v2 = &moments.k23 * inv;
    for (i, mut col) in v2.column_iter_mut().enumerate() {
        col /= weights[i];
    }
    linalg::project_columns(&mut v2);
    Ok(v2)
}

/// `f_R(m | i, l) = Σ_n V2[(n, m), i]`, returned as an X×R matrix.
pub fn recover_reward(v2: &DMatrix<f64>, observations: usize, rewards: usize) -> DMatrix<f64> {
    assert_eq!(v2.nrows(), observations * rewards);
    let x = v2.ncols();
    let mut fr = DMatrix::from_fn(x, rewards, |i, m| {
        (0..observations).map(|n| v2[(n + observations * m, i)]).sum()
    });
    for i in 0..x {
        let mut row: Vec<f64> = fr.row(i).iter().copied().collect();
        linalg::project_to_simplex(&mut row);
        for (m, v) in row.into_iter().enumerate() {
            fr[(i, m)] = v;
        }
    }
    fr
}

/// Returns `ρ(·, l)` and the per-action observation matrix `f_O^{(l)}` (Y×X).
///
/// `ρ(i, l) = Σ_m Σ_n V2[(n,m),i] / f_π(l|n)` is `1 / P(a = l | x = i)`.
pub fn recover_observation(
    v2: &DMatrix<f64>,
    policy: &MemorylessPolicy,
    l: usize,
) -> Result<(DVector<f64>, DMatrix<f64>), SpectralError> {
    let y = policy.num_observations();
    if v2.nrows() % y != 0 || l >= policy.num_actions() {
        return Err(SpectralError::DimensionMismatch("V2 rows are not a multiple of Y".into()));
    }
    let r = v2.nrows() / y;
    let x = v2.ncols();
    for n in 0..y {
        if !(policy.prob(l, n) >= MIN_POLICY_MASS) {
            return Err(SpectralError::PolicyZeroMass { action: l, observation: n });
        }
    }
    let mut rho = DVector::zeros(x);
    let mut fo = DMatrix::zeros(y, x);
    for i in 0..x {
        for n in 0..y {
            let mass: f64 = (0..r).map(|m| v2[(n + y * m, i)]).sum();
            fo[(n, i)] = mass / policy.prob(l, n);
        }
        rho[i] = fo.column(i).sum();
        if rho[i] > 0.0 {
            let s = rho[i];
            fo.column_mut(i).apply(|v| *v /= s);
        }
    }
    linalg::project_columns(&mut fo);
    Ok((rho, fo))
}

/// `[T]_{i,:,l} = O⁺ [V3]_{:,i}`; rows are simplex-projected. Returns the X×X
/// transition matrix of the action.
pub fn recover_transition(o_hat: &DMatrix<f64>, v3: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>, SpectralError> {
    let x = o_hat.ncols();
    if v3.nrows() != o_hat.nrows() || v3.ncols() != x {
        return Err(SpectralError::DimensionMismatch("V3 does not match O".into()));
    }
    let inv = linalg::truncated_pinv(o_hat, x, rank_tol).ok_or(SpectralError::RankDeficient("O"))?;
    // column i of (O⁺ V3) is row i of T
    let mut t = (inv * v3).transpose();
    for i in 0..x {
        let mut row: Vec<f64> = t.row(i).iter().copied().collect();
        linalg::project_to_simplex(&mut row);
        for (j, v) in row.into_iter().enumerate() {
            t[(i, j)] = v;
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_v2_column_gives_uniform_reward() {
        let v2 = DMatrix::from_element(6, 1, 1.0 / 6.0);
        let fr = recover_reward(&v2, 3, 2);
        assert!((fr[(0, 0)] - 0.5).abs() < 1e-15 && (fr[(0, 1)] - 0.5).abs() < 1e-15);

        let single = DMatrix::from_element(3, 2, 1.0 / 3.0);
        assert_eq!(recover_reward(&single, 3, 1), DMatrix::from_element(2, 1, 1.0));
    }

    #[test]
    fn uniform_policy_gives_rho_equal_to_action_count() {
        let v2 = DMatrix::from_row_slice(4, 2, &[0.1, 0.4, 0.2, 0.1, 0.3, 0.2, 0.4, 0.3]);
        let policy = MemorylessPolicy::uniform(3, 2);
        let (rho, fo) = recover_observation(&v2, &policy, 1).unwrap();
        assert!(rho.iter().all(|&r| (r - 3.0).abs() < 1e-12));
        assert!((fo.column(0).sum() - 1.0).abs() < 1e-12);
        // f_O(n|i) = Σ_m V2[(n,m),i] when the policy is uniform
        assert!((fo[(0, 0)] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_policy_mass_is_rejected() {
        let v2 = DMatrix::from_element(2, 1, 0.5);
        let policy = MemorylessPolicy::deterministic(2, &[0, 1], 0.0).unwrap();
        assert!(matches!(
            recover_observation(&v2, &policy, 1),
            Err(SpectralError::PolicyZeroMass { action: 1, observation: 0 })
        ));
    }

    #[test]
    fn identity_observation_passes_v3_through() {
        let v3 = DMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6]);
        let t = recover_transition(&DMatrix::identity(2, 2), &v3, 1e-8).unwrap();
        assert!(linalg::max_abs_diff(&t, &v3.transpose()) < 1e-15);

        let dup = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(matches!(recover_transition(&dup, &v3, 1e-8), Err(SpectralError::RankDeficient(_))));
    }

    #[test]
    fn zero_weight_and_square_case() {
        let v3 = DMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.2, 0.7]);
        let v2 = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.4, 0.9]);
        let w = DVector::from_vec(vec![0.25, 0.75]);
        let k23 = &v2 * DMatrix::from_diagonal(&w) * v3.transpose();
        let m = MomentSet::from_pairs(DMatrix::zeros(1, 2), DMatrix::zeros(1, 2), k23, Default::default());
        let got = recover_v2(&m, &v3, &w, 1e-8).unwrap();
        assert!(linalg::max_abs_diff(&got, &v2) < 1e-14);

        let zero = DVector::from_vec(vec![0.0, 1.0]);
        assert!(matches!(recover_v2(&m, &v3, &zero, 1e-8), Err(SpectralError::ZeroWeight(_))));
    }
}
