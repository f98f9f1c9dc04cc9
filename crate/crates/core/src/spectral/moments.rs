use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{SpectralError, ViewDataset};
use crate::linalg::{self, Tensor3};

/// Largest `dim(view 1) · dim(view 2)` accepted for dense pairwise moments.
pub const MAX_PAIR_CELLS: usize = 1 << 26;

/// Joint mass of `(v1, v2, v3)` triples, sorted by index for reproducible sums.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripleMass {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

/// Pairwise cross-moments `K_ab[s][s'] = P(v_a = s, v_b = s')` plus the joint
/// triple mass (needed for the third moment), and, once symmetrized, `M2`/`M3`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub k12: DMatrix<f64>,
    pub k13: DMatrix<f64>,
    pub k21: DMatrix<f64>,
    pub k23: DMatrix<f64>,
    pub k31: DMatrix<f64>,
    pub k32: DMatrix<f64>,
    pub triples: TripleMass,
    pub m2: Option<DMatrix<f64>>,
    pub m3: Option<Tensor3>,
}

impl MomentSet {
    /// Builds the set from the three independent pairs; transposed pairs are
    /// filled by transposition.
    pub fn from_pairs(k12: DMatrix<f64>, k13: DMatrix<f64>, k23: DMatrix<f64>, triples: TripleMass) -> Self {
        Self {
            k21: k12.transpose(),
            k31: k13.transpose(),
            k32: k23.transpose(),
            k12,
            k13,
            k23,
            triples,
            m2: None,
            m3: None,
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.k12.nrows(), self.k12.ncols(), self.k13.ncols()]
    }
}

/// Empirical pairwise moments and triple frequencies.
pub fn cross_moments(views: &ViewDataset) -> Result<MomentSet, SpectralError> {
    let n = views.len();
    if n == 0 {
        return Err(SpectralError::EmptyViewSet { action: views.action });
    }
    let [d1, d2, d3] = views.dims();
    if d1.saturating_mul(d2) > MAX_PAIR_CELLS {
        return Err(SpectralError::DimensionMismatch(format!(
            "view dimensions {d1}x{d2} exceed the dense moment cap"
        )));
    }
    let mut counts: BTreeMap<(usize, usize, usize), u64> = BTreeMap::new();
    for t in 0..n {
        *counts.entry((views.v1[t], views.v2[t], views.v3[t])).or_default() += 1;
    }
    let inv = 1.0 / n as f64;
    let mut k12 = DMatrix::zeros(d1, d2);
    let mut k13 = DMatrix::zeros(d1, d3);
    let mut k23 = DMatrix::zeros(d2, d3);
    let mut entries = Vec::with_capacity(counts.len());
    for (&(a, b, c), &cnt) in &counts {
        let p = cnt as f64 * inv;
        k12[(a, b)] += p;
        k13[(a, c)] += p;
        k23[(b, c)] += p;
        entries.push((a, b, c, p));
    }
    Ok(MomentSet::from_pairs(k12, k13, k23, TripleMass { entries }))
}

/// The two linear maps that carry views 1 and 2 onto view 3:
/// `C1 = K32 · K12⁺` and `C2 = K31 · K21⁺`, with rank-`x` truncated inverses.
pub fn symmetrization_maps(
    moments: &MomentSet,
    x: usize,
    rank_tol: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>), SpectralError> {
    let k12_inv = linalg::truncated_pinv(&moments.k12, x, rank_tol)
        .ok_or(SpectralError::RankDeficient("K12"))?;
    let k21_inv = linalg::truncated_pinv(&moments.k21, x, rank_tol)
        .ok_or(SpectralError::RankDeficient("K21"))?;
    Ok((&moments.k32 * k12_inv, &moments.k31 * k21_inv))
}

/// Symmetrizes views 1 and 2 toward view 3 and fills `M2` (Y×Y) and `M3` (Y×Y×Y).
pub fn symmetrize(moments: &MomentSet, x: usize, rank_tol: f64) -> Result<MomentSet, SpectralError> {
    let (c1, c2) = symmetrization_maps(moments, x, rank_tol)?;
    let d3 = moments.k13.ncols();
    let mut m2 = &c1 * &moments.k12 * c2.transpose();
    m2 = (&m2 + m2.transpose()) * 0.5;

    // group the triple mass by (v1, v2) so each pair's outer product is formed once
    let mut m3 = Tensor3::zeros(d3, d3, d3);
    let mut slice = vec![0.0; d3];
    let mut entries = moments.triples.entries.iter().peekable();
    while let Some(&(a, b, c, p)) = entries.next() {
        slice.iter_mut().for_each(|v| *v = 0.0);
        slice[c] += p;
        while let Some(&&(a2, b2, c2, p2)) = entries.peek() {
            if a2 != a || b2 != b {
                break;
            }
            slice[c2] += p2;
            entries.next();
        }
        let u: Vec<f64> = c1.column(a).iter().copied().collect();
        let v: Vec<f64> = c2.column(b).iter().copied().collect();
        m3.add_rank_one(1.0, &u, &v, &slice);
    }

    let mut out = moments.clone();
    out.m2 = Some(m2);
    out.m3 = Some(m3);
    Ok(out)
}
