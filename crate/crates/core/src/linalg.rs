//! Small dense linear-algebra helpers shared by the estimators.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. The third-order arrays
//! used by the moment method live in [`Tensor3`], a flat row-major buffer.

use nalgebra::{DMatrix, DVector};

/// Dense third-order array stored row-major: `(i, j, k) -> data[(i * d1 + j) * d2 + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Self {
            dims: [d0, d1, d2],
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] += value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Adds `scale * a ⊗ b ⊗ c`.
    pub fn add_rank_one(&mut self, scale: f64, a: &[f64], b: &[f64], c: &[f64]) {
        debug_assert_eq!(a.len(), self.dims[0]);
        debug_assert_eq!(b.len(), self.dims[1]);
        debug_assert_eq!(c.len(), self.dims[2]);
        for (i, &ai) in a.iter().enumerate() {
            let si = scale * ai;
            if si == 0.0 {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                let sij = si * bj;
                if sij == 0.0 {
                    continue;
                }
                let base = self.offset(i, j, 0);
                for (k, &ck) in c.iter().enumerate() {
                    self.data[base + k] += sij * ck;
                }
            }
        }
    }

    /// Multilinear map `T(A, B, C)[p,q,r] = Σ T[i,j,k] A[i,p] B[j,q] C[k,r]`.
    pub fn multilinear(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Tensor3 {
        assert_eq!(a.nrows(), self.dims[0]);
        assert_eq!(b.nrows(), self.dims[1]);
        assert_eq!(c.nrows(), self.dims[2]);
        let (p, q, r) = (a.ncols(), b.ncols(), c.ncols());
        // contract the last mode first, then the middle, then the first
        let mut t1 = Tensor3::zeros(self.dims[0], self.dims[1], r);
        for i in 0..self.dims[0] {
            for j in 0..self.dims[1] {
                for k in 0..self.dims[2] {
                    let v = self.get(i, j, k);
                    if v == 0.0 {
                        continue;
                    }
                    for rr in 0..r {
                        t1.add(i, j, rr, v * c[(k, rr)]);
                    }
                }
            }
        }
        let mut t2 = Tensor3::zeros(self.dims[0], q, r);
        for i in 0..self.dims[0] {
            for j in 0..self.dims[1] {
                for qq in 0..q {
                    let bq = b[(j, qq)];
                    if bq == 0.0 {
                        continue;
                    }
                    for rr in 0..r {
                        t2.add(i, qq, rr, t1.get(i, j, rr) * bq);
                    }
                }
            }
        }
        let mut out = Tensor3::zeros(p, q, r);
        for i in 0..self.dims[0] {
            for pp in 0..p {
                let ap = a[(i, pp)];
                if ap == 0.0 {
                    continue;
                }
                for qq in 0..q {
                    for rr in 0..r {
                        out.add(pp, qq, rr, t2.get(i, qq, rr) * ap);
                    }
                }
            }
        }
        out
    }

    /// `T(I, u, u)` for a cubical tensor.
    pub fn contract_two(&self, u: &DVector<f64>) -> DVector<f64> {
        let d = self.dims[0];
        let mut out = DVector::zeros(d);
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                let uj = u[j];
                let base = self.offset(i, j, 0);
                let mut inner = 0.0;
                for k in 0..d {
                    inner += self.data[base + k] * u[k];
                }
                s += uj * inner;
            }
            out[i] = s;
        }
        out
    }

    /// `T(u, u, u)` for a cubical tensor.
    pub fn contract_three(&self, u: &DVector<f64>) -> f64 {
        self.contract_two(u).dot(u)
    }

    /// Average over all six mode permutations. Only valid for cubical tensors.
    pub fn symmetrized(&self) -> Tensor3 {
        let d = self.dims[0];
        assert!(self.dims.iter().all(|&x| x == d), "tensor is not cubical");
        let mut out = Tensor3::zeros(d, d, d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let s = self.get(i, j, k)
                        + self.get(i, k, j)
                        + self.get(j, i, k)
                        + self.get(j, k, i)
                        + self.get(k, i, j)
                        + self.get(k, j, i);
                    out.set(i, j, k, s / 6.0);
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank with a relative tolerance on the largest singular value.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * top).count()
}

/// Pseudo-inverse keeping only the top `rank` singular triplets.
///
/// Returns `None` when the `rank`-th singular value falls below
/// `rel_tol * sigma_1` (or the matrix has fewer than `rank` singular values).
pub fn truncated_pinv(m: &DMatrix<f64>, rank: usize, rel_tol: f64) -> Option<DMatrix<f64>> {
    let (r, c) = m.shape();
    if rank == 0 || rank > r.min(c) {
        return None;
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref()?;
    let vt = svd.v_t.as_ref()?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let top = svd.singular_values[order[0]];
    let last = svd.singular_values[order[rank - 1]];
    if !(top > 0.0) || last < rel_tol * top {
        return None;
    }
    let mut out = DMatrix::zeros(c, r);
    for &idx in order.iter().take(rank) {
        let s = svd.singular_values[idx];
        let ui = u.column(idx);
        let vi = vt.row(idx);
        // out += v_i * u_i^T / s
        for a in 0..c {
            let va = vi[a] / s;
            if va == 0.0 {
                continue;
            }
            for b in 0..r {
                out[(a, b)] += va * ui[b];
            }
        }
    }
    Some(out)
}

/// Full pseudo-inverse with the usual `max(r, c) * eps * sigma_1` cutoff.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eps = f64::EPSILON * m.nrows().max(m.ncols()) as f64 * spectral_norm(m).max(1e-300);
    m.clone()
        .pseudo_inverse(eps)
        .unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.nrows()))
}

/// Clip negatives to zero and renormalize; an all-zero vector becomes uniform.
pub fn project_to_simplex(v: &mut [f64]) {
    let mut total = 0.0;
    for x in v.iter_mut() {
        if !(*x > 0.0) {
            *x = 0.0;
        }
        total += *x;
    }
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    } else if !v.is_empty() {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Simplex-projects every column of `m` in place.
pub fn project_columns(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        project_to_simplex(col.as_mut_slice());
    }
}

/// Symmetric eigendecomposition sorted by descending eigenvalue.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), n);
    for (c, &i) in order.iter().enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
