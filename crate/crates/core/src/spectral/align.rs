use nalgebra::DMatrix;

/// Exhaustive matching is used up to this many states; greedy above.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// `Σ_i ‖candidate[:, perm[i]] − reference[:, i]‖₁`.
pub fn assignment_cost(candidate: &DMatrix<f64>, reference: &DMatrix<f64>, perm: &[usize]) -> f64 {
    perm.iter()
        .enumerate()
        .map(|(i, &j)| {
            candidate
                .column(j)
                .iter()
                .zip(reference.column(i).iter())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// Best matching of `candidate` columns onto `reference` columns: the returned
/// `perm` satisfies "reference state `i` corresponds to candidate state `perm[i]`".
pub fn match_columns(candidate: &DMatrix<f64>, reference: &DMatrix<f64>) -> Vec<usize> {
    let x = reference.ncols();
    assert_eq!(candidate.shape(), reference.shape());
    if x <= EXHAUSTIVE_LIMIT {
        let mut best = (f64::INFINITY, Vec::new());
        for p in permutations(x) {
            let c = assignment_cost(candidate, reference, &p);
            if c < best.0 {
                best = (c, p);
            }
        }
        return best.1;
    }
    // greedy: repeatedly take the cheapest remaining (reference, candidate) pair
    let cost = DMatrix::from_fn(x, x, |i, j| {
        candidate
            .column(j)
            .iter()
            .zip(reference.column(i).iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    });
    let mut perm = vec![usize::MAX; x];
    let mut used = vec![false; x];
    for _ in 0..x {
        let mut pick = (f64::INFINITY, 0, 0);
        for i in (0..x).filter(|&i| perm[i] == usize::MAX) {
            for j in (0..x).filter(|&j| !used[j]) {
                if cost[(i, j)] < pick.0 {
                    pick = (cost[(i, j)], i, j);
                }
            }
        }
        perm[pick.1] = pick.2;
        used[pick.2] = true;
    }
    perm
}

/// Aligns every available per-action observation estimate to the one of
/// action `reference`. Missing estimates get `None`; the reference gets the
/// identity.
pub fn align_states(per_action_fo: &[Option<DMatrix<f64>>], reference: usize) -> Vec<Option<Vec<usize>>> {
    let refm = per_action_fo[reference]
        .as_ref()
        .expect("reference action must have an estimate");
    per_action_fo
        .iter()
        .enumerate()
        .map(|(l, fo)| {
            fo.as_ref().map(|m| {
                if l == reference {
                    (0..m.ncols()).collect()
                } else {
                    match_columns(m, refm)
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_swapped_columns() {
        let a = DMatrix::from_row_slice(3, 3, &[0.8, 0.1, 0.2, 0.1, 0.7, 0.2, 0.1, 0.2, 0.6]);
        assert_eq!(match_columns(&a, &a), vec![0, 1, 2]);
        // candidate column k = reference column known[k]
        let known = [2, 0, 1];
        let b = DMatrix::from_fn(3, 3, |n, k| a[(n, known[k])]);
        let perm = match_columns(&b, &a);
        for i in 0..3 {
            assert_eq!(known[perm[i]], i);
        }
        let aligned = align_states(&[Some(a.clone()), None, Some(b)], 0);
        assert_eq!(aligned[0], Some(vec![0, 1, 2]));
        assert_eq!(aligned[1], None);
        assert_eq!(aligned[2], Some(perm));
    }

    #[test]
    fn greedy_path_recovers_a_clear_permutation() {
        let x = 8;
        let a = DMatrix::from_fn(x, x, |n, i| if n == i { 0.9 } else { 0.1 / (x - 1) as f64 });
        let shift: Vec<usize> = (0..x).map(|k| (k + 3) % x).collect();
        let b = DMatrix::from_fn(x, x, |n, k| a[(n, shift[k])]);
        let perm = match_columns(&b, &a);
        for i in 0..x {
            assert_eq!(shift[perm[i]], i);
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
