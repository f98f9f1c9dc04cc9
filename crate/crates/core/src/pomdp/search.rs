use nalgebra::DMatrix;

use super::{chain, MemorylessPolicy, PomdpError, PomdpModel};

/// Upper limit on the number of grid policies `best_policy_bruteforce` evaluates.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

/// Lattice points of the probability simplex in `dim` coordinates with
/// resolution `1/k`, in lexicographic order of the integer compositions.
fn simplex_lattice(dim: usize, k: usize) -> Vec<Vec<f64>> {
    fn rec(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in (0..=left).rev() {
            prefix.push(v);
            rec(dim - 1, left - v, prefix, out);
            prefix.pop();
        }
    }
    let mut ints = Vec::new();
    rec(dim, k, &mut Vec::new(), &mut ints);
    ints.into_iter()
        .map(|c| c.into_iter().map(|v| v as f64 / k as f64).collect())
        .collect()
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of policies on the grid with the given step.
pub fn grid_size(actions: usize, observations: usize, grid_step: f64) -> Result<u128, PomdpError> {
    let k = grid_resolution(grid_step)?;
    let per_obs = binomial((k + actions - 1) as u128, (actions - 1) as u128);
    Ok(per_obs.checked_pow(observations as u32).unwrap_or(u128::MAX))
}

fn grid_resolution(grid_step: f64) -> Result<usize, PomdpError> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(PomdpError::InvalidArgument(format!("grid step {grid_step} outside (0, 1]")));
    }
    Ok((1.0 / grid_step).round().max(1.0) as usize)
}

/// Exhaustive search over the policy grid. Policies whose induced chain is
/// reducible are skipped; ties keep the first grid point in enumeration order.
pub fn best_policy_bruteforce(model: &PomdpModel, grid_step: f64) -> Result<(MemorylessPolicy, f64), PomdpError> {
    let a = model.num_actions();
    let y = model.num_observations();
    let k = grid_resolution(grid_step)?;
    let size = grid_size(a, y, grid_step)?;
    if size > MAX_GRID_POINTS {
        return Err(PomdpError::GridTooLarge { points: size });
    }
    let lattice = simplex_lattice(a, k);
    let c = lattice.len();
    let o = model.observation();
    let x = model.num_states();

    // contribution of observation n choosing lattice point p to q[(state, action)]
    let mut counter = vec![0usize; y];
    let mut q = DMatrix::zeros(x, a);
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        q.fill(0.0);
        for (n, &pi) in counter.iter().enumerate() {
            let p = &lattice[pi];
            for s in 0..x {
                let w = o[(n, s)];
                if w == 0.0 {
                    continue;
                }
                for (l, &pl) in p.iter().enumerate() {
                    q[(s, l)] += w * pl;
                }
            }
        }
        if let Ok(eta) = chain::eta_from_action_marginal(model, model.mean_reward(), &q) {
            if best.as_ref().is_none_or(|(_, b)| eta > *b) {
                best = Some((counter.clone(), eta));
            }
        }
        // odometer increment, last observation fastest
        let mut pos = y;
        loop {
            if pos == 0 {
                let (choice, eta) = best.ok_or(PomdpError::ReducibleChain)?;
                let pi = DMatrix::from_fn(a, y, |l, n| lattice[choice[n]][l]);
                return Ok((MemorylessPolicy::new(pi, 0.0)?, eta));
            }
            pos -= 1;
            counter[pos] += 1;
            if counter[pos] < c {
                break;
            }
            counter[pos] = 0;
        }
    }
}
