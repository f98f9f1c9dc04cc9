use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PomdpError;

/// Default per-entry stochasticity floor used by the learners.
pub const DEFAULT_EPS_FLOOR: f64 = 0.02;

/// Stochastic memoryless policy `pi[(a, n)] = f_pi(a | y = e_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorylessPolicy {
    pi: DMatrix<f64>,
    eps_floor: f64,
}

impl MemorylessPolicy {
    /// Validates columns (sum to one within 1e-12) and the floor.
    pub fn new(pi: DMatrix<f64>, eps_floor: f64) -> Result<Self, PomdpError> {
        let a = pi.nrows();
        if a == 0 || pi.ncols() == 0 {
            return Err(PomdpError::InvalidPolicy("empty policy matrix".into()));
        }
        if !(0.0..=1.0 / a as f64).contains(&eps_floor) {
            return Err(PomdpError::InvalidPolicy(format!(
                "eps_floor {eps_floor} outside [0, 1/A]"
            )));
        }
        for (n, col) in pi.column_iter().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(PomdpError::InvalidPolicy(format!("column {n} sums to {s}")));
            }
            if let Some(v) = col.iter().find(|&&v| !(v >= eps_floor - 1e-15)) {
                return Err(PomdpError::InvalidPolicy(format!(
                    "column {n} has entry {v} below floor {eps_floor}"
                )));
            }
        }
        Ok(Self { pi, eps_floor })
    }

    pub fn uniform(actions: usize, observations: usize) -> Self {
        let p = 1.0 / actions as f64;
        Self {
            pi: DMatrix::from_element(actions, observations, p),
            eps_floor: p,
        }
    }

    /// Mass `1 - (A-1)·eps_floor` on `choice[n]`, `eps_floor` elsewhere.
    pub fn deterministic(actions: usize, choice: &[usize], eps_floor: f64) -> Result<Self, PomdpError> {
        if choice.iter().any(|&c| c >= actions) {
            return Err(PomdpError::InvalidPolicy("action index out of range".into()));
        }
        let top = 1.0 - (actions as f64 - 1.0) * eps_floor;
        let pi = DMatrix::from_fn(actions, choice.len(), |a, n| {
            if a == choice[n] {
                top
            } else {
                eps_floor
            }
        });
        Self::new(pi, eps_floor)
    }

    /// Mixes every column with the uniform distribution so that each entry is
    /// at least `eps_floor`.
    pub fn with_floor(&self, eps_floor: f64) -> Result<Self, PomdpError> {
        let a = self.num_actions() as f64;
        let w = (eps_floor * a).min(1.0);
        let pi = self.pi.map(|p| (1.0 - w) * p + w / a);
        let floor = pi.min().min(eps_floor);
        Self::new(pi, floor)
    }

    pub fn num_actions(&self) -> usize {
        self.pi.nrows()
    }

    pub fn num_observations(&self) -> usize {
        self.pi.ncols()
    }

    pub fn eps_floor(&self) -> f64 {
        self.eps_floor
    }

    #[inline]
    pub fn prob(&self, action: usize, observation: usize) -> f64 {
        self.pi[(action, observation)]
    }

    /// A×Y matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn to_json_value(&self) -> PolicyJson {
        PolicyJson {
            pi: self.pi.row_iter().map(|r| r.iter().copied().collect()).collect(),
            eps_floor: self.eps_floor,
        }
    }

    pub fn from_json_value(raw: &PolicyJson) -> Result<Self, PomdpError> {
        let a = raw.pi.len();
        let y = raw.pi.first().map_or(0, Vec::len);
        if raw.pi.iter().any(|r| r.len() != y) {
            return Err(PomdpError::DimensionMismatch("ragged policy matrix".into()));
        }
        Self::new(DMatrix::from_fn(a, y, |i, j| raw.pi[i][j]), raw.eps_floor)
    }
}

/// Serialized policy: `pi[a][n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyJson {
    pub pi: Vec<Vec<f64>>,
    pub eps_floor: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_policy_respects_floor() {
        let p = MemorylessPolicy::deterministic(3, &[2, 0], 0.05).unwrap();
        assert!((p.prob(2, 0) - 0.9).abs() < 1e-15);
        assert_eq!(p.prob(0, 0), 0.05);
        assert!(p.matrix().iter().all(|&v| v >= 0.05));
    }

    #[test]
    fn rejects_floor_violations() {
        let pi = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        assert!(MemorylessPolicy::new(pi.clone(), 0.0).is_ok());
        assert!(MemorylessPolicy::new(pi, 0.1).is_err());
        assert!(MemorylessPolicy::deterministic(2, &[0], 0.6).is_err());
    }

    #[test]
    fn with_floor_lifts_every_entry() {
        let p = MemorylessPolicy::deterministic(4, &[1, 3, 0], 0.0).unwrap();
        let f = p.with_floor(0.02).unwrap();
        assert!(f.matrix().iter().all(|&v| v >= 0.02 - 1e-15));
    }
}
