use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::PomdpError;

const SUM_TOL: f64 = 1e-12;

/// A finite POMDP with discrete reward symbols.
///
/// * `transitions[l][(i, j)] = f_T(j | i, l)` (one X×X row-stochastic matrix per action)
/// * `observations[(n, i)] = f_O(n | i)` (Y×X, column-stochastic)
/// * `rewards[l][(i, m)] = f_R(m | i, l)` (one X×R row-stochastic matrix per action)
///
/// The mean-reward table is derived from `rewards` and `reward_values` and is
/// never set independently.
#[derive(Debug, Clone, PartialEq)]
pub struct PomdpModel {
    states: usize,
    actions: usize,
    observation_count: usize,
    r_max: f64,
    reward_values: Vec<f64>,
    transitions: Vec<DMatrix<f64>>,
    observations: DMatrix<f64>,
    rewards: Vec<DMatrix<f64>>,
    mean_reward: DMatrix<f64>,
}

impl PomdpModel {
    pub fn new(
        reward_values: Vec<f64>,
        r_max: f64,
        transitions: Vec<DMatrix<f64>>,
        observations: DMatrix<f64>,
        rewards: Vec<DMatrix<f64>>,
    ) -> Result<Self, PomdpError> {
        let actions = transitions.len();
        let states = observations.ncols();
        let observation_count = observations.nrows();
        let r = reward_values.len();
        if actions == 0 || states == 0 || observation_count == 0 || r == 0 {
            return Err(PomdpError::DimensionMismatch(
                "model needs at least one state, action, observation and reward".into(),
            ));
        }
        if rewards.len() != actions {
            return Err(PomdpError::DimensionMismatch(format!(
                "{} transition matrices but {} reward matrices",
                actions,
                rewards.len()
            )));
        }
        for (l, t) in transitions.iter().enumerate() {
            if t.shape() != (states, states) {
                return Err(PomdpError::DimensionMismatch(format!(
                    "T[{l}] is {:?}, expected {states}x{states}",
                    t.shape()
                )));
            }
            for i in 0..states {
                check_distribution(t.row(i).iter().copied(), || format!("T[{l}][{i}]"))?;
            }
        }
        for i in 0..states {
            check_distribution(observations.column(i).iter().copied(), || format!("O[:][{i}]"))?;
        }
        for (l, fr) in rewards.iter().enumerate() {
            if fr.shape() != (states, r) {
                return Err(PomdpError::DimensionMismatch(format!(
                    "FR[{l}] is {:?}, expected {states}x{r}",
                    fr.shape()
                )));
            }
            for i in 0..states {
                check_distribution(fr.row(i).iter().copied(), || format!("FR[{l}][{i}]"))?;
            }
        }
        let top = reward_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !r_max.is_finite() || r_max < top {
            return Err(PomdpError::InvalidModel(format!(
                "r_max = {r_max} is below the largest reward value {top}"
            )));
        }
        let mean_reward = DMatrix::from_fn(states, actions, |i, l| {
            (0..r).map(|m| reward_values[m] * rewards[l][(i, m)]).sum()
        });
        Ok(Self {
            states,
            actions,
            observation_count,
            r_max,
            reward_values,
            transitions,
            observations,
            rewards,
            mean_reward,
        })
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    pub fn num_actions(&self) -> usize {
        self.actions
    }

    pub fn num_observations(&self) -> usize {
        self.observation_count
    }

    pub fn num_rewards(&self) -> usize {
        self.reward_values.len()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Smallest reward value; lower bound of every mean reward.
    pub fn r_min(&self) -> f64 {
        self.reward_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn reward_values(&self) -> &[f64] {
        &self.reward_values
    }

    /// X×X transition matrix of action `l`.
    pub fn transition(&self, l: usize) -> &DMatrix<f64> {
        &self.transitions[l]
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    /// Y×X observation matrix.
    pub fn observation(&self) -> &DMatrix<f64> {
        &self.observations
    }

    /// X×R reward-symbol distribution of action `l`.
    pub fn reward_distribution(&self, l: usize) -> &DMatrix<f64> {
        &self.rewards[l]
    }

    pub fn reward_distributions(&self) -> &[DMatrix<f64>] {
        &self.rewards
    }

    /// Mean reward table, X×A.
    pub fn mean_reward(&self) -> &DMatrix<f64> {
        &self.mean_reward
    }

    /// Returns a copy with a replaced mean-reward table. Only the planner's
    /// optimistic surrogate uses this; the reward distributions are left as is.
    pub(crate) fn with_mean_reward(&self, mean_reward: DMatrix<f64>) -> Self {
        assert_eq!(mean_reward.shape(), self.mean_reward.shape());
        Self {
            mean_reward,
            ..self.clone()
        }
    }

    /// Relabels hidden states: new state `k` is old state `perm[k]`.
    pub fn permute_states(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.states);
        let x = self.states;
        let transitions = self
            .transitions
            .iter()
            .map(|t| DMatrix::from_fn(x, x, |i, j| t[(perm[i], perm[j])]))
            .collect();
        let observations =
            DMatrix::from_fn(self.observation_count, x, |n, i| self.observations[(n, perm[i])]);
        let rewards = self
            .rewards
            .iter()
            .map(|fr| DMatrix::from_fn(x, fr.ncols(), |i, m| fr[(perm[i], m)]))
            .collect();
        Self::new(
            self.reward_values.clone(),
            self.r_max,
            transitions,
            observations,
            rewards,
        )
        .expect("permutation preserves validity")
        .with_mean_reward(DMatrix::from_fn(x, self.actions, |i, l| {
            self.mean_reward[(perm[i], l)]
        }))
    }

    pub fn to_json_value(&self) -> ModelJson {
        ModelJson {
            x: self.states,
            a: self.actions,
            y: self.observation_count,
            r: self.reward_values.len(),
            r_max: self.r_max,
            reward_values: self.reward_values.clone(),
            t: self.transitions.iter().map(matrix_rows).collect(),
            o: matrix_rows(&self.observations),
            fr: self.rewards.iter().map(matrix_rows).collect(),
        }
    }

    pub fn from_json_value(raw: ModelJson) -> Result<Self, PomdpError> {
        if raw.r != raw.reward_values.len() {
            return Err(PomdpError::DimensionMismatch(format!(
                "R = {} but {} reward values",
                raw.r,
                raw.reward_values.len()
            )));
        }
        if raw.t.len() != raw.a || raw.fr.len() != raw.a {
            return Err(PomdpError::DimensionMismatch(format!(
                "A = {} but T has {} and FR has {} slices",
                raw.a,
                raw.t.len(),
                raw.fr.len()
            )));
        }
        let transitions = raw
            .t
            .iter()
            .map(|rows| rows_to_matrix(rows, raw.x, raw.x, "T"))
            .collect::<Result<Vec<_>, _>>()?;
        let observations = rows_to_matrix(&raw.o, raw.y, raw.x, "O")?;
        let rewards = raw
            .fr
            .iter()
            .map(|rows| rows_to_matrix(rows, raw.x, raw.r, "FR"))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(raw.reward_values, raw.r_max, transitions, observations, rewards)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, PomdpError> {
        let raw: ModelJson = serde_json::from_str(s)?;
        Self::from_json_value(raw)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self, PomdpError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PomdpError::Io(path.display().to_string(), e))?;
        Self::from_json_str(&text)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), PomdpError> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string() + "\n")
            .map_err(|e| PomdpError::Io(path.display().to_string(), e))
    }
}

/// On-disk model schema: `T[l][i][j]`, `O[n][i]`, `FR[l][i][m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    #[serde(rename = "X")]
    pub x: usize,
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "Y")]
    pub y: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub r_max: f64,
    pub reward_values: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "O")]
    pub o: Vec<Vec<f64>>,
    #[serde(rename = "FR")]
    pub fr: Vec<Vec<Vec<f64>>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_to_matrix(
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DMatrix<f64>, PomdpError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(PomdpError::DimensionMismatch(format!(
            "{what} slice must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn check_distribution(
    values: impl Iterator<Item = f64>,
    label: impl Fn() -> String,
) -> Result<(), PomdpError> {
    let mut sum = 0.0;
    for v in values {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(PomdpError::InvalidDistribution { what: label(), sum: f64::NAN });
        }
        sum += v;
    }
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(PomdpError::InvalidDistribution { what: label(), sum });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_state_model() -> PomdpModel {
        let t0 = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let t1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.6, 0.4]);
        let o = DMatrix::from_row_slice(3, 2, &[0.7, 0.1, 0.2, 0.3, 0.1, 0.6]);
        let fr0 = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.1, 0.9]);
        let fr1 = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.4, 0.6]);
        PomdpModel::new(vec![0.0, 2.0], 2.0, vec![t0, t1], o, vec![fr0, fr1]).unwrap()
    }

    #[test]
    fn mean_reward_is_derived_from_reward_symbols() {
        let m = two_state_model();
        assert!((m.mean_reward()[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((m.mean_reward()[(1, 0)] - 1.8).abs() < 1e-15);
        assert!((m.mean_reward()[(0, 1)] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_stochastic_slices() {
        let t = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, 0.2, 0.8]);
        let o = DMatrix::identity(2, 2);
        let fr = DMatrix::from_element(2, 1, 1.0);
        let err = PomdpModel::new(vec![1.0], 1.0, vec![t], o, vec![fr]).unwrap_err();
        assert!(matches!(err, PomdpError::InvalidDistribution { .. }));
    }

    #[test]
    fn rejects_r_max_below_rewards() {
        let t = DMatrix::identity(1, 1);
        let o = DMatrix::identity(1, 1);
        let fr = DMatrix::from_element(1, 1, 1.0);
        assert!(PomdpModel::new(vec![3.0], 2.0, vec![t], o, vec![fr]).is_err());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let m = two_state_model();
        let back = PomdpModel::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn permuting_twice_with_a_swap_is_identity() {
        let m = two_state_model();
        let p = m.permute_states(&[1, 0]);
        assert_eq!(p.observation()[(0, 0)], m.observation()[(0, 1)]);
        assert_eq!(p.permute_states(&[1, 0]), m);
    }
}
