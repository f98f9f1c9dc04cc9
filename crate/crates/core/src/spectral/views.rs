use super::SpectralError;
use crate::pomdp::Trajectory;

/// The three views collected at every interior step where action `l` is played.
///
/// * view 1: `(a_{t-1}, y_{t-1}, r_{t-1})` encoded as `k + A·n + A·Y·m`
/// * view 2: `(y_t, r_t)` encoded as `n + Y·m`
/// * view 3: `y_{t+1}`
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDataset {
    pub action: usize,
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub v3: Vec<usize>,
    dims: [usize; 3],
}

impl ViewDataset {
    pub fn empty(action: usize, actions: usize, observations: usize, rewards: usize) -> Self {
        Self {
            action,
            v1: Vec::new(),
            v2: Vec::new(),
            v3: Vec::new(),
            dims: view_dims(actions, observations, rewards),
        }
    }

    /// Number of triples, `N(l)`.
    pub fn len(&self) -> usize {
        self.v1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v1.is_empty()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn push(&mut self, v1: usize, v2: usize, v3: usize) {
        debug_assert!(v1 < self.dims[0] && v2 < self.dims[1] && v3 < self.dims[2]);
        self.v1.push(v1);
        self.v2.push(v2);
        self.v3.push(v3);
    }

    /// Appends another dataset of the same action and alphabet.
    pub fn extend(&mut self, other: &ViewDataset) {
        assert_eq!(self.dims, other.dims);
        self.v1.extend_from_slice(&other.v1);
        self.v2.extend_from_slice(&other.v2);
        self.v3.extend_from_slice(&other.v3);
    }
}

/// Encoding dimensions `(A·Y·R, Y·R, Y)`.
pub fn view_dims(actions: usize, observations: usize, rewards: usize) -> [usize; 3] {
    [actions * observations * rewards, observations * rewards, observations]
}

#[inline]
pub fn encode_view1(prev_action: usize, prev_obs: usize, prev_reward: usize, actions: usize, observations: usize) -> usize {
    prev_action + actions * prev_obs + actions * observations * prev_reward
}

#[inline]
pub fn encode_view2(obs: usize, reward: usize, observations: usize) -> usize {
    obs + observations * reward
}

/// Collects the triples for action `l` over the interior steps of `traj`.
pub fn build_views(
    traj: &Trajectory,
    l: usize,
    actions: usize,
    observations: usize,
    rewards: usize,
) -> Result<ViewDataset, SpectralError> {
    if traj.len() < 3 {
        return Err(SpectralError::TrajectoryTooShort(traj.len()));
    }
    traj.validate(actions, observations, rewards)?;
    let mut views = ViewDataset::empty(l, actions, observations, rewards);
    for w in traj.steps.windows(3) {
        let (prev, cur, next) = (&w[0], &w[1], &w[2]);
        if cur.a != l {
            continue;
        }
        views.push(
            encode_view1(prev.a, prev.y, prev.m, actions, observations),
            encode_view2(cur.y, cur.m, observations),
            next.y,
        );
    }
    if views.is_empty() {
        return Err(SpectralError::EmptyViewSet { action: l });
    }
    Ok(views)
}

/// Views for every action in one pass; actions never played are returned empty.
pub fn build_all_views(
    traj: &Trajectory,
    actions: usize,
    observations: usize,
    rewards: usize,
) -> Result<Vec<ViewDataset>, SpectralError> {
    if traj.len() < 3 {
        return Err(SpectralError::TrajectoryTooShort(traj.len()));
    }
    traj.validate(actions, observations, rewards)?;
    let mut out: Vec<ViewDataset> = (0..actions)
        .map(|l| ViewDataset::empty(l, actions, observations, rewards))
        .collect();
    for w in traj.steps.windows(3) {
        let (prev, cur, next) = (&w[0], &w[1], &w[2]);
        out[cur.a].push(
            encode_view1(prev.a, prev.y, prev.m, actions, observations),
            encode_view2(cur.y, cur.m, observations),
            next.y,
        );
    }
    Ok(out)
}
