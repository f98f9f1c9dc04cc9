use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EnvError, Environment, StepOutcome};
use crate::rng::{self, SeededRng};

pub const GRID_SIZE: usize = 10;
const APPLES_PER_COLOR: usize = 5;
const REWARD_VALUES: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSet {
    /// N, W, S, E
    Four,
    /// N, NW, W, SW, S, SE, E, NE
    Eight,
}

impl ActionSet {
    pub fn from_count(n: usize) -> Option<Self> {
        match n {
            4 => Some(Self::Four),
            8 => Some(Self::Eight),
            _ => None,
        }
    }

    pub fn len(self) -> usize {
        self.moves().len()
    }

    /// Row/column offsets; row 0 is the northern edge.
    pub fn moves(self) -> &'static [(i32, i32)] {
        match self {
            Self::Four => &[(-1, 0), (0, -1), (1, 0), (0, 1)],
            Self::Eight => &[(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    /// The cell north of the agent: 4 symbols.
    Single,
    /// The NW, N and NE cells: `c_NW + 4·c_N + 16·c_NE`, 64 symbols.
    Triple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AppleColor {
    Green,
    Red,
}

/// What an observed cell contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum CellClass {
    Wall = 0,
    Green = 1,
    Red = 2,
    Nothing = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Apple {
    pub pos: (usize, usize),
    pub color: AppleColor,
    pub life: u8,
}

/// The 10×10 apple gridworld. Each step: move (walls block), eat the apple
/// on the new cell, age the remaining apples, and respawn every eaten or
/// expired apple with its color on a random empty cell.
#[derive(Debug, Clone)]
pub struct GridAppleEnv {
    actions: ActionSet,
    mode: ObservationMode,
    rng: SeededRng,
    agent: (usize, usize),
    apples: Vec<Apple>,
    /// `cells[r * GRID_SIZE + c]` holds the index of the apple on that cell.
    cells: [Option<u8>; GRID_SIZE * GRID_SIZE],
}

impl GridAppleEnv {
    pub fn new(actions: ActionSet, mode: ObservationMode) -> Self {
        let mut env = Self {
            actions,
            mode,
            rng: rng::seeded(0),
            agent: (0, 0),
            apples: Vec::new(),
            cells: [None; GRID_SIZE * GRID_SIZE],
        };
        env.reset(0);
        env
    }

    pub fn agent(&self) -> (usize, usize) {
        self.agent
    }

    pub fn apples(&self) -> &[Apple] {
        &self.apples
    }

    pub fn action_set(&self) -> ActionSet {
        self.actions
    }

    pub fn mode(&self) -> ObservationMode {
        self.mode
    }

    pub fn count(&self, color: AppleColor) -> usize {
        self.apples.iter().filter(|a| a.color == color).count()
    }

    /// Places the agent and an apple layout directly (lifetimes as given).
    pub fn set_layout(&mut self, agent: (usize, usize), apples: Vec<Apple>) {
        assert!(agent.0 < GRID_SIZE && agent.1 < GRID_SIZE);
        self.agent = agent;
        self.cells = [None; GRID_SIZE * GRID_SIZE];
        for (i, a) in apples.iter().enumerate() {
            let k = a.pos.0 * GRID_SIZE + a.pos.1;
            assert!(self.cells[k].is_none(), "two apples on one cell");
            self.cells[k] = Some(i as u8);
        }
        self.apples = apples;
    }

    /// Where the agent ends up after `action`; moving off the grid is a no-op.
    pub fn destination(&self, pos: (usize, usize), action: usize) -> (usize, usize) {
        let (dr, dc) = self.actions.moves()[action];
        let r = pos.0 as i32 + dr;
        let c = pos.1 as i32 + dc;
        if (0..GRID_SIZE as i32).contains(&r) && (0..GRID_SIZE as i32).contains(&c) {
            (r as usize, c as usize)
        } else {
            pos
        }
    }

    pub fn classify(&self, r: i32, c: i32) -> CellClass {
        if !(0..GRID_SIZE as i32).contains(&r) || !(0..GRID_SIZE as i32).contains(&c) {
            return CellClass::Wall;
        }
        match self.cells[r as usize * GRID_SIZE + c as usize] {
            None => CellClass::Nothing,
            Some(i) => match self.apples[i as usize].color {
                AppleColor::Green => CellClass::Green,
                AppleColor::Red => CellClass::Red,
            },
        }
    }

    fn fresh_life(&mut self) -> u8 {
        self.rng.random_range(1..=2)
    }

    fn random_empty_cell(&mut self) -> (usize, usize) {
        loop {
            let r = self.rng.random_range(0..GRID_SIZE);
            let c = self.rng.random_range(0..GRID_SIZE);
            if (r, c) != self.agent && self.cells[r * GRID_SIZE + c].is_none() {
                return (r, c);
            }
        }
    }

    fn rebuild_cells(&mut self) {
        self.cells = [None; GRID_SIZE * GRID_SIZE];
        for (i, a) in self.apples.iter().enumerate() {
            self.cells[a.pos.0 * GRID_SIZE + a.pos.1] = Some(i as u8);
        }
    }

    fn spawn(&mut self, color: AppleColor) {
        let pos = self.random_empty_cell();
        let life = self.fresh_life();
        self.cells[pos.0 * GRID_SIZE + pos.1] = Some(self.apples.len() as u8);
        self.apples.push(Apple { pos, color, life });
    }
}

impl Environment for GridAppleEnv {
    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn num_observations(&self) -> usize {
        match self.mode {
            ObservationMode::Single => 4,
            ObservationMode::Triple => 64,
        }
    }

    fn reward_values(&self) -> &[f64] {
        &REWARD_VALUES
    }

    fn r_max(&self) -> f64 {
        1.0
    }

    fn reset(&mut self, seed: u64) -> usize {
        self.rng = rng::seeded(seed);
        self.agent = (self.rng.random_range(0..GRID_SIZE), self.rng.random_range(0..GRID_SIZE));
        self.apples.clear();
        self.cells = [None; GRID_SIZE * GRID_SIZE];
        for color in [AppleColor::Green, AppleColor::Red] {
            for _ in 0..APPLES_PER_COLOR {
                self.spawn(color);
            }
        }
        self.observation()
    }

    fn observation(&self) -> usize {
        let (r, c) = (self.agent.0 as i32, self.agent.1 as i32);
        let north = self.classify(r - 1, c) as usize;
        match self.mode {
            ObservationMode::Single => north,
            ObservationMode::Triple => {
                self.classify(r - 1, c - 1) as usize + 4 * north + 16 * self.classify(r - 1, c + 1) as usize
            }
        }
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome, EnvError> {
        if action >= self.num_actions() {
            return Err(EnvError::InvalidAction {
                action,
                actions: self.num_actions(),
            });
        }
        self.agent = self.destination(self.agent, action);

        let mut respawn = Vec::new();
        let mut reward_index = 1;
        if let Some(i) = self.cells[self.agent.0 * GRID_SIZE + self.agent.1] {
            let eaten = self.apples.remove(i as usize);
            reward_index = match eaten.color {
                AppleColor::Green => 2,
                AppleColor::Red => 0,
            };
            respawn.push(eaten.color);
        }
        let mut kept = Vec::with_capacity(self.apples.len());
        for mut a in self.apples.drain(..) {
            a.life -= 1;
            if a.life == 0 {
                respawn.push(a.color);
            } else {
                kept.push(a);
            }
        }
        self.apples = kept;
        self.rebuild_cells();
        for color in respawn {
            self.spawn(color);
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward_index,
            reward: REWARD_VALUES[reward_index],
        })
    }
}
