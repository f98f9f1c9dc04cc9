use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::agents::{QLearningConfig, SmUcrlConfig, UcrlMdpConfig};
use crate::planning::PlannerConfig;
use crate::pomdp::DEFAULT_EPS_FLOOR;
use crate::spectral::EstimatorConfig;

/// Prefix of environment variables that override config keys, e.g.
/// `SMUCRL__EXPERIMENT__HORIZON=5000` or `SMUCRL__ESTIMATOR__CONSTANTS__C_O=0.1`.
pub const ENV_PREFIX: &str = "SMUCRL__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "smucrl")]
    SmUcrl,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "qlearning")]
    QLearning,
    #[serde(rename = "ucrl-mdp")]
    UcrlMdp,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SmUcrl => "smucrl",
            Self::Random => "random",
            Self::QLearning => "qlearning",
            Self::UcrlMdp => "ucrl-mdp",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "synthetic")]
    Synthetic,
    #[serde(rename = "grid-single")]
    GridSingle,
    #[serde(rename = "grid-triple")]
    GridTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub agents: Vec<AgentKind>,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Hidden-state count given to SM-UCRL.
    pub x_guess: usize,
    #[serde(default = "default_delta_prime")]
    pub delta_prime: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Step-log subsampling stride.
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    /// Number of logarithmically spaced checkpoints.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Reference value for regret. Computed by grid search when the
    /// environment has ground truth and this is unset.
    #[serde(default)]
    pub eta_plus: Option<f64>,
    #[serde(default = "default_grid_step")]
    pub eta_grid_step: f64,
}

fn default_delta_prime() -> f64 {
    0.05
}

fn default_stride() -> usize {
    100
}

fn default_checkpoints() -> usize {
    20
}

fn default_grid_step() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    /// Gridworld action count (4 or 8).
    #[serde(default = "default_actions")]
    pub actions: usize,
    /// Model JSON for `synthetic`; relative paths resolve against the config file.
    #[serde(default)]
    pub model_file: Option<PathBuf>,
    /// Stream offset mixed into every run seed.
    #[serde(default)]
    pub seed: u64,
}

fn default_actions() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmUcrlSection {
    pub bootstrap: usize,
    pub eps_floor: f64,
}

impl Default for SmUcrlSection {
    fn default() -> Self {
        Self {
            bootstrap: 50,
            eps_floor: DEFAULT_EPS_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub env: EnvSection,
    #[serde(default)]
    pub smucrl: SmUcrlSection,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub qlearning: QLearningConfig,
    #[serde(default)]
    pub ucrl_mdp: UcrlMdpConfig,
}

impl ExperimentConfig {
    /// Parses TOML text, applies `SMUCRL__*` overrides from `vars`, and
    /// validates. Relative model paths resolve against `base_dir`.
    pub fn from_toml_str(
        text: &str,
        base_dir: Option<&Path>,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        apply_overrides(&mut table, vars)?;
        let mut config: Self = table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        if let (Some(dir), Some(file)) = (base_dir, config.env.model_file.as_mut()) {
            if file.is_relative() {
                *file = dir.join(&*file);
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file, with overrides from the process environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, path.parent(), std::env::vars())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let e = &self.experiment;
        let bad = |key: &str, msg: String| Err(HarnessError::Invalid { key: key.to_string(), msg });
        if e.horizon == 0 {
            return bad("experiment.horizon", "must be at least 1".into());
        }
        if e.seeds.is_empty() {
            return bad("experiment.seeds", "must list at least one seed".into());
        }
        if e.agents.is_empty() {
            return bad("experiment.agents", "must name at least one agent".into());
        }
        if e.x_guess == 0 {
            return bad("experiment.x_guess", "must be at least 1".into());
        }
        if !(e.delta_prime > 0.0 && e.delta_prime < 1.0) {
            return bad("experiment.delta_prime", format!("{} is not in (0, 1)", e.delta_prime));
        }
        if e.stride == 0 {
            return bad("experiment.stride", "must be at least 1".into());
        }
        if e.checkpoints == 0 {
            return bad("experiment.checkpoints", "must be at least 1".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &e.agents {
            if !seen.insert(*a) {
                return bad("experiment.agents", format!("{a} is listed twice"));
            }
        }
        match self.env.kind {
            EnvKind::Synthetic if self.env.model_file.is_none() => {
                return bad("env.model_file", "required for the synthetic environment".into());
            }
            EnvKind::GridSingle | EnvKind::GridTriple if !matches!(self.env.actions, 4 | 8) => {
                return bad("env.actions", format!("{} is not 4 or 8", self.env.actions));
            }
            _ => {}
        }
        if !(self.smucrl.eps_floor >= 0.0) {
            return bad("smucrl.eps_floor", "must be nonnegative".into());
        }
        let q = &self.qlearning;
        if !(0.0..1.0).contains(&q.gamma) {
            return bad("qlearning.gamma", format!("{} is not in [0, 1)", q.gamma));
        }
        if !(0.0..=1.0).contains(&q.epsilon) {
            return bad("qlearning.epsilon", format!("{} is not in [0, 1]", q.epsilon));
        }
        if !(self.ucrl_mdp.delta > 0.0 && self.ucrl_mdp.delta < 1.0) {
            return bad("ucrl_mdp.delta", format!("{} is not in (0, 1)", self.ucrl_mdp.delta));
        }
        Ok(())
    }

    /// The SM-UCRL configuration assembled from its sections.
    pub fn smucrl_config(&self) -> SmUcrlConfig {
        SmUcrlConfig {
            bootstrap: self.smucrl.bootstrap,
            eps_floor: self.smucrl.eps_floor,
            delta_prime: self.experiment.delta_prime,
            estimator: self.estimator.clone(),
            planner: self.planner.clone(),
        }
    }
}

/// Parses an override value as a TOML value, falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub(crate) fn apply_overrides(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<(), HarnessError> {
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_lowercase).collect();
        if path.iter().any(String::is_empty) {
            return Err(HarnessError::Config(format!("malformed override variable {key}")));
        }
        let (last, parents) = path.split_last().expect("nonempty path");
        let mut node = &mut *table;
        for p in parents {
            let entry = node
                .entry(p.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            node = entry
                .as_table_mut()
                .ok_or_else(|| HarnessError::Config(format!("{key}: {p} is not a section")))?;
        }
        node.insert(last.clone(), parse_value(&raw));
    }
    Ok(())
}
