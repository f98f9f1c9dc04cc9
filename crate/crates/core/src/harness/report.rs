use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::AgentKind;
use super::run::RunSummary;
use super::HarnessError;

pub const STEP_HEADER: &str = "run_id,agent,seed,t,epoch,action,observation,reward,cum_reward,regret";
pub const SUMMARY_HEADER: &str = "agent,seed,checkpoint_t,avg_reward,regret";

/// Mean and spread of one agent's runs at every checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentAggregate {
    pub agent: AgentKind,
    pub seeds: usize,
    pub avg_reward_mean: Vec<f64>,
    pub avg_reward_std: Vec<f64>,
    pub regret_mean: Option<Vec<f64>>,
    pub regret_std: Option<Vec<f64>>,
    pub final_avg_reward_mean: f64,
    pub tail_avg_reward_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub eta_plus: Option<f64>,
    pub horizon: usize,
    pub checkpoints: Vec<usize>,
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<AgentAggregate>,
}

impl Report {
    pub fn aggregate(&self, agent: AgentKind) -> Option<&AgentAggregate> {
        self.aggregates.iter().find(|a| a.agent == agent)
    }

    pub fn runs_of(&self, agent: AgentKind) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.agent == agent)
    }
}

/// About `count` logarithmically spaced times in `1..=horizon`, always ending
/// at `horizon`.
pub fn checkpoint_times(horizon: usize, count: usize) -> Vec<usize> {
    assert!(horizon >= 1 && count >= 1);
    let lo = (horizon.min(100) as f64).ln();
    let hi = (horizon as f64).ln();
    let mut times: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
            ((lo + f * (hi - lo)).exp().round() as usize).clamp(1, horizon)
        })
        .collect();
    times.push(horizon);
    times.sort_unstable();
    times.dedup();
    times
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn column_stats(series: &[&Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let len = series[0].len();
    (0..len)
        .map(|i| mean_std(&series.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .unzip()
}

/// Per-agent aggregation, in agent-name order.
pub fn aggregate_runs(runs: &[RunSummary]) -> Vec<AgentAggregate> {
    let mut by_agent: BTreeMap<&str, Vec<&RunSummary>> = BTreeMap::new();
    for r in runs {
        by_agent.entry(r.agent.name()).or_default().push(r);
    }
    by_agent
        .into_values()
        .map(|group| {
            let rewards: Vec<&Vec<f64>> = group.iter().map(|r| &r.checkpoint_avg_reward).collect();
            let (avg_reward_mean, avg_reward_std) = column_stats(&rewards);
            let regrets: Option<Vec<&Vec<f64>>> = group.iter().map(|r| r.checkpoint_regret.as_ref()).collect();
            let (regret_mean, regret_std) = match regrets {
                Some(r) => {
                    let (m, s) = column_stats(&r);
                    (Some(m), Some(s))
                }
                None => (None, None),
            };
            let finals: Vec<f64> = group.iter().map(|r| r.final_avg_reward).collect();
            let tails: Vec<f64> = group.iter().map(|r| r.tail_avg_reward).collect();
            AgentAggregate {
                agent: group[0].agent,
                seeds: group.len(),
                avg_reward_mean,
                avg_reward_std,
                regret_mean,
                regret_std,
                final_avg_reward_mean: mean_std(&finals).0,
                tail_avg_reward_mean: mean_std(&tails).0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCsvRow {
    pub run_id: String,
    pub agent: String,
    pub seed: u64,
    pub t: usize,
    pub epoch: usize,
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
    pub cum_reward: f64,
    pub regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCsvRow {
    pub agent: String,
    pub seed: u64,
    pub checkpoint_t: usize,
    pub avg_reward: f64,
    pub regret: Option<f64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

/// `<out>.summary.csv` next to the step log `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.csv")
}

/// `<out>.json` next to the step log `out`.
pub fn json_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Writes the subsampled step log to `path` and the checkpoint summary next
/// to it. Rows are ordered by (agent, seed, t). Returns the summary path.
pub fn emit_csv(report: &Report, path: &Path) -> Result<PathBuf, HarnessError> {
    let mut runs: Vec<&RunSummary> = report.runs.iter().collect();
    runs.sort_by(|a, b| (a.agent.name(), a.seed).cmp(&(b.agent.name(), b.seed)));

    let mut w = csv_writer(path)?;
    for r in &runs {
        for row in &r.rows {
            w.serialize(StepCsvRow {
                run_id: r.run_id.clone(),
                agent: r.agent.name().to_string(),
                seed: r.seed,
                t: row.t,
                epoch: row.epoch,
                action: row.action,
                observation: row.observation,
                reward: row.reward,
                cum_reward: row.cum_reward,
                regret: row.regret,
            })
            .map_err(|e| io_err(path, e))?;
        }
    }
    if runs.iter().all(|r| r.rows.is_empty()) {
        w.write_record(STEP_HEADER.split(',')).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;

    let spath = summary_path(path);
    let mut w = csv_writer(&spath)?;
    for r in &runs {
        for (i, &t) in report.checkpoints.iter().enumerate() {
            w.serialize(SummaryCsvRow {
                agent: r.agent.name().to_string(),
                seed: r.seed,
                checkpoint_t: t,
                avg_reward: r.checkpoint_avg_reward[i],
                regret: r.checkpoint_regret.as_ref().map(|g| g[i]),
            })
            .map_err(|e| io_err(&spath, e))?;
        }
    }
    w.flush().map_err(|e| io_err(&spath, e))?;
    Ok(spath)
}

pub fn write_report_json(report: &Report, path: &Path) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(report).map_err(|e| io_err(path, e))?;
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| io_err(path, e))
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryCsvRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| io_err(path, e))?.iter().map(String::from).collect();
    if header.join(",") != SUMMARY_HEADER {
        return Err(HarnessError::Config(format!(
            "{} does not have the summary header `{SUMMARY_HEADER}`",
            path.display()
        )));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(|e| io_err(path, e))
}

/// One line of an aggregated summary: an agent at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub agent: String,
    pub checkpoint_t: usize,
    pub seeds: usize,
    pub avg_reward_mean: f64,
    pub avg_reward_std: f64,
    pub regret_mean: Option<f64>,
    pub regret_std: Option<f64>,
}

/// Aggregates summary rows by (agent, checkpoint), sorted by both.
pub fn aggregate_summary_rows(rows: &[SummaryCsvRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, usize), Vec<&SummaryCsvRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.agent.as_str(), r.checkpoint_t)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((agent, t), g)| {
            let (avg_reward_mean, avg_reward_std) = mean_std(&g.iter().map(|r| r.avg_reward).collect::<Vec<_>>());
            let regrets: Option<Vec<f64>> = g.iter().map(|r| r.regret).collect();
            let (regret_mean, regret_std) = match regrets {
                Some(v) => {
                    let (m, s) = mean_std(&v);
                    (Some(m), Some(s))
                }
                None => (None, None),
            };
            AggregateRow {
                agent: agent.to_string(),
                checkpoint_t: t,
                seeds: g.len(),
                avg_reward_mean,
                avg_reward_std,
                regret_mean,
                regret_std,
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_are_sorted_and_end_at_the_horizon() {
        let c = checkpoint_times(200_000, 20);
        assert_eq!(*c.last().unwrap(), 200_000);
        assert_eq!(c[0], 100);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(checkpoint_times(1, 5), vec![1]);
        assert_eq!(checkpoint_times(50, 1), vec![50]);
    }

    #[test]
    fn mean_std_arithmetic() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn summary_rows_aggregate_by_agent_and_time() {
        let row = |agent: &str, seed, t, r, g| SummaryCsvRow {
            agent: agent.into(),
            seed,
            checkpoint_t: t,
            avg_reward: r,
            regret: g,
        };
        let rows = vec![
            row("random", 0, 10, 1.0, Some(2.0)),
            row("random", 1, 10, 3.0, Some(4.0)),
            row("random", 0, 20, 1.0, None),
            row("qlearning", 0, 10, 0.5, Some(1.0)),
        ];
        let agg = aggregate_summary_rows(&rows);
        assert_eq!(agg.len(), 3);
        assert_eq!((agg[0].agent.as_str(), agg[0].checkpoint_t), ("qlearning", 10));
        assert_eq!(agg[1].avg_reward_mean, 2.0);
        assert_eq!(agg[1].regret_mean, Some(3.0));
        assert_eq!(agg[2].regret_mean, None);
    }
}
