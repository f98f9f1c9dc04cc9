//! Experiment orchestration: config files, multi-seed runs, aggregated
//! reports and the command-line front end.

mod cli;
mod config;
mod report;
mod run;

pub use cli::cli_main;
pub use config::{AgentKind, EnvKind, EnvSection, ExperimentConfig, ExperimentSection, SmUcrlSection, ENV_PREFIX};
pub use report::{
    aggregate_runs, aggregate_summary_rows, checkpoint_times, emit_csv, json_path, mean_std, read_summary_csv,
    summary_path, write_aggregate_csv, write_report_json, AgentAggregate, AggregateRow, Report, StepCsvRow,
    SummaryCsvRow, STEP_HEADER, SUMMARY_HEADER,
};
pub use run::{
    reference_eta, run_agent, run_experiment, run_id, summarize, EnvFactory, EpochErrorRow, RunSummary, StepRow,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Unparseable config text; the message carries the line and key.
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid config value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// 2 for config errors, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Invalid { .. } => 2,
            Self::Io(_) | Self::Runtime(_) => 1,
        }
    }
}
