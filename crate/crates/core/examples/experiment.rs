//! Multi-seed experiment from a TOML config: every (agent, seed) cell runs in
//! parallel, and the aggregated report is written as step CSV, checkpoint
//! summary CSV and JSON.
//!
//! ```text
//! cargo run --release --example experiment -- examples/configs/synthetic.toml /tmp/synthetic.csv
//! SMUCRL__EXPERIMENT__HORIZON=20000 cargo run --release --example experiment
//! ```

use std::path::PathBuf;

use spectral_pomdp::harness::{emit_csv, json_path, run_experiment, write_report_json, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/synthetic.toml")));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spectral_pomdp_experiment.csv"));

    // SMUCRL__SECTION__KEY environment variables override the file
    let mut config = ExperimentConfig::load(&config_path)?;
    if std::env::var_os("SMUCRL__EXPERIMENT__SEEDS").is_none() {
        config.experiment.seeds.truncate(4);
    }
    let report = run_experiment(&config)?;

    if let Some(eta) = report.eta_plus {
        println!("η⁺ = {eta:.4}");
    }
    // aggregates hold one entry per checkpoint; print the last
    println!("final checkpoint t = {}", report.checkpoints.last().copied().unwrap_or(0));
    for agg in &report.aggregates {
        let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
        println!(
            "{:<10} {} seeds  avg reward {:.4} ± {:.4}  last 10% {:.4}  regret {}",
            agg.agent.name(),
            agg.seeds,
            last(&agg.avg_reward_mean),
            last(&agg.avg_reward_std),
            agg.tail_avg_reward_mean,
            agg.regret_mean.as_deref().map_or("-".into(), |r| format!("{:.1}", last(r))),
        );
    }
    let summary = emit_csv(&report, &out)?;
    write_report_json(&report, &json_path(&out))?;
    println!("\nwrote {}, {} and {}", out.display(), summary.display(), json_path(&out).display());
    Ok(())
}
