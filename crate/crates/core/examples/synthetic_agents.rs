//! SM-UCRL against the random, Q-learning and UCRL-over-observations
//! baselines on the committed synthetic POMDP.
//!
//! ```text
//! cargo run --release --example synthetic_agents -- 200000
//! ```

use spectral_pomdp::agents::{compute_regret, q_learning_agent, random_agent, smucrl_run, ucrl_mdp_agent, RunLog, SmUcrlConfig};
use spectral_pomdp::env::SyntheticEnv;
use spectral_pomdp::pomdp::{best_policy_bruteforce, InitialState, PomdpModel};
use spectral_pomdp::spectral::{ConfidenceConstants, EstimatorConfig};

fn report(log: &RunLog, eta_plus: f64) {
    let regret = compute_regret(log, eta_plus);
    let n = log.len();
    let at = |t: usize| regret[t.min(n) - 1];
    println!(
        "{:<10} avg reward {:.4}  last-10% {:.4}  Reg({}) = {:>8.1}  Reg({}) = {:>8.1}",
        log.agent,
        log.total_reward() / n as f64,
        log.tail_mean_reward(0.1),
        n / 2,
        at(n / 2),
        n,
        at(n)
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100_000);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_x2y4a2r4.json");
    let model = PomdpModel::read_json(path)?;
    let (_, eta_plus) = best_policy_bruteforce(&model, 0.05)?;
    println!("horizon {horizon}, best memoryless η⁺ = {eta_plus:.4}\n");

    let env = || SyntheticEnv::new(model.clone(), InitialState::Uniform);
    let config = SmUcrlConfig {
        estimator: EstimatorConfig {
            constants: ConfidenceConstants { c_o: 0.1, c_r: 0.1, c_t: 0.1 },
            ..Default::default()
        },
        ..Default::default()
    };
    let seed = 1;

    let sm = smucrl_run(&mut env(), horizon, 2, &config, seed);
    report(&sm, eta_plus);
    report(&random_agent(&mut env(), horizon, seed), eta_plus);
    report(&q_learning_agent(&mut env(), horizon, &Default::default(), seed).0, eta_plus);
    report(&ucrl_mdp_agent(&mut env(), horizon, &Default::default(), seed), eta_plus);

    println!("\nSM-UCRL epochs:");
    for e in &sm.epochs {
        println!(
            "  epoch {:>2} from t = {:>6}: stored {:?}, planned η {}, f_O ℓ₁ error {}",
            e.epoch,
            e.start,
            e.stored,
            e.planned_eta.map_or("-".into(), |v| format!("{v:.3}")),
            e.errors.map_or("-".into(), |v| format!("{:.4}", v.observation_l1)),
        );
    }
    Ok(())
}
