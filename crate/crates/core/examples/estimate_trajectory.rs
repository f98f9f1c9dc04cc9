//! Estimate the committed synthetic POMDP from one trajectory of the uniform
//! policy and watch the errors shrink and the confidence widths tighten as
//! the trajectory grows.

use spectral_pomdp::pomdp::{sample_trajectory, InitialState, MemorylessPolicy, PomdpModel};
use spectral_pomdp::spectral::{estimate, estimation_errors, Alphabet, EstimatorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_x2y4a2r4.json");
    let truth = PomdpModel::read_json(path)?;
    let policy = MemorylessPolicy::uniform(truth.num_actions(), truth.num_observations());
    let alphabet = Alphabet::of_model(&truth);
    let config = EstimatorConfig::default();

    let traj = sample_trajectory(&truth, &policy, 320_000, 5, InitialState::Stationary)?;
    println!("{:>8}  {:>8}  {:>8}  {:>8}  {:>10}", "N", "f_O ℓ₁", "f_R ℓ₁", "f_T ℓ₁", "B_O(a=0)");
    for n in [5_000usize, 20_000, 80_000, 320_000] {
        let prefix = spectral_pomdp::pomdp::Trajectory {
            steps: traj.steps[..n].to_vec(),
            hidden_states: None,
        };
        let est = estimate(&prefix, &policy, truth.num_states(), 0.05, &alphabet, &config)?;
        let err = estimation_errors(&est, &truth)?;
        println!(
            "{n:>8}  {:>8.4}  {:>8.4}  {:>8.4}  {:>10.4}",
            err.observation_l1,
            err.reward_l1.unwrap_or(f64::NAN),
            err.transition_l1.unwrap_or(f64::NAN),
            est.bounds.per_action[0].b_o,
        );
    }

    let est = estimate(&traj, &policy, truth.num_states(), 0.05, &alphabet, &config)?;
    println!("\nestimated f_O (states in estimator order):{}", est.model.observation());
    println!("true f_O:{}", truth.observation());
    Ok(())
}
