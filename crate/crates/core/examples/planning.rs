//! Memoryless planning: alternating maximization against the exhaustive
//! policy grid, then optimistic planning on an estimated model whose second
//! action has no data.

use spectral_pomdp::planning::{alternating_maximization, optimistic_model, optimistic_policy, AdmissibleSet, PlannerConfig};
use spectral_pomdp::pomdp::{average_reward, best_policy_bruteforce, sample_trajectory, InitialState, MemorylessPolicy, PomdpModel, Trajectory};
use spectral_pomdp::spectral::{estimate, Alphabet, ConfidenceConstants, EstimatorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_x2y4a2r4.json");
    let model = PomdpModel::read_json(path)?;

    let (grid_policy, grid_eta) = best_policy_bruteforce(&model, 0.05)?;
    println!("grid search (step 0.05):   η = {grid_eta:.5}");
    println!("  policy columns (per observation):{}", grid_policy.matrix());

    let floored = alternating_maximization(&model, &PlannerConfig::default())?;
    println!(
        "alternating, floor 0.02:   η = {:.5}  ({} iterations, converged = {})",
        floored.eta, floored.iterations, floored.converged
    );
    let free = alternating_maximization(&model, &PlannerConfig { eps_floor: 0.0, ..Default::default() })?;
    println!("alternating, no floor:     η = {:.5}", free.eta);
    println!(
        "uniform policy:            η = {:.5}",
        average_reward(&model, &MemorylessPolicy::uniform(2, 4))?
    );

    // a trajectory that never plays action 1
    let only_zero = MemorylessPolicy::deterministic(2, &[0, 0, 0, 0], 0.0)?;
    let traj = sample_trajectory(&model, &only_zero, 50_000, 3, InitialState::Uniform)?;
    let traj = Trajectory { steps: traj.steps, hidden_states: None };
    let config = EstimatorConfig {
        constants: ConfidenceConstants { c_o: 0.1, c_r: 0.1, c_t: 0.1 },
        ..Default::default()
    };
    let est = estimate(&traj, &only_zero, 2, 0.05, &Alphabet::of_model(&model), &config)?;
    println!("\naction 1 estimated: {} ({:?})", est.is_estimated(1), est.failures[1]);
    let adm = AdmissibleSet::new(est);
    println!("optimistic mean rewards r̃(x, a):{}", optimistic_model(&adm).mean_reward());
    let plan = optimistic_policy(&adm, &PlannerConfig::default())?;
    println!("optimistic policy (rows = actions):{}", plan.policy.matrix());
    println!("planned optimistic η = {:.4}, true η of that policy = {:.4}", plan.eta, average_reward(&model, &plan.policy)?);
    Ok(())
}
