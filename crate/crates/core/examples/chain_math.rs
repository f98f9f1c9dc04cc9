//! Exact quantities of a memoryless policy on a known POMDP: the induced
//! state chain, its stationary distribution and the long-run average
//! reward, checked against a simulated trajectory.
//!
//! ```text
//! cargo run --release --example chain_math
//! ```

use nalgebra::DMatrix;
use spectral_pomdp::pomdp::{
    average_reward, induced_transition, sample_trajectory, stationary_distribution, InitialState,
    MemorylessPolicy, PomdpModel,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // two states, two actions, three observations, rewards {0, 1}
    let model = PomdpModel::new(
        vec![0.0, 1.0],
        1.0,
        vec![
            DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.3, 0.7]),
            DMatrix::from_row_slice(2, 2, &[0.2, 0.8, 0.6, 0.4]),
        ],
        DMatrix::from_row_slice(3, 2, &[0.7, 0.1, 0.2, 0.3, 0.1, 0.6]),
        vec![
            DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.4, 0.6]),
            DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.1, 0.9]),
        ],
    )?;

    let policy = MemorylessPolicy::new(DMatrix::from_row_slice(2, 3, &[0.9, 0.5, 0.1, 0.1, 0.5, 0.9]), 0.0)?;
    let chain = induced_transition(&model, &policy)?;
    let omega = stationary_distribution(&chain)?;
    let eta = average_reward(&model, &policy)?;

    println!("induced chain P_π:{}", chain.matrix());
    println!("stationary ω = [{:.6}, {:.6}]", omega[0], omega[1]);
    println!("residual ‖ωP − ω‖∞ = {:.2e}", (omega.transpose() * chain.matrix() - omega.transpose()).amax());
    println!("η(π) = {eta:.6}");

    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let traj = sample_trajectory(&model, &policy, n, 7, InitialState::Uniform)?;
        let mean = traj.steps.iter().map(|s| s.r).sum::<f64>() / n as f64;
        println!("simulated N = {n:>9}: mean reward {mean:.6}  (error {:+.2e})", mean - eta);
    }

    let uniform = MemorylessPolicy::uniform(2, 3);
    println!("uniform policy η = {:.6}", average_reward(&model, &uniform)?);
    Ok(())
}
