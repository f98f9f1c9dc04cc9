//! The 10×10 apple gridworld: five green (+1) and five red (−1) apples with
//! short lifetimes, seen through the cell north of the agent (4 symbols) or
//! the three cells NW, N, NE (64 symbols).
//!
//! Plays random, a hand-written reactive map and SM-UCRL on the single-cell
//! view.
//!
//! ```text
//! cargo run --release --example gridworld -- 200000
//! ```

use rand::Rng;
use spectral_pomdp::agents::{random_agent, smucrl_run, SmUcrlConfig};
use spectral_pomdp::env::{ActionSet, AppleColor, CellClass, Environment, GridAppleEnv, ObservationMode, GRID_SIZE};
use spectral_pomdp::rng::seeded;
use spectral_pomdp::spectral::{ConfidenceConstants, EstimatorConfig};

fn draw(env: &GridAppleEnv) {
    for r in 0..GRID_SIZE {
        let row: String = (0..GRID_SIZE)
            .map(|c| {
                if env.agent() == (r, c) {
                    '@'
                } else {
                    match env.classify(r as i32, c as i32) {
                        CellClass::Green => 'g',
                        CellClass::Red => 'r',
                        _ => '.',
                    }
                }
            })
            .collect();
        println!("  {row}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50_000);

    let mut env = GridAppleEnv::new(ActionSet::Four, ObservationMode::Triple);
    env.reset(3);
    println!(
        "triple view, {} symbols; {} green and {} red apples",
        env.num_observations(),
        env.count(AppleColor::Green),
        env.count(AppleColor::Red)
    );
    draw(&env);
    let obs = env.observation();
    println!("observation {obs} = NW {} + 4·N {} + 16·NE {}\n", obs % 4, (obs / 4) % 4, obs / 16);

    // reactive: step north onto a green apple, otherwise wander away from red
    let mut env = GridAppleEnv::new(ActionSet::Four, ObservationMode::Single);
    let mut rng = seeded(9);
    env.reset(9);
    let mut total = 0.0;
    for _ in 0..horizon {
        let north = env.observation();
        let a = if north == CellClass::Green as usize {
            0
        } else {
            rng.random_range(1..4)
        };
        total += env.step(a)?.reward;
    }
    println!("reactive map        average reward {:+.4}", total / horizon as f64);

    let mut env = GridAppleEnv::new(ActionSet::Four, ObservationMode::Single);
    let log = random_agent(&mut env, horizon, 9);
    println!("random              average reward {:+.4}", log.total_reward() / horizon as f64);

    let config = SmUcrlConfig {
        estimator: EstimatorConfig {
            constants: ConfidenceConstants { c_o: 0.1, c_r: 0.1, c_t: 0.1 },
            ..Default::default()
        },
        ..Default::default()
    };
    let mut env = GridAppleEnv::new(ActionSet::Four, ObservationMode::Single);
    let log = smucrl_run(&mut env, horizon, 3, &config, 9);
    println!(
        "SM-UCRL (X = 3)     average reward {:+.4}, last 10% {:+.4}, {} epochs",
        log.total_reward() / horizon as f64,
        log.tail_mean_reward(0.1),
        log.epoch_count()
    );
    if let Some(last) = log.epochs.last() {
        println!("  actions whose decomposition failed at the last epoch start: {:?}", last.failed_actions);
    }
    Ok(())
}
