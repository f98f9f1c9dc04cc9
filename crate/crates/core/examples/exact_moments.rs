//! With infinite data the spectral pipeline is exact. Population views and
//! cross-moments of a random model are fed to the estimator, and the
//! recovered parameters match the truth after one relabeling of the states.

use spectral_pomdp::linalg::max_abs_diff;
use spectral_pomdp::pomdp::random::{random_model, RandomModelSpec};
use spectral_pomdp::pomdp::MemorylessPolicy;
use spectral_pomdp::rng::seeded;
use spectral_pomdp::spectral::analytic::{population_moments, population_views};
use spectral_pomdp::spectral::{estimate_from_moments, match_columns, Alphabet, EstimatorConfig, MomentBatch};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded(12);
    let spec = RandomModelSpec::new(3, 2, 5, vec![0.0, 0.5, 1.0]).well_conditioned(0.1, 0.05);
    let truth = random_model(&spec, &mut rng);
    let policy = MemorylessPolicy::uniform(2, 5);

    let mut batches = Vec::new();
    for l in 0..truth.num_actions() {
        let views = population_views(&truth, &policy, l)?;
        println!("action {l}: P(a_t = l) = {:.4}, P(x_t | a_t = l) = {:.4?}", views.action_rate, views.weights.as_slice());
        batches.push(Some(MomentBatch {
            moments: population_moments(&views),
            policy: &policy,
            samples: 1,
        }));
    }

    let est = estimate_from_moments(&batches, 3, 0.05, &Alphabet::of_model(&truth), &EstimatorConfig::default())?;
    let perm = match_columns(est.model.observation(), truth.observation());
    let aligned = est.model.permute_states(&perm);
    println!("state relabeling: {perm:?}");
    println!("f_O error: {:.2e}", max_abs_diff(aligned.observation(), truth.observation()));
    for l in 0..truth.num_actions() {
        println!(
            "action {l}: f_T error {:.2e}, f_R error {:.2e}",
            max_abs_diff(aligned.transition(l), truth.transition(l)),
            max_abs_diff(aligned.reward_distribution(l), truth.reward_distribution(l))
        );
    }
    Ok(())
}
