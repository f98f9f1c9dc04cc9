mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_pomdp::linalg::{project_to_simplex, Tensor3};
use spectral_pomdp::pomdp::random::{random_model, RandomModelSpec};
use spectral_pomdp::pomdp::{sample_trajectory, InitialState, MemorylessPolicy, Step, Trajectory};
use spectral_pomdp::rng::{seeded, standard_normal};
use spectral_pomdp::spectral::analytic::{population_moments, population_views};
use spectral_pomdp::spectral::{
    confidence_widths, estimate, estimate_from_moments, match_columns, tensor_power_method, Alphabet,
    ConfidenceConstants, EstimatorConfig, MomentBatch, TpmConfig,
};

fn on_simplex(m: &DMatrix<f64>) -> bool {
    m.column_iter().all(|c| (c.sum() - 1.0).abs() <= 1e-9 && c.iter().all(|&v| v >= 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_moments_give_exact_parameters(seed in any::<u64>(), x in 1usize..4, extra in 0usize..3, a in 1usize..4) {
        let y = x + extra;
        let spec = RandomModelSpec::new(x, a, y, vec![0.0, 1.0, 2.0]).well_conditioned(0.1, 0.05);
        let truth = random_model(&spec, &mut seeded(seed));
        let policy = MemorylessPolicy::uniform(a, y);
        let batches: Vec<_> = (0..a)
            .map(|l| Some(MomentBatch {
                moments: population_moments(&population_views(&truth, &policy, l).unwrap()),
                policy: &policy,
                samples: 100,
            }))
            .collect();
        let est = estimate_from_moments(&batches, x, 0.05, &Alphabet::of_model(&truth), &EstimatorConfig::default()).unwrap();
        let aligned = est.model.permute_states(&match_columns(est.model.observation(), truth.observation()));
        prop_assert!((aligned.observation() - truth.observation()).amax() < 1e-6);
        for l in 0..a {
            prop_assert!((aligned.transition(l) - truth.transition(l)).amax() < 1e-6);
            prop_assert!((aligned.reward_distribution(l) - truth.reward_distribution(l)).amax() < 1e-6);
        }
    }

    #[test]
    fn sampled_estimates_are_distributions(seed in any::<u64>(), n in 50usize..3000) {
        let truth = common::model(seed, 2, 2, 3, 2);
        let policy = MemorylessPolicy::uniform(2, 3);
        let traj = sample_trajectory(&truth, &policy, n, seed, InitialState::Uniform).unwrap();
        let est = estimate(&traj, &policy, 2, 0.05, &Alphabet::of_model(&truth), &EstimatorConfig::default()).unwrap();
        prop_assert!(on_simplex(est.model.observation()));
        for l in 0..2 {
            prop_assert!(on_simplex(&est.model.transition(l).transpose()));
            prop_assert!(on_simplex(&est.model.reward_distribution(l).transpose()));
        }
    }

    #[test]
    fn simplex_projection_is_a_distribution(v in prop::collection::vec(-5.0f64..5.0, 1..12)) {
        let mut p = v.clone();
        project_to_simplex(&mut p);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn widths_shrink_with_data_and_grow_with_confidence(n in 1usize..100_000, x in 1usize..5, y in 1usize..8) {
        let c = ConfidenceConstants::default();
        let w = confidence_widths(n, x, y, 0.05, &c).unwrap();
        let more = confidence_widths(n + 1, x, y, 0.05, &c).unwrap();
        let surer = confidence_widths(n, x, y, 0.01, &c).unwrap();
        let wider = confidence_widths(n, x + 1, y + 1, 0.05, &c).unwrap();
        prop_assert!(more.total() < w.total());
        prop_assert!(surer.total() > w.total());
        prop_assert!(wider.b_o > w.b_o && wider.b_t > w.b_t);
    }

    #[test]
    fn power_method_reconstructs_odeco_tensors(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = seeded(seed);
        let q = DMatrix::from_fn(d, d, |_, _| standard_normal(&mut rng)).qr().q();
        let mut t = Tensor3::zeros(d, d, d);
        for i in 0..d {
            let v: Vec<f64> = q.column(i).iter().copied().collect();
            t.add_rank_one(1.0 + i as f64, &v, &v, &v);
        }
        let pairs = tensor_power_method(&t, d, &TpmConfig::default(), seed).unwrap();
        let mut rebuilt = Tensor3::zeros(d, d, d);
        for (lambda, phi) in &pairs {
            let v: Vec<f64> = phi.iter().copied().collect();
            rebuilt.add_rank_one(*lambda, &v, &v, &v);
        }
        prop_assert!(rebuilt.max_abs_diff(&t) <= 1e-8);
    }
}

#[test]
fn three_step_trajectory_falls_back_everywhere() {
    let steps = vec![
        Step { y: 0, a: 1, m: 0, r: 0.0 },
        Step { y: 2, a: 0, m: 1, r: 1.0 },
        Step { y: 1, a: 1, m: 1, r: 1.0 },
    ];
    let traj = Trajectory { steps, hidden_states: None };
    let alphabet = Alphabet {
        actions: 2,
        observations: 3,
        reward_values: vec![0.0, 1.0],
        r_max: 1.0,
    };
    let est = estimate(&traj, &MemorylessPolicy::uniform(2, 3), 2, 0.05, &alphabet, &Default::default()).unwrap();
    assert!(est.failures.iter().all(Option::is_some));
    assert!(est.bounds.per_action.iter().all(|b| b.is_infinite()));
    assert!(on_simplex(est.model.observation()));
}

#[test]
fn more_data_means_smaller_error_on_the_fixture() {
    let truth = common::fixture();
    let policy = MemorylessPolicy::uniform(2, 4);
    let alphabet = Alphabet::of_model(&truth);
    let mean_error = |n: usize| {
        (0..6u64)
            .map(|s| {
                let traj = sample_trajectory(&truth, &policy, n, 77 + s, InitialState::Stationary).unwrap();
                let est = estimate(&traj, &policy, 2, 0.05, &alphabet, &Default::default()).unwrap();
                spectral_pomdp::spectral::estimation_errors(&est, &truth).unwrap().observation_l1
            })
            .sum::<f64>()
            / 6.0
    };
    let (small, large) = (mean_error(5_000), mean_error(80_000));
    assert!(large < 0.6 * small, "{small} -> {large}");
}
