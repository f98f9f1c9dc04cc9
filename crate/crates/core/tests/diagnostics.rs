mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use spectral_pomdp::diagnostics::{
    azuma_width, deterministic_policy_set, dobrushin_theta, estimate_diameter, moment_concentration_width,
    regret_bound, triple_concentration_width, BoundInputs, DiagnosticsError,
};
use spectral_pomdp::pomdp::random::random_stochastic;
use spectral_pomdp::pomdp::{InducedChain, MemorylessPolicy};
use spectral_pomdp::rng::seeded;

fn inputs() -> BoundInputs {
    BoundInputs {
        d: 10.0,
        c1: 1.0,
        n: 1e4,
        x: 2,
        a: 2,
        y: 4,
        r: 4,
        r_max: 4.0,
        delta_prime: 0.05,
    }
}

proptest! {
    #[test]
    fn theta_ignores_state_labels(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = seeded(seed);
        let p = random_stochastic(&mut rng, n, n);
        let mut perm: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut rng);
        let q = DMatrix::from_fn(n, n, |i, j| p[(perm[i], perm[j])]);
        let a = dobrushin_theta(&InducedChain::new(p).unwrap());
        let b = dobrushin_theta(&InducedChain::new(q).unwrap());
        prop_assert!((a - b).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn widths_fall_with_samples_and_rise_with_confidence(
        n in 1usize..1_000_000, theta in 0.0f64..0.95, delta in 0.001f64..0.5, d in 1usize..40
    ) {
        let w = moment_concentration_width(1.0, theta, n, d, d + 1, delta).unwrap();
        prop_assert!(moment_concentration_width(1.0, theta, n + 1, d, d + 1, delta).unwrap() < w);
        prop_assert!(moment_concentration_width(1.0, theta, n, d, d + 1, delta / 2.0).unwrap() > w);
        let t = triple_concentration_width(1.0, theta, n, [d, d, 2], delta).unwrap();
        prop_assert!(triple_concentration_width(1.0, theta, n + 1, [d, d, 2], delta).unwrap() < t);
        let az = azuma_width(1.0, n as f64, d, d, theta, delta, false).unwrap();
        prop_assert!(azuma_width(1.0, n as f64, d, d, theta, delta / 2.0, false).unwrap() > az);
    }

    #[test]
    fn regret_bound_is_monotone(scale in 1.01f64..10.0) {
        let base = regret_bound(&inputs()).unwrap();
        let i = inputs();
        for bigger in [
            BoundInputs { d: i.d * scale, ..i },
            BoundInputs { n: i.n * scale, ..i },
            BoundInputs { x: i.x + 1, ..i },
            BoundInputs { a: i.a + 1, ..i },
            BoundInputs { y: i.y + 1, ..i },
        ] {
            prop_assert!(regret_bound(&bigger).unwrap() > base);
        }
    }
}

#[test]
fn calculators_by_hand() {
    let w = azuma_width(1.0, 1.0, 1, 1, 0.0, 2.0 * (-8.0f64).exp(), false).unwrap();
    assert!((w - 8.0).abs() < 1e-12);
    let c = moment_concentration_width(1.0, 0.0, 800, 2, 2, 4.0 / std::f64::consts::E).unwrap();
    assert!((c - 0.1).abs() < 1e-12);
    let b = regret_bound(&inputs()).unwrap();
    assert!((b - 40.0 * 2f64.powf(1.5) * (8e4 * 2e5f64.ln()).sqrt()).abs() < 1e-9);
    let doubled = regret_bound(&BoundInputs { r_max: 8.0, ..inputs() }).unwrap();
    assert!((doubled - 2.0 * b).abs() < 1e-9);
    assert!(matches!(azuma_width(1.0, 1.0, 1, 1, 1.0, 0.1, false), Err(DiagnosticsError::ThetaOne(_))));
    assert!(moment_concentration_width(1.0, 0.0, 0, 2, 2, 0.1).unwrap().is_infinite());
}

#[test]
fn diameter_is_reproducible_and_shrinks_with_more_policies() {
    let model = common::fixture();
    let all = deterministic_policy_set(2, 4, 0.02).unwrap();
    assert_eq!(all.len(), 16);
    let few = &all[..3];
    let d_few = estimate_diameter(&model, few, 60, 2000, 4).unwrap();
    let d_all = estimate_diameter(&model, &all, 60, 2000, 4).unwrap();
    assert_eq!(d_all, estimate_diameter(&model, &all, 60, 2000, 4).unwrap());
    assert!(d_all.diameter <= d_few.diameter);
    for (a, b) in d_all.times.iter().flatten().zip(d_few.times.iter().flatten()) {
        assert!(a <= b);
    }
    let with_uniform = [few.to_vec(), vec![MemorylessPolicy::uniform(2, 4)]].concat();
    assert!(estimate_diameter(&model, &with_uniform, 60, 2000, 4).unwrap().diameter <= d_few.diameter);
}
