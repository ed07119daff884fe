use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mixflow::lab::{
    average_reward, centered_discounted_values, differential_values, discounted_values, shift_invariance_check,
    FiniteMdp, ValueBundle,
};

fn mdp(seed: u64, n: usize) -> FiniteMdp {
    FiniteMdp::random(n, 3, 1e-3, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_holds(seed in any::<u64>(), n in 2usize..=12, gamma in 0.1f64..0.99) {
        let b = ValueBundle::compute(&mdp(seed, n), gamma).unwrap();
        prop_assert!(b.decomposition_error() <= 1e-9);
        // Differential values are centered under the stationary distribution.
        prop_assert!(b.mu.dot(&b.h_tilde).abs() <= 1e-10);
        prop_assert!(b.mu.dot(&b.h_tilde_gamma).abs() <= 1e-9);
    }

    #[test]
    fn shifting_rewards_moves_only_the_offset(seed in any::<u64>(), n in 2usize..=12, c in -10.0f64..=10.0) {
        let rep = shift_invariance_check(&mdp(seed, n), c, 0.9).unwrap();
        prop_assert!(rep.passes(1e-10), "{rep:?}");
    }
}

#[test]
fn scaled_rewards_scale_every_value() {
    let m = mdp(4, 7);
    let mut scaled = m.clone();
    scaled.r.iter_mut().for_each(|r| *r *= 3.0);
    assert_abs_diff_eq!(average_reward(&scaled).unwrap(), 3.0 * average_reward(&m).unwrap(), epsilon = 1e-12);
    let (h, h3) = (differential_values(&m).unwrap(), differential_values(&scaled).unwrap());
    for s in 0..m.n_states {
        assert_abs_diff_eq!(h3[s], 3.0 * h[s], epsilon = 1e-11);
    }
}

#[test]
fn centered_values_approach_differential_values() {
    let m = mdp(8, 9);
    let h = differential_values(&m).unwrap();
    let c = centered_discounted_values(&m, 1.0 - 1e-7).unwrap();
    for s in 0..m.n_states {
        assert_abs_diff_eq!(c[s], h[s], epsilon = 1e-5);
    }
    let d = discounted_values(&m, 0.5).unwrap();
    assert!(d.iter().all(|x| x.is_finite()));
}
