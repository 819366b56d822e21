use proptest::prelude::*;
use soundsmc::binomial_ci::{clopper_pearson_interval, proportion_interval, BinomialObservation};
use soundsmc::bounded_mean::{dkw_mean_bounds, hoeffding_epsilon, hoeffding_interval, SupportBounds};
use soundsmc::{Method, SampleBatch};

/// `a + ∫ (1 − G(x)) dx` over `[a, b]` for the step cdf `G = clamp(F̂ + shift)`.
fn integrate_shifted_ecdf(sorted: &[f64], a: f64, b: f64, shift: f64) -> f64 {
    let k = sorted.len() as f64;
    let g = |count: usize| (count as f64 / k + shift).clamp(0.0, 1.0);
    let mut total = 0.0;
    let mut left = a;
    let mut count = 0;
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        total += (x - left) * (1.0 - g(count));
        while i < sorted.len() && sorted[i] == x {
            i += 1;
            count += 1;
        }
        left = x;
    }
    total += (b - left) * (1.0 - g(count));
    a + total
}

fn batch_in(a: f64, b: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(a), Just(b), a..=b], 1..200)
}

proptest! {
    #[test]
    fn dkw_matches_band_integral(
        (a, b, values) in (-50.0f64..50.0, 0.1f64..100.0).prop_flat_map(|(a, w)| (Just(a), Just(a + w), batch_in(a, a + w))),
        gamma in 0.5f64..0.999,
    ) {
        let batch = SampleBatch::new(values).unwrap();
        let ci = dkw_mean_bounds(&batch, SupportBounds::new(a, b).unwrap(), gamma).unwrap();
        let chi = ((2.0 / (1.0 - gamma)).ln() / (2.0 * batch.len() as f64)).sqrt();
        let lower = integrate_shifted_ecdf(batch.sorted(), a, b, chi);
        let upper = integrate_shifted_ecdf(batch.sorted(), a, b, -chi);
        let tol = 1e-9 * (b - a).max(1.0);
        prop_assert!((ci.lower - lower).abs() <= tol, "{} vs {}", ci.lower, lower);
        prop_assert!((ci.upper - upper).abs() <= tol, "{} vs {}", ci.upper, upper);
    }

    #[test]
    fn dkw_inside_hoeffding(
        (a, b, values) in (-50.0f64..50.0, 0.1f64..100.0).prop_flat_map(|(a, w)| (Just(a), Just(a + w), batch_in(a, a + w))),
        gamma in 0.5f64..0.999,
    ) {
        let batch = SampleBatch::new(values).unwrap();
        let s = SupportBounds::new(a, b).unwrap();
        let d = dkw_mean_bounds(&batch, s, gamma).unwrap();
        let h = hoeffding_interval(&batch, s, gamma).unwrap();
        let slack = 1e-9 * (b - a);
        prop_assert!(h.lower <= d.lower + slack && d.upper <= h.upper + slack);
        prop_assert!(d.lower < d.upper);
        let width_h = 2.0 * hoeffding_epsilon(batch.len(), s, gamma);
        prop_assert!(width_h / d.width() <= 2.0 + 1e-12 || d.width() >= s.width() - slack);
    }

    #[test]
    fn clopper_pearson_nests_in_gamma(k in 1u64..400, frac in 0.0f64..=1.0, g1 in 0.5f64..0.99, dg in 0.001f64..0.009) {
        let s = (frac * k as f64).round() as u64;
        let obs = BinomialObservation::new(s, k).unwrap();
        let narrow = clopper_pearson_interval(obs, g1).unwrap();
        let wide = clopper_pearson_interval(obs, g1 + dg).unwrap();
        prop_assert!(narrow.is_subset_of(&wide));
        prop_assert!(narrow.contains(obs.p_hat()));
    }

    #[test]
    fn proportion_intervals_mirror(k in 1u64..300, frac in 0.0f64..=1.0, gamma in 0.5f64..0.999) {
        let s = (frac * k as f64).round() as u64;
        let obs = BinomialObservation::new(s, k).unwrap();
        for m in [Method::Wald, Method::WilsonCc, Method::ClopperPearson, Method::Okamoto] {
            let ci = proportion_interval(m, obs, gamma).unwrap();
            let mirror = proportion_interval(m, obs.mirrored(), gamma).unwrap();
            prop_assert!((ci.lower - (1.0 - mirror.upper)).abs() < 1e-9, "{m}");
            prop_assert!((ci.upper - (1.0 - mirror.lower)).abs() < 1e-9, "{m}");
            prop_assert!(ci.lower >= 0.0 && ci.upper <= 1.0);
        }
    }
}
