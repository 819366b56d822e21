use proptest::prelude::*;
use soundsmc::coverage_lab::{empirical_coverage, exact_coverage_fixed, IntervalTable, StoppingRule};
use soundsmc::model::generate_builtin;
use soundsmc::{Method, PropertyKind, PropertySpec, RunConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_coverage_is_mirror_symmetric(k in 1u64..120, p in 0.001f64..0.999, gamma in 0.5f64..0.99) {
        for m in [Method::Wald, Method::WilsonCc, Method::ClopperPearson, Method::Okamoto] {
            let t = IntervalTable::new(m, k, gamma).unwrap();
            let (c, c_mirror) = (t.coverage(p), t.coverage(1.0 - p));
            prop_assert!((c - c_mirror).abs() < 1e-9, "{m}: {c} vs {c_mirror}");
            prop_assert!((0.0..=1.0 + 1e-12).contains(&c));
        }
    }

    #[test]
    fn stopping_mass_is_conserved(
        eps in 0.03f64..0.3,
        gamma in 0.5f64..0.99,
        min_k in 1u64..30,
        p in 0.001f64..0.999,
        cp in any::<bool>(),
    ) {
        let method = if cp { Method::CpPlan } else { Method::ChowRobbins };
        let rule = StoppingRule::new(method, eps, gamma, min_k, 3000).unwrap();
        let b = rule.boundary(p).unwrap();
        prop_assert!((b.total_mass() - 1.0).abs() < 1e-12, "{}", b.total_mass());
        prop_assert!(b.reach.iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn stopping_points_are_first_stops() {
    let rule = StoppingRule::new(Method::ChowRobbins, 0.05, 0.9, 10, 5000).unwrap();
    let stops: std::collections::HashSet<(u64, u64)> =
        rule.points.iter().map(|pt| (pt.successes, pt.trials)).collect();
    for pt in &rule.points {
        let (s, k) = (pt.successes, pt.trials);
        let from_failure = s < k && !stops.contains(&(s, k - 1));
        let from_success = s > 0 && !stops.contains(&(s - 1, k - 1));
        assert!(from_failure || from_success, "{pt:?} is only reachable through another stop");
    }
}

#[test]
fn empirical_converges_to_exact() {
    // p_reach of t1 in fig2(5, 1) is a Bernoulli(0.2) observation
    let model = generate_builtin("fig2", &[5.0, 1.0]).unwrap();
    let prop = PropertySpec::new(PropertyKind::PReach, Some("t1"), None).unwrap();
    let exact = exact_coverage_fixed(Method::Wald, 20, 0.9, 0.2).unwrap();
    let est = empirical_coverage(&model, &prop, Method::Wald, None, 0.9, 20, 20_000, 0.2, &RunConfig::with_seed(11)).unwrap();
    assert!((est.estimate - exact).abs() < 0.015, "{} vs {exact}", est.estimate);
    assert!(est.meta.lower <= exact + 0.01 && exact - 0.01 <= est.meta.upper);
}
