use proptest::prelude::*;
use soundsmc::model::generate_builtin;
use soundsmc::simulate::{run_batch, SampleStream};
use soundsmc::{PropertyKind, PropertySpec, RunConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batches_do_not_depend_on_workers(seed in any::<u64>(), workers in 2usize..6, k in 1u64..500) {
        let model = generate_builtin("chain", &[3.0, 0.4]).unwrap();
        let prop = PropertySpec::new(PropertyKind::EReach, Some("goal"), None).unwrap();
        let one = run_batch(&model, &prop, k, &RunConfig::with_seed(seed)).unwrap();
        let many = run_batch(&model, &prop, k, &RunConfig { workers, ..RunConfig::with_seed(seed) }).unwrap();
        prop_assert_eq!(one.values(), many.values());
    }

    #[test]
    fn stream_prefix_equals_batch(seed in any::<u64>(), k in 1u64..300) {
        let model = generate_builtin("fig3", &[]).unwrap();
        let prop = PropertySpec::new(PropertyKind::EReach, Some("goal"), None).unwrap();
        let batch = run_batch(&model, &prop, k, &RunConfig::with_seed(seed)).unwrap();
        let stream: Vec<f64> = SampleStream::new(&model, &prop, RunConfig::with_seed(seed)).unwrap().take(k as usize).collect();
        prop_assert_eq!(batch.values(), &stream[..]);
    }

    #[test]
    fn bounded_rewards_stay_in_support(seed in any::<u64>(), c in 0u64..30) {
        let model = generate_builtin("chain", &[4.0, 0.3]).unwrap();
        let prop = PropertySpec::new(PropertyKind::ECumulative, None, Some(c)).unwrap();
        let batch = run_batch(&model, &prop, 200, &RunConfig::with_seed(seed)).unwrap();
        prop_assert!(batch.min() >= 0.0 && batch.max() <= (c + 1) as f64);
    }
}

#[test]
fn chain_mean_matches_analytic_value() {
    let model = generate_builtin("chain", &[2.0, 0.9]).unwrap();
    let prop = PropertySpec::new(PropertyKind::EReach, Some("goal"), None).unwrap();
    let b = run_batch(&model, &prop, 200_000, &RunConfig::with_seed(1)).unwrap();
    assert!((b.mean() - 2.0 / 0.9).abs() < 0.01, "{}", b.mean());
}
