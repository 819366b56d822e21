//! Sequential procedures: the Chow-Robbins scheme (unsound, kept for
//! comparison), the precomputed Clopper-Pearson plan, and Wald's SPRT.
//!
//! All of them consume an ordered stream of samples and never read past
//! their stopping point.

use crate::binomial_ci::{
    clopper_pearson_interval, cp_worst_case_sample_size, BinomialObservation,
};
use crate::error::StatsError;
use crate::interval::{ConfidenceInterval, Method};
use crate::special::z_two_sided;

pub const DEFAULT_MIN_K: u64 = 10;

/// Chow-Robbins stopping rule: after every sample (once `min_k` are in),
/// build the normal interval clamped to `[lo, hi]` and stop when its
/// half-width is at most `epsilon`.
#[derive(Debug, Clone, Copy)]
pub struct ChowRobbins {
    pub epsilon: f64,
    pub gamma: f64,
    pub min_k: u64,
    pub clamp: (f64, f64),
    z: f64,
}

impl ChowRobbins {
    pub fn new(epsilon: f64, gamma: f64, min_k: u64) -> Result<Self, StatsError> {
        if !(epsilon > 0.0) {
            return Err(StatsError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(StatsError::InvalidArgument(format!("confidence level {gamma} outside (0, 1)")));
        }
        if min_k == 0 {
            return Err(StatsError::InvalidArgument("min_k must be at least 1".into()));
        }
        Ok(Self {
            epsilon,
            gamma,
            min_k,
            clamp: (0.0, 1.0),
            z: z_two_sided(gamma),
        })
    }

    /// Clamp range for general bounded streams; `[0, 1]` by default.
    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Self {
        self.clamp = (lo, hi);
        self
    }

    /// Interval for `k` samples with the given mean and (k-divisor)
    /// variance.
    pub fn interval(&self, mean: f64, variance: f64, k: u64) -> ConfidenceInterval {
        let hw = self.z * (variance.max(0.0) / k as f64).sqrt();
        let (lo, hi) = self.clamp;
        let lower = (mean - hw).clamp(lo, hi);
        let upper = (mean + hw).clamp(lo, hi);
        ConfidenceInterval::new(lower, upper, self.gamma, Method::ChowRobbins)
    }

    /// Interval at `successes` out of `k` Bernoulli trials; this is the
    /// Wald interval.
    pub fn binomial_interval(&self, successes: u64, k: u64) -> ConfidenceInterval {
        let p = successes as f64 / k as f64;
        self.interval(p, p * (1.0 - p), k)
    }

    pub fn should_stop(&self, ci: &ConfidenceInterval, k: u64) -> bool {
        k >= self.min_k && ci.width() / 2.0 <= self.epsilon
    }

    /// Runs the scheme on a stream. Streams of 0/1 values use the exact
    /// binomial variance `p̂(1 − p̂)`.
    pub fn run<I>(&self, stream: I) -> Result<(ConfidenceInterval, u64), StatsError>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut k = 0u64;
        let mut successes = 0u64;
        let mut binary = true;
        // Welford accumulators for the general case.
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in stream {
            k += 1;
            if x == 1.0 {
                successes += 1;
            } else if x != 0.0 {
                binary = false;
            }
            let d = x - mean;
            mean += d / k as f64;
            m2 += d * (x - mean);
            let ci = if binary {
                self.binomial_interval(successes, k)
            } else {
                self.interval(mean, m2 / k as f64, k)
            };
            if self.should_stop(&ci, k) {
                return Ok((ci, k));
            }
        }
        Err(StatsError::StreamExhausted(k))
    }
}

/// Chow-Robbins estimation with the Wald interval on a Bernoulli stream.
pub fn chow_robbins_estimate<I>(
    stream: I,
    epsilon: f64,
    gamma: f64,
    min_k: u64,
) -> Result<(ConfidenceInterval, u64), StatsError>
where
    I: IntoIterator<Item = f64>,
{
    ChowRobbins::new(epsilon, gamma, min_k)?.run(stream)
}

/// Draws exactly the worst-case Clopper-Pearson plan size from a Bernoulli
/// stream and returns the Clopper-Pearson interval, tagged as the plan.
pub fn sequential_cp_plan_and_run<I>(
    stream: I,
    epsilon: f64,
    gamma: f64,
) -> Result<(ConfidenceInterval, u64), StatsError>
where
    I: IntoIterator<Item = f64>,
{
    let plan = cp_worst_case_sample_size(epsilon, gamma)?;
    let mut drawn = 0u64;
    let mut successes = 0u64;
    for x in stream.into_iter().take(plan as usize) {
        drawn += 1;
        if x == 1.0 {
            successes += 1;
        } else if x != 0.0 {
            return Err(StatsError::InvalidArgument(format!(
                "Clopper-Pearson needs 0/1 samples, got {x}"
            )));
        }
    }
    if drawn < plan {
        return Err(StatsError::StreamExhausted(drawn));
    }
    let mut ci = clopper_pearson_interval(BinomialObservation::new(successes, plan)?, gamma)?;
    ci.method = Method::CpPlan;
    Ok((ci, plan))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    /// `p ≥ p_t`
    Yes,
    /// `p < p_t`
    No,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtOutcome {
    pub decision: Decision,
    pub samples: u64,
    pub log_ratio: f64,
}

/// Wald's sequential probability ratio test of `H0: p = p_t − ε_i` against
/// `H1: p = p_t + ε_i`.
#[derive(Debug, Clone, Copy)]
pub struct Sprt {
    step_success: f64,
    step_failure: f64,
    accept_h0: f64,
    accept_h1: f64,
}

impl Sprt {
    pub fn new(threshold: f64, indifference: f64, alpha: f64, beta: f64) -> Result<Self, StatsError> {
        let p0 = threshold - indifference;
        let p1 = threshold + indifference;
        if !(indifference > 0.0 && p0 > 0.0 && p1 < 1.0) {
            return Err(StatsError::InvalidArgument(format!(
                "need 0 < p_t - eps_i < p_t + eps_i < 1, got p_t={threshold}, eps_i={indifference}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
            return Err(StatsError::InvalidArgument(format!(
                "error bounds must lie in (0, 1), got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self {
            step_success: (p1 / p0).ln(),
            step_failure: ((1.0 - p1) / (1.0 - p0)).ln(),
            accept_h0: (beta / (1.0 - alpha)).ln(),
            accept_h1: ((1.0 - beta) / alpha).ln(),
        })
    }

    pub fn run<I>(&self, stream: I) -> Result<SprtOutcome, StatsError>
    where
        I: IntoIterator<Item = f64>,
    {
        let mut llr = 0.0;
        let mut n = 0u64;
        for x in stream {
            n += 1;
            llr += if x == 1.0 {
                self.step_success
            } else if x == 0.0 {
                self.step_failure
            } else {
                return Err(StatsError::InvalidArgument(format!("SPRT needs 0/1 samples, got {x}")));
            };
            if llr >= self.accept_h1 {
                return Ok(SprtOutcome {
                    decision: Decision::Yes,
                    samples: n,
                    log_ratio: llr,
                });
            }
            if llr <= self.accept_h0 {
                return Ok(SprtOutcome {
                    decision: Decision::No,
                    samples: n,
                    log_ratio: llr,
                });
            }
        }
        Err(StatsError::StreamExhausted(n))
    }
}

pub fn sprt<I>(
    stream: I,
    threshold: f64,
    indifference: f64,
    alpha: f64,
    beta: f64,
) -> Result<SprtOutcome, StatsError>
where
    I: IntoIterator<Item = f64>,
{
    Sprt::new(threshold, indifference, alpha, beta)?.run(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::run_rng;
    use rand::Rng;

    fn bernoulli(p: f64, seed: u64) -> impl Iterator<Item = f64> {
        let mut rng = run_rng(seed, 0);
        std::iter::repeat_with(move || if rng.random::<f64>() < p { 1.0 } else { 0.0 })
    }

    #[test]
    fn chow_robbins_zero_stream_stops_at_min_k() {
        let (ci, k) = chow_robbins_estimate(std::iter::repeat(0.0), 0.05, 0.9, 2).unwrap();
        assert_eq!(k, 2);
        assert_eq!((ci.lower, ci.upper), (0.0, 0.0));
        assert!(!ci.soundness.is_sound());
    }

    #[test]
    fn chow_robbins_wide_epsilon_stops_immediately() {
        let (_, k) = chow_robbins_estimate(bernoulli(0.5, 1), 0.5, 0.9, 10).unwrap();
        assert_eq!(k, 10);
    }

    #[test]
    fn chow_robbins_median_stopping_near_271() {
        let mut ks: Vec<u64> = (0..1000)
            .map(|s| chow_robbins_estimate(bernoulli(0.5, s), 0.05, 0.9, 10).unwrap().1)
            .collect();
        ks.sort_unstable();
        let median = ks[500] as f64;
        assert!((median - 271.0).abs() <= 0.15 * 271.0, "median {median}");
    }

    #[test]
    fn chow_robbins_exhaustion() {
        let err = chow_robbins_estimate([1.0, 0.0, 1.0], 0.01, 0.9, 2).unwrap_err();
        assert!(matches!(err, StatsError::StreamExhausted(3)));
    }

    #[test]
    fn chow_robbins_count_grows_with_precision() {
        let data: Vec<f64> = bernoulli(0.3, 7).take(100_000).collect();
        let mut last = 0;
        for eps in [0.2, 0.1, 0.05, 0.02, 0.01] {
            let (_, k) = chow_robbins_estimate(data.iter().copied(), eps, 0.95, 10).unwrap();
            assert!(k >= last);
            last = k;
        }
    }

    #[test]
    fn chow_robbins_general_stream() {
        let cr = ChowRobbins::new(0.5, 0.9, 3).unwrap().with_clamp(0.0, 10.0);
        let (ci, k) = cr.run([4.0, 5.0, 6.0, 5.0, 5.0]).unwrap();
        assert!(k >= 3);
        assert!(ci.contains(5.0));
    }

    #[test]
    fn cp_plan_draws_exactly_plan_size() {
        let mut drawn = 0u64;
        let stream = bernoulli(0.3, 3).inspect(|_| drawn += 1);
        let (ci, k) = sequential_cp_plan_and_run(stream, 0.01, 0.95).unwrap();
        assert_eq!(k, 9701);
        assert_eq!(drawn, 9701);
        assert!(ci.width() <= 0.02);
        assert_eq!(ci.method, Method::CpPlan);
        assert!(ci.soundness.is_sound());
    }

    #[test]
    fn cp_plan_all_failures() {
        let (ci, k) = sequential_cp_plan_and_run(std::iter::repeat(0.0), 0.05, 0.9).unwrap();
        assert_eq!(k, 289);
        assert_eq!(ci.lower, 0.0);
        assert!(ci.upper <= 0.1);
    }

    #[test]
    fn cp_plan_exhaustion() {
        assert!(matches!(
            sequential_cp_plan_and_run(vec![0.0; 10], 0.05, 0.9),
            Err(StatsError::StreamExhausted(10))
        ));
    }

    #[test]
    fn sprt_all_successes_and_failures() {
        let bound = ((0.95f64 / 0.05).ln() / (0.6f64 / 0.4).ln()).ceil() as u64;
        let out = sprt(std::iter::repeat(1.0), 0.5, 0.1, 0.05, 0.05).unwrap();
        assert_eq!(out.decision, Decision::Yes);
        assert!(out.samples <= bound);
        let out = sprt(std::iter::repeat(0.0), 0.5, 0.1, 0.05, 0.05).unwrap();
        assert_eq!(out.decision, Decision::No);
        assert!(out.samples <= bound);
    }

    #[test]
    fn sprt_error_rate_at_indifference_edge() {
        let trials = 10_000;
        let wrong = (0..trials)
            .filter(|&s| sprt(bernoulli(0.6, s + 100), 0.5, 0.1, 0.05, 0.05).unwrap().decision == Decision::No)
            .count();
        assert!((wrong as f64) / (trials as f64) <= 0.05, "{wrong} wrong");
    }

    #[test]
    fn sprt_ignores_suffix_after_decision() {
        let mut prefix = vec![1.0; 20];
        let a = sprt(prefix.clone(), 0.5, 0.1, 0.05, 0.05).unwrap();
        prefix.truncate(a.samples as usize);
        prefix.extend([0.0; 50]);
        let b = sprt(prefix, 0.5, 0.1, 0.05, 0.05).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sprt_rejects_bad_parameters() {
        assert!(Sprt::new(0.05, 0.1, 0.05, 0.05).is_err());
        assert!(Sprt::new(0.5, 0.1, 0.0, 0.05).is_err());
    }
}
