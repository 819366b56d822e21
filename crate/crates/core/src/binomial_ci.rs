//! Confidence intervals and sample-size planning for binomial proportions.

use crate::error::{NumericError, StatsError};
use crate::interval::{ConfidenceInterval, Method};
use crate::special::z_two_sided;

pub use crate::special::beta_quantile;

/// `successes` out of `trials` Bernoulli outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialObservation {
    pub successes: u64,
    pub trials: u64,
}

impl BinomialObservation {
    pub fn new(successes: u64, trials: u64) -> Result<Self, StatsError> {
        if trials == 0 {
            return Err(StatsError::TooFewSamples { need: 1, got: 0 });
        }
        if successes > trials {
            return Err(StatsError::InvalidArgument(format!(
                "{successes} successes out of {trials} trials"
            )));
        }
        Ok(Self { successes, trials })
    }

    pub fn p_hat(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn mirrored(&self) -> Self {
        Self {
            successes: self.trials - self.successes,
            trials: self.trials,
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), StatsError> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("confidence level {gamma} outside (0, 1)")))
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), StatsError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("half-width {epsilon} must be positive")))
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Textbook Wald interval `p̂ ± z·√(p̂(1−p̂)/k)`, clamped to `[0, 1]`.
pub fn wald_interval(obs: BinomialObservation, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    let p = obs.p_hat();
    let hw = z_two_sided(gamma) * (p * (1.0 - p) / obs.trials as f64).sqrt();
    Ok(ConfidenceInterval::new(clamp01(p - hw), clamp01(p + hw), gamma, Method::Wald))
}

/// Wilson score interval with continuity correction (Newcombe's form).
pub fn wilson_cc_interval(obs: BinomialObservation, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    let z = z_two_sided(gamma);
    let z2 = z * z;
    let n = obs.trials as f64;
    let p = obs.p_hat();
    let q = 1.0 - p;
    let denom = 2.0 * (n + z2);
    let lower = if obs.successes == 0 {
        0.0
    } else {
        let rad = (z2 - 2.0 - 1.0 / n + 4.0 * p * (n * q + 1.0)).max(0.0);
        (2.0 * n * p + z2 - 1.0 - z * rad.sqrt()) / denom
    };
    let upper = if obs.successes == obs.trials {
        1.0
    } else {
        let rad = (z2 + 2.0 - 1.0 / n + 4.0 * p * (n * q - 1.0)).max(0.0);
        (2.0 * n * p + z2 + 1.0 + z * rad.sqrt()) / denom
    };
    Ok(ConfidenceInterval::new(
        clamp01(lower),
        clamp01(upper),
        gamma,
        Method::WilsonCc,
    ))
}

/// Clopper-Pearson interval from Beta quantiles.
pub fn clopper_pearson_interval(obs: BinomialObservation, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    let delta = 1.0 - gamma;
    let s = obs.successes as f64;
    let k = obs.trials as f64;
    let lower = if obs.successes == 0 {
        0.0
    } else {
        beta_quantile(delta / 2.0, s, k - s + 1.0)?
    };
    let upper = if obs.successes == obs.trials {
        1.0
    } else {
        beta_quantile(1.0 - delta / 2.0, s + 1.0, k - s)?
    };
    Ok(ConfidenceInterval::new(lower, upper, gamma, Method::ClopperPearson))
}

/// Okamoto half-width `√(ln(2/δ) / 2k)`.
pub fn okamoto_epsilon(k: u64, gamma: f64) -> f64 {
    ((2.0 / (1.0 - gamma)).ln() / (2.0 * k as f64)).sqrt()
}

/// `[p̂ − ε, p̂ + ε]` with the Okamoto ε, clamped to `[0, 1]`.
pub fn okamoto_interval(obs: BinomialObservation, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    let p = obs.p_hat();
    let eps = okamoto_epsilon(obs.trials, gamma);
    Ok(ConfidenceInterval::new(clamp01(p - eps), clamp01(p + eps), gamma, Method::Okamoto))
}

/// Smallest `k` with `k ≥ ln(2/δ) / 2ε²`.
pub fn okamoto_sample_size(epsilon: f64, gamma: f64) -> Result<u64, StatsError> {
    check_gamma(gamma)?;
    check_epsilon(epsilon)?;
    let k = ((2.0 / (1.0 - gamma)).ln() / (2.0 * epsilon * epsilon)).ceil();
    Ok(k.max(1.0) as u64)
}

/// Interval for a fixed-k proportion method.
pub fn proportion_interval(
    method: Method,
    obs: BinomialObservation,
    gamma: f64,
) -> Result<ConfidenceInterval, StatsError> {
    match method {
        Method::Wald => wald_interval(obs, gamma),
        Method::WilsonCc => wilson_cc_interval(obs, gamma),
        Method::ClopperPearson | Method::CpPlan => clopper_pearson_interval(obs, gamma),
        Method::Okamoto => okamoto_interval(obs, gamma),
        other => Err(StatsError::InvalidArgument(format!("{other} is not a proportion method"))),
    }
}

/// Width of `method`'s interval at the worst-case observation `⌊k/2⌋`.
fn worst_case_width(method: Method, k: u64, gamma: f64) -> Result<f64, StatsError> {
    let obs = BinomialObservation::new(k / 2, k)?;
    Ok(proportion_interval(method, obs, gamma)?.width())
}

/// Smallest `k` whose interval at `k_s = ⌊k/2⌋` has width `≤ 2ε`.
///
/// Exponential search and bisection locate a feasible `k`, then a short
/// downward scan makes sure no smaller `k` (of either parity) qualifies.
pub fn worst_case_sample_size(method: Method, epsilon: f64, gamma: f64) -> Result<u64, StatsError> {
    check_gamma(gamma)?;
    check_epsilon(epsilon)?;
    let target = 2.0 * epsilon;
    let fits = |k: u64| -> Result<bool, StatsError> { Ok(worst_case_width(method, k, gamma)? <= target) };
    if fits(1)? {
        return Ok(1);
    }
    let mut lo = 1u64; // infeasible
    let mut hi = 2u64;
    while !fits(hi)? {
        lo = hi;
        hi = hi.checked_mul(2).ok_or_else(|| {
            StatsError::Numeric(NumericError::NoConvergence {
                what: "worst-case sample size",
                detail: format!("epsilon={epsilon}, gamma={gamma}"),
            })
        })?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut best = hi;
    let mut k = hi;
    let mut misses = 0;
    while k > 1 && misses < 16 {
        k -= 1;
        if fits(k)? {
            best = k;
            misses = 0;
        } else {
            misses += 1;
        }
    }
    Ok(best)
}

/// Worst-case Clopper-Pearson plan size.
pub fn cp_worst_case_sample_size(epsilon: f64, gamma: f64) -> Result<u64, StatsError> {
    worst_case_sample_size(Method::ClopperPearson, epsilon, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(s: u64, k: u64) -> BinomialObservation {
        BinomialObservation::new(s, k).unwrap()
    }

    #[test]
    fn wald_examples() {
        let ci = wald_interval(obs(0, 50), 0.9).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.0, 0.0));
        let ci = wald_interval(obs(50, 50), 0.9).unwrap();
        assert_eq!((ci.lower, ci.upper), (1.0, 1.0));
        let ci = wald_interval(obs(25, 50), 0.9).unwrap();
        let hw = 1.644_853_626_951_472_2 * (0.25f64 / 50.0).sqrt();
        assert!((ci.lower - (0.5 - hw)).abs() < 1e-14);
        assert!((ci.lower - 0.3837).abs() < 5e-5 && (ci.upper - 0.6163).abs() < 5e-5);
        assert!(!ci.soundness.is_sound());
    }

    #[test]
    fn wilson_cc_examples() {
        assert_eq!(wilson_cc_interval(obs(0, 50), 0.9).unwrap().lower, 0.0);
        assert_eq!(wilson_cc_interval(obs(50, 50), 0.9).unwrap().upper, 1.0);
        let w = wilson_cc_interval(obs(25, 50), 0.9).unwrap();
        let wald = wald_interval(obs(25, 50), 0.9).unwrap();
        assert!(w.lower < wald.lower && w.upper > wald.upper);
        for s in 0..=20 {
            let a = wilson_cc_interval(obs(s, 20), 0.95).unwrap();
            let b = wilson_cc_interval(obs(20 - s, 20), 0.95).unwrap();
            assert!((a.lower - (1.0 - b.upper)).abs() < 1e-12);
            assert!((a.upper - (1.0 - b.lower)).abs() < 1e-12);
        }
    }

    #[test]
    fn clopper_pearson_examples() {
        let ci = clopper_pearson_interval(obs(0, 20), 0.95).unwrap();
        assert_eq!(ci.lower, 0.0);
        assert!((ci.upper - (1.0 - 0.025f64.powf(1.0 / 20.0))).abs() < 1e-13);
        assert!((ci.upper - 0.1684).abs() < 5e-5);
        let ci = clopper_pearson_interval(obs(50, 100), 0.95).unwrap();
        assert!((ci.lower - 0.3983).abs() < 5e-5, "{ci}");
        assert!((ci.upper - 0.6017).abs() < 5e-5, "{ci}");
        assert_eq!(clopper_pearson_interval(obs(10, 10), 0.9).unwrap().upper, 1.0);
        assert!(ci.soundness.is_sound());
    }

    #[test]
    fn clopper_pearson_matches_statrs_beta_oracle() {
        use statrs::distribution::{Beta, ContinuousCDF};
        for &(s, k) in &[(3u64, 17u64), (40, 41), (1, 1000)] {
            let ci = clopper_pearson_interval(obs(s, k), 0.9).unwrap();
            let lo = Beta::new(s as f64, (k - s + 1) as f64).unwrap().inverse_cdf(0.05);
            let hi = Beta::new((s + 1) as f64, (k - s) as f64).unwrap().inverse_cdf(0.95);
            assert!((ci.lower - lo).abs() < 1e-9 && (ci.upper - hi).abs() < 1e-9);
        }
    }

    #[test]
    fn okamoto_examples() {
        let e = okamoto_epsilon(18445, 0.95);
        assert!(e <= 0.01 && (e - 0.009_999_84).abs() < 1e-8, "{e}");
        assert!((okamoto_epsilon(400, 0.9) / okamoto_epsilon(1600, 0.9) - 2.0).abs() < 1e-12);
        assert!((okamoto_epsilon(1, 0.5) - (4f64.ln() / 2.0).sqrt()).abs() < 1e-15);
        assert!((okamoto_epsilon(1, 0.5) - 0.8326).abs() < 1e-4);
        assert_eq!(okamoto_sample_size(0.01, 0.95).unwrap(), 18445);
        assert_eq!(okamoto_sample_size(0.05, 0.9).unwrap(), 600);
        let k1 = okamoto_sample_size(0.02, 0.95).unwrap();
        let k2 = okamoto_sample_size(0.01, 0.95).unwrap();
        assert!(k2 >= 4 * k1 - 4 && k2 <= 4 * k1);
        let ci = okamoto_interval(obs(0, 10), 0.9).unwrap();
        assert_eq!(ci.lower, 0.0);
    }

    #[test]
    fn cp_plan_examples() {
        assert_eq!(cp_worst_case_sample_size(0.01, 0.95).unwrap(), 9701);
        assert_eq!(cp_worst_case_sample_size(0.5, 0.5).unwrap(), 1);
        for eps in [0.01, 0.02, 0.05] {
            assert!(
                cp_worst_case_sample_size(eps, 0.95).unwrap() < okamoto_sample_size(eps, 0.95).unwrap()
            );
        }
    }

    #[test]
    fn plan_sizes_at_eps_005_gamma_09() {
        assert_eq!(cp_worst_case_sample_size(0.05, 0.9).unwrap(), 289);
        assert_eq!(worst_case_sample_size(Method::WilsonCc, 0.05, 0.9).unwrap(), 288);
        // 289 is odd; restricted to even k (where k/2 is an outcome) the answer is 290
        assert!(worst_case_width(Method::ClopperPearson, 288, 0.9).unwrap() > 0.1);
        assert!(worst_case_width(Method::ClopperPearson, 290, 0.9).unwrap() <= 0.1);
    }

    #[test]
    fn invalid_arguments() {
        assert!(BinomialObservation::new(3, 2).is_err());
        assert!(BinomialObservation::new(0, 0).is_err());
        assert!(wald_interval(obs(1, 2), 1.0).is_err());
        assert!(okamoto_sample_size(0.0, 0.9).is_err());
        assert!(proportion_interval(Method::Hoeffding, obs(1, 2), 0.9).is_err());
    }
}
