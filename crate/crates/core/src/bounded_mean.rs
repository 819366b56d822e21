//! Mean estimation for distributions with support in `[a, b]`, and the
//! DKW-based lower bound for nonnegative rewards with unknown support.
//!
//! The DKW mean bounds take the expectation of the extreme cdfs of the DKW
//! confidence band. With `χ = √(ln(2/δ)/2k)`, `m = ⌊χk⌋` and order
//! statistics `X(1) ≤ … ≤ X(k)`:
//!
//! ```text
//! l = (Σ_{i≤k−m−1} X(i) + (m+1−χk)·X(k−m) + χk·a) / k
//! u = (χk·b + (m+1−χk)·X(m+1) + Σ_{i≥m+2} X(i)) / k
//! ```
//!
//! i.e. the top `χk` of the sample mass is moved to `a` (resp. the bottom
//! `χk` to `b`), with a fractional weight on the boundary order statistic.

use crate::binomial_ci::{proportion_interval, BinomialObservation};
use crate::error::StatsError;
use crate::interval::{ConfidenceInterval, Method};
use crate::simulate::SampleBatch;
use crate::special::{t_two_sided, z_two_sided};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBounds {
    pub a: f64,
    pub b: f64,
}

impl SupportBounds {
    pub fn new(a: f64, b: f64) -> Result<Self, StatsError> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(StatsError::InvalidArgument(format!("invalid support [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    fn check(&self, batch: &SampleBatch) -> Result<(), StatsError> {
        let (lo, hi) = (batch.min(), batch.max());
        for v in [lo, hi] {
            if v < self.a || v > self.b {
                return Err(StatsError::OutsideSupport {
                    value: v,
                    a: self.a,
                    b: self.b,
                });
            }
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<(), StatsError> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("confidence level {gamma} outside (0, 1)")))
    }
}

fn need(batch: &SampleBatch, n: usize) -> Result<(), StatsError> {
    if batch.len() < n {
        Err(StatsError::TooFewSamples {
            need: n,
            got: batch.len(),
        })
    } else {
        Ok(())
    }
}

/// DKW band half-width `χ_k = √(ln(2/δ) / 2k)`.
pub fn dkw_half_width(k: usize, gamma: f64) -> f64 {
    ((2.0 / (1.0 - gamma)).ln() / (2.0 * k as f64)).sqrt()
}

/// `X̂ ± z·σ̂/√k`.
pub fn normal_interval(batch: &SampleBatch, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    need(batch, 2)?;
    let hw = z_two_sided(gamma) * batch.std_dev() / (batch.len() as f64).sqrt();
    let mean = batch.mean();
    Ok(ConfidenceInterval::new(mean - hw, mean + hw, gamma, Method::Normal))
}

/// `X̂ ± t_{k−1}·σ̂/√k`.
pub fn student_t_interval(batch: &SampleBatch, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    need(batch, 2)?;
    let k = batch.len() as f64;
    let hw = t_two_sided(gamma, k - 1.0)? * batch.std_dev() / k.sqrt();
    let mean = batch.mean();
    Ok(ConfidenceInterval::new(mean - hw, mean + hw, gamma, Method::StudentT))
}

/// Hoeffding half-width `(b − a)·√(ln(2/δ) / 2k)`.
pub fn hoeffding_epsilon(k: usize, support: SupportBounds, gamma: f64) -> f64 {
    support.width() * dkw_half_width(k, gamma)
}

/// `X̂ ± (b − a)·√(ln(2/δ)/2k)`, intersected with `[a, b]`.
pub fn hoeffding_interval(
    batch: &SampleBatch,
    support: SupportBounds,
    gamma: f64,
) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    need(batch, 1)?;
    support.check(batch)?;
    let eps = hoeffding_epsilon(batch.len(), support, gamma);
    let mean = batch.mean();
    Ok(ConfidenceInterval::new(
        (mean - eps).max(support.a),
        (mean + eps).min(support.b),
        gamma,
        Method::Hoeffding,
    ))
}

/// Smallest `k` with `(b − a)·√(ln(2/δ)/2k) ≤ ε`.
pub fn hoeffding_sample_size(epsilon: f64, support: SupportBounds, gamma: f64) -> Result<u64, StatsError> {
    check_gamma(gamma)?;
    if !(epsilon > 0.0) {
        return Err(StatsError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let r = support.width() / epsilon;
    let k = ((2.0 / (1.0 - gamma)).ln() * r * r / 2.0).ceil();
    Ok(k.max(1.0) as u64)
}

/// Empirical cdf together with its DKW confidence band.
#[derive(Debug, Clone)]
pub struct DkwBand {
    /// Distinct sample values, ascending.
    points: Vec<f64>,
    /// `F̂` right after each point.
    heights: Vec<f64>,
    half_width: f64,
}

impl DkwBand {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// The band contains every cdf.
    pub fn is_vacuous(&self) -> bool {
        self.half_width >= 1.0
    }

    pub fn steps(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.heights.iter().copied())
    }

    /// Empirical cdf `F̂(x)`.
    pub fn ecdf(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&p| p <= x);
        if idx == 0 {
            0.0
        } else {
            self.heights[idx - 1]
        }
    }

    /// Upper edge of the band, `min{1, F̂(x) + χ}`: the cdf minimising the
    /// expectation.
    pub fn min_mean_cdf(&self, x: f64) -> f64 {
        (self.ecdf(x) + self.half_width).min(1.0)
    }

    /// Lower edge of the band, `max{0, F̂(x) − χ}`: the cdf maximising the
    /// expectation.
    pub fn max_mean_cdf(&self, x: f64) -> f64 {
        (self.ecdf(x) - self.half_width).max(0.0)
    }
}

pub fn dkw_band(batch: &SampleBatch, gamma: f64) -> Result<DkwBand, StatsError> {
    check_gamma(gamma)?;
    need(batch, 1)?;
    let sorted = batch.sorted();
    let k = sorted.len() as f64;
    let mut points: Vec<f64> = Vec::new();
    let mut heights: Vec<f64> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let h = (i + 1) as f64 / k;
        if points.last() == Some(&v) {
            *heights.last_mut().unwrap() = h;
        } else {
            points.push(v);
            heights.push(h);
        }
    }
    Ok(DkwBand {
        points,
        heights,
        half_width: dkw_half_width(sorted.len(), gamma),
    })
}

/// Lower DKW mean bound over sorted values with lower support `a`.
fn dkw_lower(sorted: &[f64], chi: f64, a: f64) -> f64 {
    let k = sorted.len();
    let ck = chi * k as f64;
    let m = ck.floor() as usize;
    debug_assert!(m < k);
    let body: f64 = sorted[..k - m - 1].iter().sum();
    (body + (m as f64 + 1.0 - ck) * sorted[k - m - 1] + ck * a) / k as f64
}

fn dkw_upper(sorted: &[f64], chi: f64, b: f64) -> f64 {
    let k = sorted.len();
    let ck = chi * k as f64;
    let m = ck.floor() as usize;
    debug_assert!(m < k);
    let body: f64 = sorted[m + 1..].iter().sum();
    (ck * b + (m as f64 + 1.0 - ck) * sorted[m] + body) / k as f64
}

/// Expectations of the two extreme cdfs of the DKW band on `[a, b]`.
/// A vacuous band (`χ ≥ 1`) yields `[a, b]`.
pub fn dkw_mean_bounds(
    batch: &SampleBatch,
    support: SupportBounds,
    gamma: f64,
) -> Result<ConfidenceInterval, StatsError> {
    check_gamma(gamma)?;
    need(batch, 1)?;
    support.check(batch)?;
    let chi = dkw_half_width(batch.len(), gamma);
    if chi >= 1.0 {
        return Ok(ConfidenceInterval::new(support.a, support.b, gamma, Method::Dkw));
    }
    let sorted = batch.sorted();
    // Guard the convex combinations against last-bit drift outside [a, b].
    let lower = dkw_lower(sorted, chi, support.a).max(support.a);
    let upper = dkw_upper(sorted, chi, support.b).min(support.b);
    Ok(ConfidenceInterval::new(lower, upper, gamma, Method::Dkw))
}

/// DKW-E-Lower: the empirical mean with the largest `χ_k` fraction of the
/// samples set to 0. A limit-PAC lower bound on the mean of a nonnegative
/// random variable.
pub fn dkw_e_lower(batch: &SampleBatch, gamma: f64) -> Result<f64, StatsError> {
    check_gamma(gamma)?;
    need(batch, 1)?;
    let min = batch.min();
    if min < 0.0 {
        return Err(StatsError::OutsideSupport {
            value: min,
            a: 0.0,
            b: f64::INFINITY,
        });
    }
    let chi = dkw_half_width(batch.len(), gamma);
    if chi >= 1.0 {
        return Ok(0.0);
    }
    Ok(dkw_lower(batch.sorted(), chi, 0.0).max(0.0))
}

/// [`dkw_e_lower`] as a one-sided interval `[l, +∞)`.
pub fn dkw_e_lower_interval(batch: &SampleBatch, gamma: f64) -> Result<ConfidenceInterval, StatsError> {
    let l = dkw_e_lower(batch, gamma)?;
    Ok(ConfidenceInterval::new(l, f64::INFINITY, gamma, Method::DkwELower))
}

/// Fixed-k interval for `method` on `batch`. Proportion methods need a 0/1
/// batch; Hoeffding and DKW need `support`.
pub fn batch_interval(
    method: Method,
    batch: &SampleBatch,
    support: Option<SupportBounds>,
    gamma: f64,
) -> Result<ConfidenceInterval, StatsError> {
    let need_support = || {
        support.ok_or_else(|| StatsError::InvalidArgument(format!("{method} needs support bounds")))
    };
    match method {
        m if m.is_proportion() => {
            let successes = batch
                .successes()
                .ok_or_else(|| StatsError::InvalidArgument(format!("{m} needs 0/1 samples")))?;
            let obs = BinomialObservation::new(successes, batch.len() as u64)?;
            proportion_interval(m, obs, gamma)
        }
        Method::Normal => normal_interval(batch, gamma),
        Method::StudentT => student_t_interval(batch, gamma),
        Method::Hoeffding => hoeffding_interval(batch, need_support()?, gamma),
        Method::Dkw => dkw_mean_bounds(batch, need_support()?, gamma),
        Method::DkwELower => dkw_e_lower_interval(batch, gamma),
        other => Err(StatsError::InvalidArgument(format!("{other} is not a fixed-k method"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnownBoundSide {
    /// All samples are `≥` the known bound.
    Lower,
    /// All samples are `≤` the known bound.
    Upper,
}

/// A batch moved to the nonnegative half-line, plus the map back.
#[derive(Debug, Clone)]
pub struct ShiftedBatch {
    pub batch: SampleBatch,
    pub bound: f64,
    pub side: KnownBoundSide,
}

impl ShiftedBatch {
    /// Maps a mean of the shifted variable back to the original scale.
    /// For [`KnownBoundSide::Upper`] this swaps lower and upper bounds.
    pub fn unshift(&self, shifted_mean: f64) -> f64 {
        match self.side {
            KnownBoundSide::Lower => shifted_mean + self.bound,
            KnownBoundSide::Upper => self.bound - shifted_mean,
        }
    }
}

/// `X' = X − a` for a known lower bound, `X' = a − X` for a known upper
/// bound.
pub fn shift_for_known_bound(
    values: &[f64],
    bound: f64,
    side: KnownBoundSide,
) -> Result<ShiftedBatch, StatsError> {
    let shifted = values
        .iter()
        .map(|&v| {
            let s = match side {
                KnownBoundSide::Lower => v - bound,
                KnownBoundSide::Upper => bound - v,
            };
            if s < 0.0 {
                let (a, b) = match side {
                    KnownBoundSide::Lower => (bound, f64::INFINITY),
                    KnownBoundSide::Upper => (f64::NEG_INFINITY, bound),
                };
                Err(StatsError::OutsideSupport { value: v, a, b })
            } else {
                Ok(s)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let batch = SampleBatch::new(shifted).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    Ok(ShiftedBatch { batch, bound, side })
}
