//! Support bounds for path rewards derived from structural model bounds.
//!
//! For unbounded reachability rewards the support is cut with a bounding
//! set: paths reaching the goal within `q·|S|` steps. The reward mass
//! outside it is bounded by
//!
//! ```text
//! T(q) = |S|·r·(1 − u)^q·(q − q·u + 1)·u⁻¹,   u = p_min^|S|
//! ```
//!
//! which is evaluated in the log domain throughout. `T` rises up to
//! `q ≈ 1/u` and falls afterwards.

use rand::Rng;

use crate::bounded_mean::{dkw_mean_bounds, SupportBounds};
use crate::error::{AnalysisError, HorizonError, SimError, StatsError};
use crate::interval::{ConfidenceInterval, Method};
use crate::model::{Dtmc, PropertyKind, PropertySpec, StructuralBounds};
use crate::simulate::{parallel_map, run_rng, RunConfig, SampleBatch};

pub const DEFAULT_Q_MAX: u64 = i64::MAX as u64;

/// Support bound for instantaneous rewards.
pub fn instantaneous_bound(bounds: &StructuralBounds) -> f64 {
    bounds.rmax_bound
}

/// Support bound for `c`-step cumulative rewards, counting the initial state.
pub fn cumulative_bound(c: u64, bounds: &StructuralBounds) -> f64 {
    (c as f64 + 1.0) * bounds.rmax_bound
}

/// `ln T(q)`.
pub fn ln_tail_weight(bounds: &StructuralBounds, q: u64) -> f64 {
    let n = bounds.state_bound as f64;
    let ln_u = n * bounds.pmin_bound.ln();
    let u = ln_u.exp();
    let ln_one_minus_u = (-u).ln_1p();
    let qf = q as f64;
    let decay = if qf == 0.0 { 0.0 } else { qf * ln_one_minus_u };
    n.ln() + bounds.rmax_bound.ln() + decay + (qf * (1.0 - u) + 1.0).ln() - ln_u
}

/// Bound on the reward-weighted probability of paths that need more than
/// `q·|S|` steps to reach the goal.
pub fn bounding_set_tail_weight(bounds: &StructuralBounds, q: u64) -> f64 {
    ln_tail_weight(bounds, q).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSetResult {
    pub q: u64,
    /// `q · state_bound`.
    pub horizon: u64,
    pub tail_weight_bound: f64,
    /// `q · state_bound · rmax_bound`.
    pub path_reward_cap: f64,
}

/// Smallest `q ≥ 1` with `T(q) < ε′`, searched up to `q_max`.
pub fn bounding_set_horizon(
    bounds: &StructuralBounds,
    epsilon_prime: f64,
    q_max: u64,
) -> Result<BoundingSetResult, HorizonError> {
    if !(epsilon_prime > 0.0) {
        return Err(HorizonError::NonPositiveEpsilon(epsilon_prime));
    }
    if !(bounds.pmin_bound > 0.0 && bounds.pmin_bound <= 1.0) {
        return Err(HorizonError::BadPmin(bounds.pmin_bound));
    }
    let target = epsilon_prime.ln();
    let fits = |q: u64| ln_tail_weight(bounds, q) < target;
    let q = if fits(1) {
        1
    } else {
        // T(1) ≥ ε′ and T is unimodal, so {q : T(q) < ε′} is an up-set.
        let mut lo = 1u64;
        let mut hi = 2u64.min(q_max);
        while !fits(hi) {
            if hi >= q_max {
                return Err(HorizonError::Infeasible { q_max });
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(q_max);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fits(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let horizon = q.checked_mul(bounds.state_bound).ok_or(HorizonError::Overflow {
        q,
        states: bounds.state_bound,
    })?;
    Ok(BoundingSetResult {
        q,
        horizon,
        tail_weight_bound: bounding_set_tail_weight(bounds, q),
        path_reward_cap: horizon as f64 * bounds.rmax_bound,
    })
}

/// Truncated reachability reward `X^B`: the path reward when the goal is
/// entered at an index below `horizon`, 0 otherwise. Then every value is at
/// most `horizon · r_max`.
fn truncated_reach_sample<R: Rng + ?Sized>(
    model: &Dtmc,
    goal: &[bool],
    horizon: u64,
    max_steps: u64,
    rng: &mut R,
    run: u64,
) -> Result<f64, SimError> {
    let mut s = model.initial();
    let mut acc = 0.0;
    let mut idx = 0u64;
    loop {
        acc += model.reward(s);
        if goal[s] {
            return Ok(acc);
        }
        if idx + 1 >= horizon || model.is_absorbing(s) {
            return Ok(0.0);
        }
        if idx >= max_steps {
            return Err(SimError::StepCap { run, cap: max_steps });
        }
        s = model.successor(s, rng.random());
        idx += 1;
    }
}

/// DKW interval for an unbounded reachability reward, made sound by the
/// bounding-set horizon: `[l_d, u_d + ε′]` on the truncated samples.
#[allow(clippy::too_many_arguments)]
pub fn truncated_reach_reward_interval(
    model: &Dtmc,
    prop: &PropertySpec,
    bounds: &StructuralBounds,
    epsilon_prime: f64,
    k: u64,
    gamma: f64,
    cfg: &RunConfig,
    q_max: u64,
) -> Result<(ConfidenceInterval, BoundingSetResult, SampleBatch), AnalysisError> {
    if prop.kind != PropertyKind::EReach {
        return Err(StatsError::InvalidArgument(format!(
            "truncated interval needs an e_reach property, got {}",
            prop.kind
        ))
        .into());
    }
    if k == 0 {
        return Err(SimError::EmptyBatch.into());
    }
    let horizon = bounding_set_horizon(bounds, epsilon_prime, q_max)?;
    let goal = model.label_mask(prop.goal.as_deref().unwrap_or_default())?;
    let values = parallel_map(k, cfg.workers, |i| {
        let run = cfg.run_offset.wrapping_add(i);
        let mut rng = run_rng(cfg.seed, run);
        truncated_reach_sample(model, &goal, horizon.horizon, cfg.max_steps, &mut rng, run)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let batch = SampleBatch::new(values)?;
    let support = SupportBounds::new(0.0, horizon.path_reward_cap)?;
    let base = dkw_mean_bounds(&batch, support, gamma)?;
    let ci = ConfidenceInterval::new(base.lower, base.upper + epsilon_prime, gamma, Method::TruncatedDkw);
    Ok((ci, horizon, batch))
}
