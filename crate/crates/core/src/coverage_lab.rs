//! Exact and empirical coverage probabilities of interval methods.
//!
//! Fixed-k coverage enumerates all `k + 1` outcomes of a binomial experiment.
//! Sequential coverage runs a dynamic program over the `(successes, trials)`
//! lattice, absorbing probability mass where the procedure would stop.

use std::io::Write;

use crate::binomial_ci::{clopper_pearson_interval, cp_worst_case_sample_size, proportion_interval, BinomialObservation};
use crate::bounded_mean::{batch_interval, SupportBounds};
use crate::error::{AnalysisError, StatsError};
use crate::interval::{ConfidenceInterval, Method};
use crate::model::{Dtmc, PropertySpec};
use crate::sequential::ChowRobbins;
use crate::simulate::{parallel_map, run_batch, RunConfig, SampleBatch};
use crate::special::{binomial_pmf, KahanSum};

pub const DEFAULT_FIXED_GRID: usize = 999;
pub const DEFAULT_SEQUENTIAL_GRID: usize = 99;
/// Residual mass above which a sequential evaluation is flagged.
pub const RESIDUAL_WARNING: f64 = 1e-9;

/// `n` equally spaced points `i / (n + 1)`, strictly inside `(0, 1)`.
pub fn grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn check_p(p: f64) -> Result<(), StatsError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("success probability {p} outside (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub coverage: f64,
    pub expected_width: Option<f64>,
}

/// Coverage over a grid of `p` values for a fixed-k proportion method.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCurve {
    pub method: Method,
    pub k: u64,
    pub gamma: f64,
    pub points: Vec<CurvePoint>,
}

impl CoverageCurve {
    pub fn min_coverage(&self) -> f64 {
        self.points.iter().map(|pt| pt.coverage).fold(f64::INFINITY, f64::min)
    }

    pub fn mean_coverage(&self) -> f64 {
        let s: KahanSum = self.points.iter().map(|pt| pt.coverage).collect();
        s.value() / self.points.len() as f64
    }
}

/// Intervals of a fixed-k proportion method for every outcome `0..=k`.
#[derive(Debug, Clone)]
pub struct IntervalTable {
    pub method: Method,
    pub k: u64,
    pub gamma: f64,
    intervals: Vec<ConfidenceInterval>,
}

impl IntervalTable {
    pub fn new(method: Method, k: u64, gamma: f64) -> Result<Self, StatsError> {
        if !method.is_proportion() {
            return Err(StatsError::InvalidArgument(format!("{method} is not a fixed-k proportion method")));
        }
        let intervals = (0..=k)
            .map(|s| proportion_interval(method, BinomialObservation::new(s, k)?, gamma))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            method,
            k,
            gamma,
            intervals,
        })
    }

    pub fn interval(&self, successes: u64) -> &ConfidenceInterval {
        &self.intervals[successes as usize]
    }

    pub fn coverage(&self, p: f64) -> f64 {
        let mut acc = KahanSum::new();
        for (s, ci) in self.intervals.iter().enumerate() {
            if ci.contains(p) {
                acc.add(binomial_pmf(self.k, s as u64, p));
            }
        }
        acc.value()
    }

    pub fn expected_width(&self, p: f64) -> f64 {
        let mut acc = KahanSum::new();
        for (s, ci) in self.intervals.iter().enumerate() {
            acc.add(binomial_pmf(self.k, s as u64, p) * ci.width());
        }
        acc.value()
    }
}

/// Probability that `method` at sample size `k` covers `p`.
pub fn exact_coverage_fixed(method: Method, k: u64, gamma: f64, p: f64) -> Result<f64, StatsError> {
    check_p(p)?;
    Ok(IntervalTable::new(method, k, gamma)?.coverage(p))
}

/// Expected width of `method`'s interval at sample size `k`.
pub fn expected_width_fixed(method: Method, k: u64, gamma: f64, p: f64) -> Result<f64, StatsError> {
    check_p(p)?;
    Ok(IntervalTable::new(method, k, gamma)?.expected_width(p))
}

pub fn fixed_coverage_curve(
    method: Method,
    k: u64,
    gamma: f64,
    ps: &[f64],
    with_width: bool,
    workers: usize,
) -> Result<CoverageCurve, StatsError> {
    for &p in ps {
        check_p(p)?;
    }
    let table = IntervalTable::new(method, k, gamma)?;
    let points = parallel_map(ps.len() as u64, workers, |i| {
        let p = ps[i as usize];
        CurvePoint {
            p,
            coverage: table.coverage(p),
            expected_width: with_width.then(|| table.expected_width(p)),
        }
    });
    Ok(CoverageCurve {
        method,
        k,
        gamma,
        points,
    })
}

/// Exact coverage of a fixed-k mean method on a two-point distribution
/// taking `high` with probability `p` and `low` otherwise.
pub fn exact_two_point_coverage(
    method: Method,
    low: f64,
    high: f64,
    p: f64,
    k: u64,
    gamma: f64,
    support: Option<SupportBounds>,
) -> Result<f64, StatsError> {
    check_p(p)?;
    let mean = low + p * (high - low);
    let mut acc = KahanSum::new();
    for s in 0..=k {
        let mut values = vec![low; (k - s) as usize];
        values.resize(k as usize, high);
        let batch = SampleBatch::new(values).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
        if batch_interval(method, &batch, support, gamma)?.contains(mean) {
            acc.add(binomial_pmf(k, s, p));
        }
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPoint {
    pub successes: u64,
    pub trials: u64,
    pub interval: ConfidenceInterval,
}

/// Where a sequential procedure stops, independent of `p`: the first-stop
/// points of the lattice up to `k_max`.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    pub method: Method,
    pub epsilon: f64,
    pub gamma: f64,
    pub min_k: u64,
    pub k_max: u64,
    /// Ordered by trials, then successes.
    pub points: Vec<StopPoint>,
    /// Last layer that still has live states, capped at `k_max`.
    last_layer: u64,
}

impl StoppingRule {
    pub fn new(method: Method, epsilon: f64, gamma: f64, min_k: u64, k_max: u64) -> Result<Self, StatsError> {
        if k_max < min_k {
            return Err(StatsError::InvalidArgument(format!("k_max {k_max} below min_k {min_k}")));
        }
        let cr = ChowRobbins::new(epsilon, gamma, min_k.max(1))?;
        let plan = match method {
            Method::CpPlan => Some(cp_worst_case_sample_size(epsilon, gamma)?),
            Method::ChowRobbins => None,
            other => {
                return Err(StatsError::InvalidArgument(format!("{other} is not a sequential method")));
            }
        };
        let stop = |s: u64, k: u64| -> Result<Option<ConfidenceInterval>, StatsError> {
            match plan {
                Some(n) if k == n => Ok(Some(clopper_pearson_interval(BinomialObservation::new(s, k)?, gamma)?)),
                Some(_) => Ok(None),
                None => {
                    let ci = cr.binomial_interval(s, k);
                    Ok(cr.should_stop(&ci, k).then_some(ci))
                }
            }
        };
        let mut points = Vec::new();
        let mut live = vec![true];
        let mut last_layer = 0;
        for k in 1..=k_max {
            let mut next = vec![false; k as usize + 1];
            let mut any = false;
            for s in 0..=k as usize {
                let reachable = (s < live.len() && live[s]) || (s > 0 && live[s - 1]);
                if !reachable {
                    continue;
                }
                match stop(s as u64, k)? {
                    Some(mut interval) => {
                        interval.method = method;
                        interval.soundness = method.soundness();
                        points.push(StopPoint {
                            successes: s as u64,
                            trials: k,
                            interval,
                        });
                    }
                    None => {
                        next[s] = true;
                        any = true;
                    }
                }
            }
            live = next;
            last_layer = k;
            if !any {
                break;
            }
        }
        Ok(Self {
            method,
            epsilon,
            gamma,
            min_k,
            k_max,
            points,
            last_layer,
        })
    }

    /// Reach probabilities of every stopping point at success probability `p`.
    pub fn boundary(&self, p: f64) -> Result<StoppingBoundary, StatsError> {
        check_p(p)?;
        let q = 1.0 - p;
        let n = self.last_layer as usize;
        let mut mass = vec![0.0f64; n + 2];
        mass[0] = 1.0;
        let mut reach = Vec::with_capacity(self.points.len());
        let mut idx = 0;
        for k in 1..=n {
            for s in (1..=k).rev() {
                mass[s] = mass[s] * q + mass[s - 1] * p;
            }
            mass[0] *= q;
            while idx < self.points.len() && self.points[idx].trials == k as u64 {
                let s = self.points[idx].successes as usize;
                reach.push(mass[s]);
                mass[s] = 0.0;
                idx += 1;
            }
        }
        let residual: KahanSum = mass.iter().copied().collect();
        let residual = residual.value();
        Ok(StoppingBoundary {
            p,
            k_max: self.k_max,
            reach,
            residual,
            warning: residual > RESIDUAL_WARNING,
        })
    }
}

/// Stopping points of a [`StoppingRule`] weighted by their reach
/// probability at one `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingBoundary {
    pub p: f64,
    pub k_max: u64,
    /// Parallel to [`StoppingRule::points`].
    pub reach: Vec<f64>,
    /// Mass still undecided after `k_max`.
    pub residual: f64,
    pub warning: bool,
}

impl StoppingBoundary {
    pub fn total_mass(&self) -> f64 {
        let mut s: KahanSum = self.reach.iter().copied().collect();
        s.add(self.residual);
        s.value()
    }
}

pub fn stopping_boundary(
    method: Method,
    epsilon: f64,
    gamma: f64,
    p: f64,
    k_max: u64,
    min_k: u64,
) -> Result<(StoppingRule, StoppingBoundary), StatsError> {
    let rule = StoppingRule::new(method, epsilon, gamma, min_k, k_max)?;
    let b = rule.boundary(p)?;
    Ok((rule, b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialPoint {
    pub p: f64,
    pub coverage: f64,
    pub expected_samples: f64,
    pub residual: f64,
}

fn evaluate(rule: &StoppingRule, p: f64) -> Result<SequentialPoint, StatsError> {
    let b = rule.boundary(p)?;
    let mut coverage = KahanSum::new();
    let mut samples = KahanSum::new();
    for (pt, &w) in rule.points.iter().zip(&b.reach) {
        if pt.interval.contains(p) {
            coverage.add(w);
        }
        samples.add(w * pt.trials as f64);
    }
    Ok(SequentialPoint {
        p,
        coverage: coverage.value(),
        expected_samples: samples.value(),
        residual: b.residual,
    })
}

/// Coverage and expected sample count of a sequential method at `p`. The
/// residual is reported separately and never counted as coverage.
pub fn sequential_coverage_and_cost(
    method: Method,
    epsilon: f64,
    gamma: f64,
    p: f64,
    k_max: u64,
    min_k: u64,
) -> Result<SequentialPoint, StatsError> {
    evaluate(&StoppingRule::new(method, epsilon, gamma, min_k, k_max)?, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialCurve {
    pub method: Method,
    pub epsilon: f64,
    pub gamma: f64,
    pub points: Vec<SequentialPoint>,
}

impl SequentialCurve {
    pub fn min_coverage(&self) -> f64 {
        self.points.iter().map(|pt| pt.coverage).fold(f64::INFINITY, f64::min)
    }

    pub fn mean_coverage(&self) -> f64 {
        let s: KahanSum = self.points.iter().map(|pt| pt.coverage).collect();
        s.value() / self.points.len() as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|pt| pt.residual).fold(0.0, f64::max)
    }
}

pub fn sequential_coverage_curve(
    method: Method,
    epsilon: f64,
    gamma: f64,
    ps: &[f64],
    k_max: u64,
    min_k: u64,
    workers: usize,
) -> Result<SequentialCurve, StatsError> {
    let rule = StoppingRule::new(method, epsilon, gamma, min_k, k_max)?;
    let points = parallel_map(ps.len() as u64, workers, |i| evaluate(&rule, ps[i as usize]))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SequentialCurve {
        method,
        epsilon,
        gamma,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalCoverage {
    pub estimate: f64,
    pub misses: u64,
    pub m: u64,
    /// Clopper-Pearson interval on the coverage probability itself.
    pub meta: ConfidenceInterval,
}

/// Runs `m` independent fixed-k analyses and counts how often the interval
/// misses `reference`. Repetition `j` uses runs `j·k .. (j+1)·k` of the
/// seed's stream.
#[allow(clippy::too_many_arguments)]
pub fn empirical_coverage(
    model: &Dtmc,
    prop: &PropertySpec,
    method: Method,
    support: Option<SupportBounds>,
    gamma: f64,
    k: u64,
    m: u64,
    reference: f64,
    cfg: &RunConfig,
) -> Result<EmpiricalCoverage, AnalysisError> {
    if m == 0 {
        return Err(StatsError::InvalidArgument("need at least one repetition".into()).into());
    }
    if !reference.is_finite() {
        return Err(StatsError::InvalidArgument(format!("reference value {reference} is not finite")).into());
    }
    let hits = parallel_map(m, cfg.workers, |j| -> Result<bool, AnalysisError> {
        let rep = RunConfig {
            run_offset: cfg.run_offset.wrapping_add(j.wrapping_mul(k)),
            workers: 1,
            ..*cfg
        };
        let batch = run_batch(model, prop, k, &rep)?;
        Ok(batch_interval(method, &batch, support, gamma)?.contains(reference))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let covered = hits.iter().filter(|&&h| h).count() as u64;
    let meta = clopper_pearson_interval(BinomialObservation::new(covered, m)?, gamma)?;
    Ok(EmpiricalCoverage {
        estimate: covered as f64 / m as f64,
        misses: m - covered,
        m,
        meta,
    })
}

/// `p,coverage[,expected_width]`.
pub fn write_fixed_csv<W: Write>(out: W, curve: &CoverageCurve) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_width = curve.points.first().is_some_and(|pt| pt.expected_width.is_some());
    if with_width {
        w.write_record(["p", "coverage", "expected_width"])?;
    } else {
        w.write_record(["p", "coverage"])?;
    }
    for pt in &curve.points {
        let mut rec = vec![pt.p.to_string(), pt.coverage.to_string()];
        if let Some(width) = pt.expected_width {
            rec.push(width.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `p,coverage,expected_samples,residual`.
pub fn write_sequential_csv<W: Write>(out: W, curve: &SequentialCurve) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "coverage", "expected_samples", "residual"])?;
    for pt in &curve.points {
        w.write_record([
            pt.p.to_string(),
            pt.coverage.to_string(),
            pt.expected_samples.to_string(),
            pt.residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EmpiricalRow {
    pub model: String,
    pub property: String,
    pub method: Method,
    pub k: u64,
    pub result: EmpiricalCoverage,
}

/// `model,property,method,k,m,estimate,meta_lo,meta_hi`.
pub fn write_empirical_csv<W: Write>(out: W, rows: &[EmpiricalRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "property", "method", "k", "m", "estimate", "meta_lo", "meta_hi"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.property.clone(),
            r.method.to_string(),
            r.k.to_string(),
            r.result.m.to_string(),
            r.result.estimate.to_string(),
            r.result.meta.lower.to_string(),
            r.result.meta.upper.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
