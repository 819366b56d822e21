//! Path sampling: the `sample(M, prop)` contract.
//!
//! Each run `i` draws from its own generator seeded from `(seed, offset + i)`,
//! so any partition of the runs over workers produces the same values.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::error::{ModelError, SimError};
use crate::model::{Dtmc, PropertyKind, PropertySpec};

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub seed: u64,
    pub max_steps: u64,
    /// Added to every run index; lets callers carve disjoint substreams
    /// out of one seed.
    pub run_offset: u64,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
            run_offset: 0,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for run `index` under `seed`.
pub fn run_rng(seed: u64, index: u64) -> Xoshiro256PlusPlus {
    let key = splitmix64(seed) ^ splitmix64(index.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ 0x5851_F42D_4C95_7F2D);
    Xoshiro256PlusPlus::seed_from_u64(key)
}

/// Evaluates `f(0..n)` on `workers` threads, preserving index order.
pub fn parallel_map<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// A property bound to a model, ready to sample.
#[derive(Debug, Clone)]
pub struct PathSampler<'m> {
    model: &'m Dtmc,
    kind: PropertyKind,
    goal: Vec<bool>,
    bound: u64,
    max_steps: u64,
}

impl<'m> PathSampler<'m> {
    pub fn new(model: &'m Dtmc, prop: &PropertySpec, max_steps: u64) -> Result<Self, SimError> {
        prop.validate()?;
        let goal = match &prop.goal {
            Some(g) => model.label_mask(g)?,
            None => vec![false; model.state_count()],
        };
        let bound = prop.bound.unwrap_or(0);
        if bound > max_steps {
            return Err(SimError::BoundAboveCap {
                bound,
                cap: max_steps,
            });
        }
        Ok(Self {
            model,
            kind: prop.kind,
            goal,
            bound,
            max_steps,
        })
    }

    /// Generates one path and returns the property's value on it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, run: u64) -> Result<f64, SimError> {
        let m = self.model;
        let mut s = m.initial();
        let c = self.bound;
        match self.kind {
            PropertyKind::PReach => {
                let mut steps = 0u64;
                loop {
                    if self.goal[s] {
                        return Ok(1.0);
                    }
                    if m.is_absorbing(s) {
                        return Ok(0.0);
                    }
                    self.check_cap(steps, run)?;
                    s = m.successor(s, rng.random());
                    steps += 1;
                }
            }
            PropertyKind::PReachBounded => {
                for i in 0..=c {
                    if self.goal[s] {
                        return Ok(1.0);
                    }
                    if m.is_absorbing(s) || i == c {
                        break;
                    }
                    s = m.successor(s, rng.random());
                }
                Ok(0.0)
            }
            PropertyKind::ECumulative => {
                let mut acc = 0.0;
                for i in 0..=c {
                    acc += m.reward(s);
                    if m.is_absorbing(s) {
                        acc += m.reward(s) * (c - i) as f64;
                        break;
                    }
                    if i < c {
                        s = m.successor(s, rng.random());
                    }
                }
                Ok(acc)
            }
            PropertyKind::EReach => {
                let mut acc = 0.0;
                let mut steps = 0u64;
                loop {
                    acc += m.reward(s);
                    if self.goal[s] {
                        return Ok(acc);
                    }
                    if m.is_absorbing(s) {
                        return Err(SimError::GoalUnreachable { run, state: s });
                    }
                    self.check_cap(steps, run)?;
                    s = m.successor(s, rng.random());
                    steps += 1;
                }
            }
            PropertyKind::EReachBounded => {
                let mut acc = 0.0;
                for i in 0..=c {
                    acc += m.reward(s);
                    if self.goal[s] {
                        break;
                    }
                    if m.is_absorbing(s) {
                        acc += m.reward(s) * (c - i) as f64;
                        break;
                    }
                    if i < c {
                        s = m.successor(s, rng.random());
                    }
                }
                Ok(acc)
            }
            PropertyKind::EInstant => {
                for _ in 0..c {
                    if m.is_absorbing(s) {
                        break;
                    }
                    s = m.successor(s, rng.random());
                }
                Ok(m.reward(s))
            }
            PropertyKind::EReachInstant => {
                let mut steps = 0u64;
                loop {
                    if self.goal[s] {
                        return Ok(m.reward(s));
                    }
                    if m.is_absorbing(s) {
                        return Err(SimError::GoalUnreachable { run, state: s });
                    }
                    self.check_cap(steps, run)?;
                    s = m.successor(s, rng.random());
                    steps += 1;
                }
            }
        }
    }

    /// Samples run `index` of the substream family described by `cfg`.
    pub fn sample_run(&self, cfg: &RunConfig, index: u64) -> Result<f64, SimError> {
        let run = cfg.run_offset.wrapping_add(index);
        let mut rng = run_rng(cfg.seed, run);
        self.sample(&mut rng, run)
    }

    #[inline]
    fn check_cap(&self, steps: u64, run: u64) -> Result<(), SimError> {
        if steps >= self.max_steps {
            Err(SimError::StepCap {
                run,
                cap: self.max_steps,
            })
        } else {
            Ok(())
        }
    }
}

/// One-shot convenience around [`PathSampler`].
pub fn sample_path_value<R: Rng + ?Sized>(
    model: &Dtmc,
    prop: &PropertySpec,
    rng: &mut R,
) -> Result<f64, SimError> {
    PathSampler::new(model, prop, DEFAULT_MAX_STEPS)?.sample(rng, 0)
}

/// An immutable collection of sample values with cached moments.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    values: Vec<f64>,
    sum: f64,
    sum_sq: f64,
    sorted: OnceLock<Vec<f64>>,
}

impl PartialEq for SampleBatch {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl SampleBatch {
    /// Wraps `values`; every value must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ModelError::Invalid(format!("non-finite sample value {v}")));
        }
        let (sum, sum_sq) = values
            .iter()
            .fold((0.0, 0.0), |(s, q), &v| (s + v, q + v * v));
        Ok(Self {
            values,
            sum,
            sum_sq,
            sorted: OnceLock::new(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.values.len() as f64
    }

    /// Empirical standard deviation with the `k − 1` divisor.
    pub fn std_dev(&self) -> f64 {
        let k = self.values.len() as f64;
        let mean = self.mean();
        // Two-pass for accuracy; the cached sums only serve quick checks.
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (k - 1.0)).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.sorted().first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.sorted().last().copied().unwrap_or(f64::NAN)
    }

    /// Values in ascending order, computed once.
    pub fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| {
            let mut v = self.values.clone();
            v.sort_by(f64::total_cmp);
            v
        })
    }

    /// Number of values equal to 1 when every value is 0 or 1.
    pub fn successes(&self) -> Option<u64> {
        let mut n = 0u64;
        for &v in &self.values {
            if v == 1.0 {
                n += 1;
            } else if v != 0.0 {
                return None;
            }
        }
        Some(n)
    }

    /// Multiset union of two batches.
    pub fn merge(mut self, other: SampleBatch) -> SampleBatch {
        self.values.extend_from_slice(&other.values);
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sorted = OnceLock::new();
        self
    }
}

/// Draws `k` independent samples of `prop` on `model`.
pub fn run_batch(
    model: &Dtmc,
    prop: &PropertySpec,
    k: u64,
    cfg: &RunConfig,
) -> Result<SampleBatch, SimError> {
    if k == 0 {
        return Err(SimError::EmptyBatch);
    }
    let sampler = PathSampler::new(model, prop, cfg.max_steps)?;
    let values = parallel_map(k, cfg.workers, |i| sampler.sample_run(cfg, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampleBatch::new(values)?)
}

/// Endless stream of samples for sequential procedures. Stops at the first
/// simulation error, which is kept in [`SampleStream::error`].
pub struct SampleStream<'m> {
    sampler: PathSampler<'m>,
    cfg: RunConfig,
    next: u64,
    error: Option<SimError>,
}

impl<'m> SampleStream<'m> {
    pub fn new(model: &'m Dtmc, prop: &PropertySpec, cfg: RunConfig) -> Result<Self, SimError> {
        Ok(Self {
            sampler: PathSampler::new(model, prop, cfg.max_steps)?,
            cfg,
            next: 0,
            error: None,
        })
    }

    pub fn drawn(&self) -> u64 {
        self.next
    }

    pub fn take_error(&mut self) -> Option<SimError> {
        self.error.take()
    }
}

impl Iterator for SampleStream<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.error.is_some() {
            return None;
        }
        match self.sampler.sample_run(&self.cfg, self.next) {
            Ok(v) => {
                self.next += 1;
                Some(v)
            }
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}
