//! Statistical model checking of discrete-time Markov chains with sound
//! confidence intervals.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binomial_ci;
pub mod bounded_mean;
pub mod cli;
pub mod coverage_lab;
pub mod error;
pub mod interval;
pub mod model;
pub mod reward_bounds;
pub mod sequential;
pub mod simulate;
pub mod special;

pub use error::{AnalysisError, HorizonError, ModelError, NumericError, SimError, StatsError};
pub use interval::{ConfidenceInterval, Method, Soundness};
pub use model::{Dtmc, PropertyKind, PropertySpec, StructuralBounds};
pub use simulate::{RunConfig, SampleBatch};
