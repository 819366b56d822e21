use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("{what}: argument out of domain ({detail})")]
    Domain { what: &'static str, detail: String },
    #[error("{what}: failed to converge ({detail})")]
    NoConvergence { what: &'static str, detail: String },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid property: {0}")]
    Property(String),
    #[error("unknown label {0:?}")]
    MissingLabel(String),
    #[error("unknown built-in model family {0:?}")]
    UnknownFamily(String),
    #[error("invalid parameters for {family}: {reason}")]
    BadParams { family: String, reason: String },
}

impl ModelError {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        ModelError::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("run {run}: step cap of {cap} exceeded before the property was decided")]
    StepCap { run: u64, cap: u64 },
    #[error("run {run}: reached absorbing non-goal state {state}; the goal is not reached almost surely")]
    GoalUnreachable { run: u64, state: usize },
    #[error("step bound {bound} exceeds the configured step cap {cap}")]
    BoundAboveCap { bound: u64, cap: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("sample count must be at least 1")]
    EmptyBatch,
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("sample {value} lies outside the support [{a}, {b}]")]
    OutsideSupport { value: f64, a: f64, b: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample stream exhausted after {0} samples without a decision")]
    StreamExhausted(u64),
}

#[derive(Debug, Error)]
pub enum HorizonError {
    #[error("epsilon' must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("minimum probability bound must lie in (0, 1) for a finite horizon, got {0}")]
    BadPmin(f64),
    #[error("required episode count exceeds q_max = {q_max}")]
    Infeasible { q_max: u64 },
    #[error("horizon q * |S| = {q} * {states} overflows")]
    Overflow { q: u64, states: u64 },
}

/// Any failure of a full simulate-then-estimate analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
}
