//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or numerical failure |
//! | 2 | usage error |
//! | 3 | model or property error |
//! | 4 | no applicable method in the preference list |
//! | 5 | simulation cap hit (step cap, undecided run, stream exhausted) |
//! | 6 | bounding-set horizon infeasible |

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::binomial_ci::{okamoto_sample_size, worst_case_sample_size};
use crate::bounded_mean::{batch_interval, hoeffding_sample_size, SupportBounds};
use crate::coverage_lab::{
    empirical_coverage, fixed_coverage_curve, grid, sequential_coverage_curve, write_empirical_csv,
    write_fixed_csv, write_sequential_csv, EmpiricalRow, DEFAULT_FIXED_GRID, DEFAULT_SEQUENTIAL_GRID,
    RESIDUAL_WARNING,
};
use crate::error::{AnalysisError, HorizonError, ModelError, SimError, StatsError};
use crate::interval::{ConfidenceInterval, Method, Soundness};
use crate::model::{builtin_from_str, parse_model, parse_property, structural_bounds, Dtmc, PropertyKind, PropertySpec};
use crate::reward_bounds::{
    bounding_set_horizon, cumulative_bound, instantaneous_bound, truncated_reach_reward_interval, DEFAULT_Q_MAX,
};
use crate::sequential::{sequential_cp_plan_and_run, ChowRobbins, DEFAULT_MIN_K};
use crate::simulate::{run_batch, RunConfig, SampleBatch, SampleStream, DEFAULT_MAX_STEPS};
use crate::StructuralBounds;

pub const DEFAULT_PREFERENCES: &str = "clopper_pearson,okamoto,dkw,hoeffding,dkw_e_lower";
pub const DEFAULT_SEQUENTIAL_PREFERENCES: &str = "clopper_pearson,okamoto,hoeffding";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Model(String),
    #[error("no applicable method among [{prefs}] for {property}")]
    NoMethod { prefs: String, property: String },
    #[error("{0}")]
    Simulation(String),
    #[error("{0}")]
    Horizon(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Numeric(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Model(_) => 3,
            CliError::NoMethod { .. } => 4,
            CliError::Simulation(_) => 5,
            CliError::Horizon(_) => 6,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Model(m) => m.into(),
            SimError::EmptyBatch => CliError::Usage(e.to_string()),
            other => CliError::Simulation(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InvalidArgument(_) | StatsError::TooFewSamples { .. } => CliError::Usage(e.to_string()),
            // a sample outside the derived support means the declared bounds are wrong
            StatsError::OutsideSupport { .. } => CliError::Model(e.to_string()),
            StatsError::StreamExhausted(_) => CliError::Simulation(e.to_string()),
            StatsError::Numeric(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<HorizonError> for CliError {
    fn from(e: HorizonError) -> Self {
        match e {
            HorizonError::NonPositiveEpsilon(_) => CliError::Usage(e.to_string()),
            HorizonError::BadPmin(_) => CliError::Model(e.to_string()),
            HorizonError::Infeasible { .. } | HorizonError::Overflow { .. } => CliError::Horizon(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Model(e) => e.into(),
            AnalysisError::Sim(e) => e.into(),
            AnalysisError::Stats(e) => e.into(),
            AnalysisError::Horizon(e) => e.into(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if g > 0.0 && g < 1.0 {
        Ok(g)
    } else {
        Err(format!("confidence level must lie in (0, 1), got {g}"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_support(s: &str) -> Result<SupportBounds, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b, got {s:?}"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("not a number: {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("not a number: {b:?}"))?;
    SupportBounds::new(a, b).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Debug, Parser)]
#[command(name = "soundsmc", version, about = "Statistical model checking with sound confidence intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a property of a model.
    Check(CheckArgs),
    /// Print the sample count a fixed-k method needs for half-width epsilon.
    Plan(PlanArgs),
    /// Coverage probability curves and empirical coverage.
    #[command(subcommand)]
    Coverage(CoverageCommand),
    /// Bounding-set horizon for unbounded reachability rewards.
    BoundHorizon(HorizonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Fixed,
    Sequential,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Fixed => "fixed",
            Mode::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Per-run step cap for unbounded properties.
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub max_steps: u64,
}

impl SimArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            max_steps: self.max_steps,
            run_offset: 0,
            workers: self.workers.max(1),
        }
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Model file, or `builtin:<family>[:params]` such as `builtin:fig2:1000,1`.
    #[arg(long)]
    pub model: String,
    /// Property file or inline JSON.
    #[arg(long)]
    pub prop: String,
    /// Comma-separated method names; the first applicable one is used.
    #[arg(long)]
    pub method_prefs: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Fixed)]
    pub mode: Mode,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long, value_parser = parse_positive)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.95, value_parser = parse_gamma)]
    pub gamma: f64,
    /// Enables the truncated DKW interval for unbounded reachability rewards.
    #[arg(long, value_parser = parse_positive)]
    pub epsilon_prime: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MIN_K)]
    pub min_k: u64,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// okamoto, clopper_pearson, wilson_cc or hoeffding.
    #[arg(value_parser = parse_method)]
    pub method: Method,
    #[arg(value_parser = parse_positive)]
    pub eps: f64,
    #[arg(default_value_t = 0.95, value_parser = parse_gamma)]
    pub gamma: f64,
    /// Support `a,b` for Hoeffding.
    #[arg(long, value_parser = parse_support)]
    pub support: Option<SupportBounds>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CoverageCommand {
    /// Exact coverage of a fixed-k proportion method over a p grid.
    Fixed(FixedCoverageArgs),
    /// Exact coverage and expected cost of a sequential method over a p grid.
    Sequential(SequentialCoverageArgs),
    /// Coverage estimated from repeated analyses of a model.
    Empirical(EmpiricalCoverageArgs),
}

#[derive(Debug, Args)]
pub struct FixedCoverageArgs {
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub k: u64,
    #[arg(long, default_value_t = 0.95, value_parser = parse_gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_FIXED_GRID)]
    pub grid_points: usize,
    /// Add the expected interval width column.
    #[arg(long)]
    pub width: bool,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SequentialCoverageArgs {
    /// chow_robbins or clopper_pearson (the precomputed plan).
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long, value_parser = parse_positive)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.95, value_parser = parse_gamma)]
    pub gamma: f64,
    #[arg(long, default_value_t = DEFAULT_SEQUENTIAL_GRID)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 5000)]
    pub k_max: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_K)]
    pub min_k: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmpiricalCoverageArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub prop: String,
    #[arg(long, value_parser = parse_method)]
    pub method: Method,
    #[arg(long)]
    pub k: u64,
    /// Number of repeated analyses.
    #[arg(long)]
    pub m: u64,
    /// True value the intervals are checked against.
    #[arg(long)]
    pub reference: f64,
    #[arg(long, default_value_t = 0.95, value_parser = parse_gamma)]
    pub gamma: f64,
    /// Support `a,b`; derived from the model's reward bounds when omitted.
    #[arg(long, value_parser = parse_support)]
    pub support: Option<SupportBounds>,
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct HorizonArgs {
    #[arg(long)]
    pub states: u64,
    #[arg(long)]
    pub rmax: f64,
    #[arg(long)]
    pub pmin: f64,
    #[arg(long)]
    pub epsilon_prime: f64,
    #[arg(long, default_value_t = DEFAULT_Q_MAX)]
    pub q_max: u64,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Check(a) => cmd_check(a, out),
        Command::Plan(a) => cmd_plan(a, out),
        Command::Coverage(CoverageCommand::Fixed(a)) => cmd_coverage_fixed(a, out),
        Command::Coverage(CoverageCommand::Sequential(a)) => cmd_coverage_sequential(a, out),
        Command::Coverage(CoverageCommand::Empirical(a)) => cmd_coverage_empirical(a, out),
        Command::BoundHorizon(a) => cmd_bound_horizon(a, out),
    }
}

pub fn load_model(spec: &str) -> Result<Dtmc, CliError> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        return Ok(builtin_from_str(rest)?);
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
    Ok(parse_model(&text)?)
}

pub fn load_property(spec: &str) -> Result<PropertySpec, CliError> {
    if spec.trim_start().starts_with('{') {
        return Ok(parse_property(spec)?);
    }
    let text = fs::read_to_string(spec).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
    Ok(parse_property(&text)?)
}

fn csv_file(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// How the sampled values of a property are distributed, for picking
/// applicable methods.
#[derive(Debug, Clone, Copy, PartialEq)]
enum ValueClass {
    Probability,
    Bounded(SupportBounds),
    Unbounded,
}

fn value_class(prop: &PropertySpec, bounds: &StructuralBounds) -> Result<ValueClass, CliError> {
    let bounded = |b: f64| -> Result<ValueClass, CliError> { Ok(ValueClass::Bounded(SupportBounds::new(0.0, b)?)) };
    match prop.kind {
        PropertyKind::PReach | PropertyKind::PReachBounded => Ok(ValueClass::Probability),
        PropertyKind::ECumulative | PropertyKind::EReachBounded => {
            bounded(cumulative_bound(prop.bound.unwrap_or(0), bounds))
        }
        PropertyKind::EInstant | PropertyKind::EReachInstant => bounded(instantaneous_bound(bounds)),
        PropertyKind::EReach => Ok(ValueClass::Unbounded),
    }
}

fn support_of(class: ValueClass) -> Option<SupportBounds> {
    match class {
        ValueClass::Probability => Some(SupportBounds { a: 0.0, b: 1.0 }),
        ValueClass::Bounded(s) => Some(s),
        ValueClass::Unbounded => None,
    }
}

fn applicable(method: Method, class: ValueClass, mode: Mode, epsilon_prime: bool) -> bool {
    use Method::*;
    match (mode, class) {
        (Mode::Fixed, ValueClass::Probability) => !matches!(method, ChowRobbins | CpPlan | TruncatedDkw),
        (Mode::Fixed, ValueClass::Bounded(_)) => {
            matches!(method, Normal | StudentT | Hoeffding | Dkw | DkwELower)
        }
        (Mode::Fixed, ValueClass::Unbounded) => {
            method == DkwELower || (epsilon_prime && matches!(method, Dkw | TruncatedDkw))
        }
        (Mode::Sequential, ValueClass::Probability) => {
            matches!(method, ClopperPearson | CpPlan | Okamoto | WilsonCc | Hoeffding | ChowRobbins)
        }
        (Mode::Sequential, ValueClass::Bounded(_)) => matches!(method, Hoeffding | ChowRobbins),
        (Mode::Sequential, ValueClass::Unbounded) => false,
    }
}

pub fn parse_preferences(list: &str) -> Result<Vec<Method>, CliError> {
    let methods = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().map_err(CliError::Usage))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Usage("empty method preference list".into()));
    }
    Ok(methods)
}

/// Outcome of `check`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub model: String,
    pub property: String,
    pub method: Method,
    pub mode: Mode,
    pub samples: u64,
    pub gamma: f64,
    pub estimate: f64,
    pub interval: ConfidenceInterval,
    pub seconds: f64,
}

impl CheckReport {
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "property", "method", "mode", "k", "gamma", "estimate", "lo", "hi", "sound", "seconds"])?;
        w.write_record([
            self.model.clone(),
            self.property.clone(),
            self.method.to_string(),
            self.mode.as_str().to_string(),
            self.samples.to_string(),
            self.gamma.to_string(),
            self.estimate.to_string(),
            self.interval.lower.to_string(),
            self.interval.upper.to_string(),
            self.interval.soundness.to_string(),
            format!("{:.3}", self.seconds),
        ])?;
        w.flush()?;
        Ok(())
    }
}

pub fn check(a: &CheckArgs) -> Result<CheckReport, CliError> {
    let model = load_model(&a.model)?;
    let prop = load_property(&a.prop)?;
    prop.check_against(&model)?;
    let (bounds, _) = structural_bounds(&model);
    let class = value_class(&prop, &bounds)?;
    let default_prefs = match a.mode {
        Mode::Fixed => DEFAULT_PREFERENCES,
        Mode::Sequential => DEFAULT_SEQUENTIAL_PREFERENCES,
    };
    let prefs_text = a.method_prefs.as_deref().unwrap_or(default_prefs);
    let prefs = parse_preferences(prefs_text)?;
    let method = prefs
        .iter()
        .copied()
        .find(|&m| applicable(m, class, a.mode, a.epsilon_prime.is_some()))
        .ok_or_else(|| CliError::NoMethod {
            prefs: prefs_text.to_string(),
            property: prop.describe(),
        })?;
    let cfg = a.sim.config();
    let started = Instant::now();
    let (interval, estimate, samples) = match a.mode {
        Mode::Fixed => {
            let k = a.k.ok_or_else(|| CliError::Usage("fixed mode needs --k".into()))?;
            if class == ValueClass::Unbounded && matches!(method, Method::Dkw | Method::TruncatedDkw) {
                let eps_prime = a.epsilon_prime.unwrap_or_default();
                let (ci, _, batch) =
                    truncated_reach_reward_interval(&model, &prop, &bounds, eps_prime, k, a.gamma, &cfg, DEFAULT_Q_MAX)?;
                (ci, batch.mean(), k)
            } else {
                let batch = run_batch(&model, &prop, k, &cfg)?;
                let ci = batch_interval(method, &batch, support_of(class), a.gamma)?;
                (ci, batch.mean(), k)
            }
        }
        Mode::Sequential => {
            let eps = a.eps.ok_or_else(|| CliError::Usage("sequential mode needs --eps".into()))?;
            sequential_check(&model, &prop, method, class, eps, a.gamma, a.min_k, cfg)?
        }
    };
    Ok(CheckReport {
        model: a.model.clone(),
        property: prop.describe(),
        method: interval.method,
        mode: a.mode,
        samples,
        gamma: a.gamma,
        estimate,
        interval,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn fixed_plan_run(
    model: &Dtmc,
    prop: &PropertySpec,
    method: Method,
    support: Option<SupportBounds>,
    k: u64,
    gamma: f64,
    cfg: &RunConfig,
) -> Result<(ConfidenceInterval, f64, u64), CliError> {
    let batch = run_batch(model, prop, k, cfg)?;
    let ci = batch_interval(method, &batch, support, gamma)?;
    Ok((ci, batch.mean(), k))
}

fn stream_mean(values: &[f64]) -> f64 {
    SampleBatch::new(values.to_vec()).map(|b| b.mean()).unwrap_or(f64::NAN)
}

#[allow(clippy::too_many_arguments)]
fn sequential_check(
    model: &Dtmc,
    prop: &PropertySpec,
    method: Method,
    class: ValueClass,
    eps: f64,
    gamma: f64,
    min_k: u64,
    cfg: RunConfig,
) -> Result<(ConfidenceInterval, f64, u64), CliError> {
    let support = support_of(class);
    match method {
        Method::ClopperPearson | Method::CpPlan => {
            let mut stream = SampleStream::new(model, prop, cfg)?;
            let mut seen = Vec::new();
            let result = sequential_cp_plan_and_run(stream.by_ref().inspect(|&v| seen.push(v)), eps, gamma);
            if let Some(e) = stream.take_error() {
                return Err(e.into());
            }
            let (ci, k) = result?;
            Ok((ci, stream_mean(&seen), k))
        }
        Method::Okamoto => {
            let k = okamoto_sample_size(eps, gamma)?;
            fixed_plan_run(model, prop, method, support, k, gamma, &cfg)
        }
        Method::WilsonCc => {
            let k = worst_case_sample_size(method, eps, gamma)?;
            fixed_plan_run(model, prop, method, support, k, gamma, &cfg)
        }
        Method::Hoeffding => {
            let support = support.ok_or_else(|| CliError::Usage("hoeffding needs bounded support".into()))?;
            let k = hoeffding_sample_size(eps, support, gamma)?;
            fixed_plan_run(model, prop, method, Some(support), k, gamma, &cfg)
        }
        Method::ChowRobbins => {
            let support = support.ok_or_else(|| CliError::Usage("chow_robbins needs bounded support".into()))?;
            let mut stream = SampleStream::new(model, prop, cfg)?;
            let mut seen = Vec::new();
            let rule = ChowRobbins::new(eps, gamma, min_k)?.with_clamp(support.a, support.b);
            let result = rule.run(stream.by_ref().inspect(|&v| seen.push(v)));
            if let Some(e) = stream.take_error() {
                return Err(e.into());
            }
            let (ci, k) = result?;
            Ok((ci, stream_mean(&seen), k))
        }
        other => Err(CliError::Usage(format!("{other} has no sequential form"))),
    }
}

fn describe_soundness(s: Soundness) -> &'static str {
    match s {
        Soundness::Sound => "sound",
        Soundness::Unsound => "NOT sound",
        Soundness::LimitPac => "limit-PAC lower bound",
        Soundness::SoundWithHorizon => "sound given the bounding-set horizon",
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let r = check(a)?;
    writeln!(out, "model:    {}", r.model)?;
    writeln!(out, "property: {}", r.property)?;
    writeln!(out, "method:   {} ({})", r.method, describe_soundness(r.interval.soundness))?;
    writeln!(out, "mode:     {}", r.mode.as_str())?;
    writeln!(out, "samples:  {}", r.samples)?;
    writeln!(out, "estimate: {}", r.estimate)?;
    if r.interval.soundness == Soundness::LimitPac {
        writeln!(out, "lower bound: {} (gamma = {})", r.interval.lower, r.gamma)?;
    } else {
        writeln!(out, "interval: [{}, {}] (gamma = {})", r.interval.lower, r.interval.upper, r.gamma)?;
    }
    writeln!(out, "time:     {:.3} s", r.seconds)?;
    if let Some(path) = &a.csv_out {
        r.write_csv(csv_file(path)?)?;
    }
    Ok(())
}

pub fn plan(method: Method, eps: f64, gamma: f64, support: Option<SupportBounds>) -> Result<u64, CliError> {
    match method {
        Method::Okamoto => Ok(okamoto_sample_size(eps, gamma)?),
        Method::ClopperPearson | Method::CpPlan | Method::WilsonCc => {
            let m = if method == Method::CpPlan { Method::ClopperPearson } else { method };
            Ok(worst_case_sample_size(m, eps, gamma)?)
        }
        Method::Hoeffding => {
            let support = support.unwrap_or(SupportBounds { a: 0.0, b: 1.0 });
            Ok(hoeffding_sample_size(eps, support, gamma)?)
        }
        other => Err(CliError::Usage(format!("cannot plan a sample size for {other}"))),
    }
}

fn cmd_plan(a: &PlanArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let k = plan(a.method, a.eps, a.gamma, a.support)?;
    writeln!(out, "{k}")?;
    if let Some(path) = &a.csv_out {
        let mut w = csv::Writer::from_writer(csv_file(path)?);
        w.write_record(["method", "epsilon", "gamma", "k"])?;
        w.write_record([a.method.to_string(), a.eps.to_string(), a.gamma.to_string(), k.to_string()])?;
        w.flush()?;
    }
    Ok(())
}

fn check_grid(n: usize) -> Result<Vec<f64>, CliError> {
    if n == 0 {
        return Err(CliError::Usage("grid needs at least one point".into()));
    }
    Ok(grid(n))
}

fn cmd_coverage_fixed(a: &FixedCoverageArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    let ps = check_grid(a.grid_points)?;
    let curve = fixed_coverage_curve(a.method, a.k, a.gamma, &ps, a.width, a.workers.max(1))?;
    writeln!(out, "method: {}, k = {}, gamma = {}", curve.method, curve.k, curve.gamma)?;
    writeln!(out, "min coverage:  {}", curve.min_coverage())?;
    writeln!(out, "mean coverage: {}", curve.mean_coverage())?;
    if let Some(path) = &a.csv_out {
        write_fixed_csv(csv_file(path)?, &curve)?;
    }
    Ok(())
}

fn cmd_coverage_sequential(a: &SequentialCoverageArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let method = match a.method {
        Method::ClopperPearson => Method::CpPlan,
        m => m,
    };
    let ps = check_grid(a.grid_points)?;
    let curve = sequential_coverage_curve(method, a.eps, a.gamma, &ps, a.k_max, a.min_k, a.workers.max(1))?;
    let samples = curve.points.iter().map(|pt| pt.expected_samples);
    let (lo, hi) = samples.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    writeln!(out, "method: {}, eps = {}, gamma = {}", curve.method, curve.epsilon, curve.gamma)?;
    writeln!(out, "min coverage:  {}", curve.min_coverage())?;
    writeln!(out, "mean coverage: {}", curve.mean_coverage())?;
    writeln!(out, "expected samples: {lo} .. {hi}")?;
    writeln!(out, "max residual:  {}", curve.max_residual())?;
    if curve.max_residual() > RESIDUAL_WARNING {
        writeln!(out, "warning: k_max = {} leaves undecided mass; raise --k-max", a.k_max)?;
    }
    if let Some(path) = &a.csv_out {
        write_sequential_csv(csv_file(path)?, &curve)?;
    }
    Ok(())
}

fn cmd_coverage_empirical(a: &EmpiricalCoverageArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let prop = load_property(&a.prop)?;
    prop.check_against(&model)?;
    let support = match a.support {
        Some(s) => Some(s),
        None => {
            let (bounds, _) = structural_bounds(&model);
            support_of(value_class(&prop, &bounds)?)
        }
    };
    let result = empirical_coverage(&model, &prop, a.method, support, a.gamma, a.k, a.m, a.reference, &a.sim.config())?;
    writeln!(out, "method: {}, k = {}, m = {}", a.method, a.k, a.m)?;
    writeln!(out, "coverage estimate: {} ({} misses)", result.estimate, result.misses)?;
    writeln!(out, "meta interval: [{}, {}]", result.meta.lower, result.meta.upper)?;
    if let Some(path) = &a.csv_out {
        let row = EmpiricalRow {
            model: a.model.clone(),
            property: prop.describe(),
            method: a.method,
            k: a.k,
            result,
        };
        write_empirical_csv(csv_file(path)?, &[row])?;
    }
    Ok(())
}

fn cmd_bound_horizon(a: &HorizonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(a.epsilon_prime > 0.0) {
        return Err(CliError::Usage(format!("--epsilon-prime must be positive, got {}", a.epsilon_prime)));
    }
    let bounds = StructuralBounds::new(a.states, a.rmax, a.pmin)?;
    let r = bounding_set_horizon(&bounds, a.epsilon_prime, a.q_max)?;
    writeln!(out, "q: {}", r.q)?;
    writeln!(out, "horizon: {}", r.horizon)?;
    writeln!(out, "reward cap: {}", r.path_reward_cap)?;
    writeln!(out, "tail weight: {}", r.tail_weight_bound)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("soundsmc").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn plan_examples() {
        assert_eq!(run_args(&["plan", "okamoto", "0.01", "0.95"]).1, "18445\n");
        assert_eq!(run_args(&["plan", "clopper_pearson", "0.01", "0.95"]).1, "9701\n");
        assert_eq!(run_args(&["plan", "hoeffding", "0.05", "0.9", "--support", "0,1"]).1, "600\n");
        assert_eq!(run_args(&["plan", "wald", "0.05", "0.9"]).0, 2);
        assert_eq!(run_args(&["plan", "chen", "0.05", "0.9"]).0, 2);
    }

    #[test]
    fn horizon_examples() {
        let (code, out, _) = run_args(&["bound-horizon", "--states", "2", "--rmax", "1", "--pmin", "0.5", "--epsilon-prime", "1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("q: 17\nhorizon: 34\n"), "{out}");
        let args = ["bound-horizon", "--states", "5", "--rmax", "1", "--pmin", "0.05", "--epsilon-prime", "0"];
        assert_eq!(run_args(&args).0, 2);
        let args = ["bound-horizon", "--states", "5", "--rmax", "1", "--pmin", "0.05", "--epsilon-prime", "1", "--q-max", "1000"];
        assert_eq!(run_args(&args).0, 6);
    }

    #[test]
    fn no_applicable_method() {
        let (code, _, err) = run_args(&[
            "check", "--model", "builtin:fig3", "--prop", r#"{"kind":"e_reach","goal":"goal"}"#,
            "--method-prefs", "okamoto", "--k", "100",
        ]);
        assert_eq!(code, 4, "{err}");
    }

    #[test]
    fn bad_property_is_code_3() {
        let (code, _, _) = run_args(&["check", "--model", "builtin:fig3", "--prop", r#"{"kind":"p_reach","goal":"nope"}"#, "--k", "10"]);
        assert_eq!(code, 3);
        let (code, _, _) = run_args(&["check", "--model", "builtin:fig3", "--prop", r#"{"kind":"p_reach"}"#, "--k", "10"]);
        assert_eq!(code, 3);
    }

    #[test]
    fn step_cap_is_code_5() {
        let (code, _, _) = run_args(&[
            "check", "--model", "builtin:chain:50,0.01", "--prop", r#"{"kind":"e_reach","goal":"goal"}"#,
            "--k", "10", "--max-steps", "20",
        ]);
        assert_eq!(code, 5);
    }

    #[test]
    fn check_reports_limit_pac_lower_bound() {
        let (code, out, _) = run_args(&["check", "--model", "builtin:fig3", "--prop", r#"{"kind":"e_reach","goal":"goal"}"#, "--k", "1000"]);
        assert_eq!(code, 0);
        assert!(out.contains("dkw_e_lower (limit-PAC lower bound)"), "{out}");
    }

    #[test]
    fn probability_methods_need_fixed_k() {
        let (code, _, _) = run_args(&["check", "--model", "builtin:fig3", "--prop", r#"{"kind":"p_reach","goal":"goal"}"#]);
        assert_eq!(code, 2);
    }
}
