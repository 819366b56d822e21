//! Explicit discrete-time Markov chains with state rewards and goal labels.
//!
//! Models are read from a small JSON document:
//!
//! ```json
//! {
//!   "states": 2,
//!   "initial": 0,
//!   "transitions": [[0, 0, 0.5], [0, 1, 0.5], [1, 1, 1.0]],
//!   "rewards": [1.0, 0.0],
//!   "labels": { "goal": [1] },
//!   "declared_bounds": { "states": 2, "rmax": 1.0, "pmin": 0.5 }
//! }
//! ```
//!
//! `declared_bounds` is optional. When present it stands in for the bounds a
//! front-end would derive from model syntax alone, and is what
//! [`structural_bounds`] hands out.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Absolute tolerance on each row's probability sum.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Upper bounds on `|S|` and the maximum reward, and a lower bound on the
/// smallest nonzero transition probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralBounds {
    #[serde(rename = "states")]
    pub state_bound: u64,
    #[serde(rename = "rmax")]
    pub rmax_bound: f64,
    #[serde(rename = "pmin")]
    pub pmin_bound: f64,
}

impl StructuralBounds {
    pub fn new(state_bound: u64, rmax_bound: f64, pmin_bound: f64) -> Result<Self, ModelError> {
        let b = Self {
            state_bound,
            rmax_bound,
            pmin_bound,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.state_bound < 1 {
            return Err(ModelError::Invalid("state bound must be at least 1".into()));
        }
        if !(self.rmax_bound >= 0.0 && self.rmax_bound.is_finite()) {
            return Err(ModelError::Invalid(format!(
                "reward bound must be finite and nonnegative, got {}",
                self.rmax_bound
            )));
        }
        if !(self.pmin_bound > 0.0 && self.pmin_bound <= 1.0) {
            return Err(ModelError::Invalid(format!(
                "probability bound must lie in (0, 1], got {}",
                self.pmin_bound
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsSource {
    /// Computed from the explicit transition structure.
    Exact,
    /// Taken from the document's `declared_bounds`.
    Declared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub source: usize,
    pub target: usize,
    pub prob: f64,
}

/// A validated, immutable DTMC.
#[derive(Debug, Clone, PartialEq)]
pub struct Dtmc {
    state_count: usize,
    initial: usize,
    transitions: Vec<Transition>,
    rewards: Vec<f64>,
    labels: BTreeMap<String, Vec<usize>>,
    declared_bounds: Option<StructuralBounds>,
    // CSR view of `transitions` with cumulative probabilities per row.
    row_start: Vec<usize>,
    targets: Vec<usize>,
    cumulative: Vec<f64>,
    absorbing: Vec<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    states: usize,
    initial: usize,
    transitions: Vec<(usize, usize, f64)>,
    rewards: Vec<f64>,
    #[serde(default)]
    labels: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    declared_bounds: Option<StructuralBounds>,
}

impl Dtmc {
    /// Validates the raw parts and builds the model.
    pub fn new(
        state_count: usize,
        initial: usize,
        transitions: Vec<Transition>,
        rewards: Vec<f64>,
        labels: BTreeMap<String, Vec<usize>>,
        declared_bounds: Option<StructuralBounds>,
    ) -> Result<Self, ModelError> {
        if state_count == 0 {
            return Err(ModelError::Invalid("model has no states".into()));
        }
        if initial >= state_count {
            return Err(ModelError::Invalid(format!(
                "initial state {initial} out of range [0, {state_count})"
            )));
        }
        if rewards.len() != state_count {
            return Err(ModelError::Invalid(format!(
                "expected {state_count} rewards, got {}",
                rewards.len()
            )));
        }
        for (s, &r) in rewards.iter().enumerate() {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(ModelError::Invalid(format!(
                    "reward of state {s} must be finite and nonnegative, got {r}"
                )));
            }
        }
        for (i, t) in transitions.iter().enumerate() {
            if t.source >= state_count || t.target >= state_count {
                return Err(ModelError::Invalid(format!(
                    "transition {i} ({} -> {}) references a state outside [0, {state_count})",
                    t.source, t.target
                )));
            }
            if !(t.prob > 0.0 && t.prob <= 1.0) {
                return Err(ModelError::Invalid(format!(
                    "transition {i} ({} -> {}) has probability {} outside (0, 1]",
                    t.source, t.target, t.prob
                )));
            }
        }
        let mut labels = labels;
        for (name, members) in labels.iter_mut() {
            if let Some(&bad) = members.iter().find(|&&s| s >= state_count) {
                return Err(ModelError::Invalid(format!(
                    "label {name:?} contains state {bad} outside [0, {state_count})"
                )));
            }
            members.sort_unstable();
            members.dedup();
        }
        if let Some(b) = &declared_bounds {
            b.validate()?;
        }

        // Stable sort keeps the document order within each row.
        let mut transitions = transitions;
        transitions.sort_by_key(|t| t.source);
        let mut row_start = vec![0usize; state_count + 1];
        for t in &transitions {
            row_start[t.source + 1] += 1;
        }
        for s in 0..state_count {
            row_start[s + 1] += row_start[s];
        }
        let targets: Vec<usize> = transitions.iter().map(|t| t.target).collect();
        let mut cumulative = Vec::with_capacity(transitions.len());
        let mut absorbing = vec![false; state_count];
        for s in 0..state_count {
            let row = &transitions[row_start[s]..row_start[s + 1]];
            if row.is_empty() {
                return Err(ModelError::Invalid(format!("row {s} has no outgoing transitions")));
            }
            let mut acc = 0.0;
            for t in row {
                acc += t.prob;
                cumulative.push(acc);
            }
            if (acc - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ModelError::Invalid(format!("row {s} sums to {acc}")));
            }
            absorbing[s] = row.len() == 1 && row[0].target == s;
        }

        Ok(Self {
            state_count,
            initial,
            transitions,
            rewards,
            labels,
            declared_bounds,
            row_start,
            targets,
            cumulative,
            absorbing,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, state: usize) -> f64 {
        self.rewards[state]
    }

    pub fn labels(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&[usize]> {
        self.labels.get(name).map(Vec::as_slice)
    }

    pub fn declared_bounds(&self) -> Option<StructuralBounds> {
        self.declared_bounds
    }

    /// Whether the state's only transition is a probability-1 self-loop.
    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing[state]
    }

    /// Picks the successor of `state` for a uniform draw `u ∈ [0, 1)`.
    #[inline]
    pub fn successor(&self, state: usize, u: f64) -> usize {
        let lo = self.row_start[state];
        let hi = self.row_start[state + 1];
        for i in lo..hi {
            if u < self.cumulative[i] {
                return self.targets[i];
            }
        }
        // Row sums may fall short of 1 by the validation tolerance.
        self.targets[hi - 1]
    }

    /// Boolean membership mask for a label.
    pub fn label_mask(&self, name: &str) -> Result<Vec<bool>, ModelError> {
        let members = self
            .label(name)
            .ok_or_else(|| ModelError::MissingLabel(name.to_string()))?;
        let mut mask = vec![false; self.state_count];
        for &s in members {
            mask[s] = true;
        }
        Ok(mask)
    }

    /// Serializes back into the JSON model document format.
    pub fn to_document(&self) -> String {
        let doc = ModelDocument {
            states: self.state_count,
            initial: self.initial,
            transitions: self
                .transitions
                .iter()
                .map(|t| (t.source, t.target, t.prob))
                .collect(),
            rewards: self.rewards.clone(),
            labels: self.labels.clone(),
            declared_bounds: self.declared_bounds,
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    /// Exact `(|S|, r_max, p_min)` of the explicit model.
    pub fn exact_bounds(&self) -> StructuralBounds {
        let rmax = self.rewards.iter().copied().fold(0.0, f64::max);
        let pmin = self
            .transitions
            .iter()
            .map(|t| t.prob)
            .fold(f64::INFINITY, f64::min);
        StructuralBounds {
            state_bound: self.state_count as u64,
            rmax_bound: rmax,
            pmin_bound: pmin.min(1.0),
        }
    }
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<Dtmc, ModelError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(ModelError::from_json)?;
    let transitions = doc
        .transitions
        .into_iter()
        .map(|(source, target, prob)| Transition {
            source,
            target,
            prob,
        })
        .collect();
    Dtmc::new(
        doc.states,
        doc.initial,
        transitions,
        doc.rewards,
        doc.labels,
        doc.declared_bounds,
    )
}

/// Returns the declared bounds when the model carries them, the exact
/// bounds otherwise.
pub fn structural_bounds(model: &Dtmc) -> (StructuralBounds, BoundsSource) {
    match model.declared_bounds() {
        Some(b) => (b, BoundsSource::Declared),
        None => (model.exact_bounds(), BoundsSource::Exact),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    PReach,
    PReachBounded,
    ECumulative,
    EReach,
    EReachBounded,
    EInstant,
    EReachInstant,
}

impl PropertyKind {
    pub fn needs_goal(self) -> bool {
        !matches!(self, PropertyKind::ECumulative | PropertyKind::EInstant)
    }

    pub fn needs_bound(self) -> bool {
        matches!(
            self,
            PropertyKind::PReachBounded
                | PropertyKind::ECumulative
                | PropertyKind::EReachBounded
                | PropertyKind::EInstant
        )
    }

    pub fn is_probability(self) -> bool {
        matches!(self, PropertyKind::PReach | PropertyKind::PReachBounded)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyKind::PReach => "p_reach",
            PropertyKind::PReachBounded => "p_reach_bounded",
            PropertyKind::ECumulative => "e_cumulative",
            PropertyKind::EReach => "e_reach",
            PropertyKind::EReachBounded => "e_reach_bounded",
            PropertyKind::EInstant => "e_instant",
            PropertyKind::EReachInstant => "e_reach_instant",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySpec {
    pub kind: PropertyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
}

impl PropertySpec {
    pub fn new(kind: PropertyKind, goal: Option<&str>, bound: Option<u64>) -> Result<Self, ModelError> {
        let p = Self {
            kind,
            goal: goal.map(str::to_string),
            bound,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match (self.kind.needs_goal(), &self.goal) {
            (true, None) => {
                return Err(ModelError::Property(format!("{} requires a goal label", self.kind)))
            }
            (false, Some(_)) => {
                return Err(ModelError::Property(format!("{} takes no goal label", self.kind)))
            }
            _ => {}
        }
        match (self.kind.needs_bound(), self.bound) {
            (true, None) => Err(ModelError::Property(format!("{} requires a step bound", self.kind))),
            (false, Some(_)) => Err(ModelError::Property(format!("{} takes no step bound", self.kind))),
            _ => Ok(()),
        }
    }

    /// Checks that the goal label exists in `model`.
    pub fn check_against(&self, model: &Dtmc) -> Result<(), ModelError> {
        if let Some(goal) = &self.goal {
            if model.label(goal).is_none() {
                return Err(ModelError::MissingLabel(goal.clone()));
            }
        }
        Ok(())
    }

    /// Short text form, e.g. `e_reach(goal)` or `p_reach_bounded(goal,10)`.
    pub fn describe(&self) -> String {
        match (&self.goal, self.bound) {
            (Some(g), Some(c)) => format!("{}({g};{c})", self.kind),
            (Some(g), None) => format!("{}({g})", self.kind),
            (None, Some(c)) => format!("{}({c})", self.kind),
            (None, None) => self.kind.to_string(),
        }
    }
}

pub fn parse_property(text: &str) -> Result<PropertySpec, ModelError> {
    let p: PropertySpec = serde_json::from_str(text).map_err(ModelError::from_json)?;
    p.validate()?;
    Ok(p)
}

fn bad(family: &str, reason: impl Into<String>) -> ModelError {
    ModelError::BadParams {
        family: family.to_string(),
        reason: reason.into(),
    }
}

fn labels_of(pairs: &[(&str, &[usize])]) -> BTreeMap<String, Vec<usize>> {
    pairs
        .iter()
        .map(|(n, s)| (n.to_string(), s.to_vec()))
        .collect()
}

/// Built-in model families.
///
/// - `fig2(n, c)`: `s` branches to `t1` (reward `c·n`) with probability
///   `1/n` and to `t2` (reward 0) otherwise; both absorb. Labels `goal`,
///   `t1`, `t2`.
/// - `fig3()`: `s` (reward 1) self-loops or moves to absorbing `t` with
///   probability ½ each. Label `goal = {t}`.
/// - `chain(L, p)`: `L` transient states with reward 1, each advancing with
///   probability `p` and self-looping otherwise, ending in an absorbing goal
///   with reward 0. `p = 1` gives a deterministic line.
pub fn generate_builtin(family: &str, params: &[f64]) -> Result<Dtmc, ModelError> {
    match family {
        "fig2" => {
            let [n, c] = params else {
                return Err(bad(family, "expected parameters (n, c)"));
            };
            if n.fract() != 0.0 || *n < 2.0 {
                return Err(bad(family, format!("n must be an integer >= 2, got {n}")));
            }
            if !(*c > 0.0 && c.is_finite()) {
                return Err(bad(family, format!("c must be positive, got {c}")));
            }
            let p1 = 1.0 / n;
            let transitions = vec![
                Transition { source: 0, target: 1, prob: p1 },
                Transition { source: 0, target: 2, prob: 1.0 - p1 },
                Transition { source: 1, target: 1, prob: 1.0 },
                Transition { source: 2, target: 2, prob: 1.0 },
            ];
            let labels = labels_of(&[("goal", &[1, 2]), ("t1", &[1]), ("t2", &[2])]);
            Dtmc::new(3, 0, transitions, vec![0.0, c * n, 0.0], labels, None)
        }
        "fig3" => {
            if !params.is_empty() {
                return Err(bad(family, "takes no parameters"));
            }
            let transitions = vec![
                Transition { source: 0, target: 0, prob: 0.5 },
                Transition { source: 0, target: 1, prob: 0.5 },
                Transition { source: 1, target: 1, prob: 1.0 },
            ];
            Dtmc::new(2, 0, transitions, vec![1.0, 0.0], labels_of(&[("goal", &[1])]), None)
        }
        "chain" => {
            let [len, p] = params else {
                return Err(bad(family, "expected parameters (L, p)"));
            };
            if len.fract() != 0.0 || *len < 1.0 {
                return Err(bad(family, format!("L must be an integer >= 1, got {len}")));
            }
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(bad(family, format!("p must lie in (0, 1], got {p}")));
            }
            let len = *len as usize;
            let mut transitions = Vec::with_capacity(2 * len + 1);
            for s in 0..len {
                if *p < 1.0 {
                    transitions.push(Transition { source: s, target: s, prob: 1.0 - p });
                }
                transitions.push(Transition { source: s, target: s + 1, prob: *p });
            }
            transitions.push(Transition { source: len, target: len, prob: 1.0 });
            let mut rewards = vec![1.0; len + 1];
            rewards[len] = 0.0;
            Dtmc::new(len + 1, 0, transitions, rewards, labels_of(&[("goal", &[len])]), None)
        }
        other => Err(ModelError::UnknownFamily(other.to_string())),
    }
}

/// Parses `family` or `family:p1,p2,...` (e.g. `fig2:1000,1`) into a
/// built-in model.
pub fn builtin_from_str(spec: &str) -> Result<Dtmc, ModelError> {
    let (family, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = rest
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| bad(family, format!("cannot parse parameter {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    generate_builtin(family, &params)
}
