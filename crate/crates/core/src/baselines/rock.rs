//! Intervention-based causal strength with pluggable oracles.
//!
//! `s = f(C, E) − mean_{A ∈ 𝒜′} f(A, E)`, where `f` estimates the
//! probability that its first argument precedes the second and `𝒜′`
//! keeps the interventions whose propensity profile over the confounders
//! lies within `ε` of the cause's.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{BaselineError, Result};
use crate::text::EventText;

/// Estimate of P(`earlier` precedes `later`), in [0, 1].
pub trait PrecedenceScorer: Send + Sync {
    fn precedence(&self, earlier: &str, later: &str) -> f64;
}

/// Propensity q(x; text) of confounder `x` given `text`.
pub trait Propensity: Send + Sync {
    fn propensity(&self, confounder: &str, text: &str) -> f64;
}

impl<F: Fn(&str, &str) -> f64 + Send + Sync> PrecedenceScorer for F {
    fn precedence(&self, earlier: &str, later: &str) -> f64 {
        self(earlier, later)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantScorer(pub f64);

impl PrecedenceScorer for ConstantScorer {
    fn precedence(&self, _: &str, _: &str) -> f64 {
        self.0
    }
}

impl Propensity for ConstantScorer {
    fn propensity(&self, _: &str, _: &str) -> f64 {
        self.0
    }
}

/// Exact-match lookup on `(first, second)` with a fallback value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableScorer {
    pub table: HashMap<(String, String), f64>,
    pub default: f64,
}

impl TableScorer {
    pub fn new(default: f64) -> Self {
        Self {
            table: HashMap::new(),
            default,
        }
    }

    pub fn with(mut self, first: &str, second: &str, value: f64) -> Self {
        self.table.insert((first.to_string(), second.to_string()), value);
        self
    }

    fn lookup(&self, first: &str, second: &str) -> f64 {
        self.table
            .get(&(first.to_string(), second.to_string()))
            .copied()
            .unwrap_or(self.default)
    }
}

impl PrecedenceScorer for TableScorer {
    fn precedence(&self, earlier: &str, later: &str) -> f64 {
        self.lookup(earlier, later)
    }
}

impl Propensity for TableScorer {
    fn propensity(&self, confounder: &str, text: &str) -> f64 {
        self.lookup(confounder, text)
    }
}

pub struct PropensityFilter {
    pub propensity: Arc<dyn Propensity>,
    pub confounders: Vec<String>,
    pub epsilon: f64,
}

pub struct RockInputs {
    pub precedence: Arc<dyn PrecedenceScorer>,
    /// Candidate ¬C texts.
    pub interventions: Vec<EventText>,
    /// `None` keeps every intervention.
    pub filter: Option<PropensityFilter>,
}

impl RockInputs {
    pub fn new(precedence: Arc<dyn PrecedenceScorer>, interventions: Vec<EventText>) -> Self {
        Self {
            precedence,
            interventions,
            filter: None,
        }
    }

    pub fn with_filter(mut self, filter: PropensityFilter) -> Self {
        self.filter = Some(filter);
        self
    }

    fn checked(&self, first: &str, second: &str) -> Result<f64> {
        let v = self.precedence.precedence(first, second);
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(BaselineError::OracleRange {
                what: format!("precedence({first:?}, {second:?})"),
                value: v,
            })
        }
    }

    /// Interventions kept by the propensity filter, in input order.
    pub fn admissible(&self, cause: &str) -> Result<Vec<&EventText>> {
        if self.interventions.is_empty() {
            return Err(BaselineError::NoInterventions);
        }
        let Some(filter) = &self.filter else {
            return Ok(self.interventions.iter().collect());
        };
        if filter.confounders.is_empty() {
            return Err(BaselineError::InvalidConfig(
                "propensity filter has no confounders".into(),
            ));
        }
        if filter.epsilon.is_nan() || filter.epsilon < 0.0 {
            return Err(BaselineError::InvalidConfig(format!(
                "epsilon must be >= 0, got {}",
                filter.epsilon
            )));
        }
        let profile = |text: &str| -> Vec<f64> {
            filter
                .confounders
                .iter()
                .map(|x| filter.propensity.propensity(x, text))
                .collect()
        };
        let base = profile(cause);
        let scale = 1.0 / filter.confounders.len() as f64;
        let kept: Vec<&EventText> = self
            .interventions
            .iter()
            .filter(|a| {
                let dist = profile(a.as_str())
                    .iter()
                    .zip(&base)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt();
                scale * dist <= filter.epsilon
            })
            .collect();
        if kept.is_empty() {
            return Err(BaselineError::EmptyInterventionSet {
                epsilon: filter.epsilon,
            });
        }
        Ok(kept)
    }

    /// Scores a cause given as raw text (e.g. a cause joined with an addition).
    pub fn score_text(&self, cause: &str, effect: &str) -> Result<f64> {
        let kept = self.admissible(cause)?;
        let direct = self.checked(cause, effect)?;
        let mut total = 0.0;
        for a in &kept {
            total += self.checked(a.as_str(), effect)?;
        }
        Ok(direct - total / kept.len() as f64)
    }
}

pub fn rock_score(inputs: &RockInputs, cause: &EventText, effect: &EventText) -> Result<f64> {
    inputs.score_text(cause.as_str(), effect.as_str())
}

#[derive(Debug, Clone, Deserialize)]
struct Entry {
    first: String,
    second: String,
    value: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct TableSpec {
    default: f64,
    #[serde(default)]
    entries: Vec<Entry>,
}

impl From<TableSpec> for TableScorer {
    fn from(spec: TableSpec) -> Self {
        spec.entries
            .into_iter()
            .fold(TableScorer::new(spec.default), |t, e| {
                t.with(&e.first, &e.second, e.value)
            })
    }
}

/// JSON description of table-driven ROCK oracles:
///
/// ```json
/// {
///   "precedence": {"default": 0.5, "entries": [{"first": "...", "second": "...", "value": 0.8}]},
///   "interventions": ["...", "..."],
///   "propensity": {"default": 0.0, "entries": []},
///   "confounders": ["..."],
///   "epsilon": 0.1
/// }
/// ```
///
/// `propensity`, `confounders` and `epsilon` are optional; without them
/// every intervention is kept.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RockOracleFile {
    precedence: TableSpec,
    interventions: Vec<EventText>,
    #[serde(default)]
    propensity: Option<TableSpec>,
    #[serde(default)]
    confounders: Vec<String>,
    #[serde(default)]
    epsilon: Option<f64>,
}

impl RockOracleFile {
    pub fn load(path: impl AsRef<Path>) -> Result<RockInputs> {
        let parsed: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        parsed.into_inputs()
    }

    pub fn into_inputs(self) -> Result<RockInputs> {
        let mut inputs = RockInputs::new(Arc::new(TableScorer::from(self.precedence)), self.interventions);
        match (self.propensity, self.epsilon) {
            (Some(q), Some(epsilon)) => {
                inputs = inputs.with_filter(PropensityFilter {
                    propensity: Arc::new(TableScorer::from(q)),
                    confounders: self.confounders,
                    epsilon,
                })
            }
            (None, None) => {}
            _ => {
                return Err(BaselineError::InvalidConfig(
                    "propensity and epsilon must be given together".into(),
                ))
            }
        }
        Ok(inputs)
    }
}
