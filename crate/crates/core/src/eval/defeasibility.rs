use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{parallel_map, AdditionRole, CausalMetric, EvalError, Result};
use crate::data::DefeasibleInstance;

/// How an unchanged score counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// A supporter must raise the score and a defeater lower it.
    #[default]
    Strict,
    /// An unchanged score counts as correct.
    Lenient,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::Strict => "strict",
            TiePolicy::Lenient => "lenient",
        })
    }
}

impl FromStr for TiePolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strict" => Ok(TiePolicy::Strict),
            "lenient" => Ok(TiePolicy::Lenient),
            _ => Err(format!("unknown tie policy {s:?} (expected strict or lenient)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub id: String,
    pub base: f64,
    pub supporter: f64,
    pub defeater: f64,
    pub supporter_correct: bool,
    pub defeater_correct: bool,
}

impl InstanceOutcome {
    pub fn delta_supporter(&self) -> f64 {
        self.supporter - self.base
    }

    pub fn delta_defeater(&self) -> f64 {
        self.defeater - self.base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Excluded {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefeasibilityReport {
    pub metric: String,
    pub tie_policy: TiePolicy,
    pub supporter_accuracy: f64,
    pub defeater_accuracy: f64,
    pub geometric_mean: f64,
    /// Comparisons (supporter or defeater) where the score did not move.
    pub tie_count: usize,
    pub outcomes: Vec<InstanceOutcome>,
    pub excluded: Vec<Excluded>,
}

/// `√(a·b)`.
pub fn geometric_mean(a: f64, b: f64) -> f64 {
    (a * b).sqrt()
}

/// A fraction as a percentage with one decimal.
pub fn percent(fraction: f64) -> String {
    format!("{:.1}", 100.0 * fraction)
}

impl DefeasibilityReport {
    /// Aggregates class accuracies the way full evaluations do.
    pub fn from_accuracies(metric: &str, supporter: f64, defeater: f64) -> Self {
        Self {
            metric: metric.to_string(),
            tie_policy: TiePolicy::Strict,
            supporter_accuracy: supporter,
            defeater_accuracy: defeater,
            geometric_mean: geometric_mean(supporter, defeater),
            tie_count: 0,
            outcomes: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn deltas(&self) -> Vec<(f64, f64)> {
        self.outcomes
            .iter()
            .map(|o| (o.delta_supporter(), o.delta_defeater()))
            .collect()
    }

    pub fn header() -> &'static str {
        "metric | supporter | defeater | geo-mean"
    }

    pub fn row(&self) -> String {
        format!(
            "{} | {} | {} | {}",
            self.metric,
            percent(self.supporter_accuracy),
            percent(self.defeater_accuracy),
            percent(self.geometric_mean)
        )
    }
}

impl fmt::Display for DefeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", Self::header())?;
        writeln!(f, "{}", self.row())?;
        write!(
            f,
            "instances {} | excluded {} | ties {} | policy {}",
            self.outcomes.len(),
            self.excluded.len(),
            self.tie_count,
            self.tie_policy
        )
    }
}

fn judge(delta: f64, supporter: bool, policy: TiePolicy) -> bool {
    if delta == 0.0 {
        return policy == TiePolicy::Lenient;
    }
    (delta > 0.0) == supporter
}

fn score_instance(
    metric: &dyn CausalMetric,
    d: &DefeasibleInstance,
) -> std::result::Result<(f64, f64, f64), String> {
    let s = |addition| {
        metric
            .score(&d.cause, addition, &d.effect)
            .map_err(|e| e.to_string())
            .and_then(|v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(format!("non-finite score {v}"))
                }
            })
    };
    Ok((
        s(None)?,
        s(Some((&d.supporter, AdditionRole::Supporter)))?,
        s(Some((&d.defeater, AdditionRole::Defeater)))?,
    ))
}

/// Supporter/defeater accuracy on `jobs` threads. Instances whose scoring
/// fails are logged, excluded and listed in the report.
pub fn evaluate_defeasibility_with(
    metric: &dyn CausalMetric,
    data: &[DefeasibleInstance],
    tie_policy: TiePolicy,
    jobs: usize,
) -> Result<DefeasibilityReport> {
    if data.is_empty() {
        return Err(EvalError::EmptyData);
    }
    let scored = parallel_map(data, jobs, |d| score_instance(metric, d))?;
    let mut outcomes = Vec::with_capacity(data.len());
    let mut excluded = Vec::new();
    let mut tie_count = 0;
    for (d, result) in data.iter().zip(scored) {
        match result {
            Ok((base, supporter, defeater)) => {
                let (ds, dd) = (supporter - base, defeater - base);
                tie_count += usize::from(ds == 0.0) + usize::from(dd == 0.0);
                outcomes.push(InstanceOutcome {
                    id: d.id.clone(),
                    base,
                    supporter,
                    defeater,
                    supporter_correct: judge(ds, true, tie_policy),
                    defeater_correct: judge(dd, false, tie_policy),
                });
            }
            Err(error) => {
                log::warn!("{}: instance {} excluded: {error}", metric.name(), d.id);
                excluded.push(Excluded {
                    id: d.id.clone(),
                    error,
                });
            }
        }
    }
    if outcomes.is_empty() {
        return Err(EvalError::AllExcluded(excluded.len()));
    }
    let n = outcomes.len() as f64;
    let supporter_accuracy = outcomes.iter().filter(|o| o.supporter_correct).count() as f64 / n;
    let defeater_accuracy = outcomes.iter().filter(|o| o.defeater_correct).count() as f64 / n;
    Ok(DefeasibilityReport {
        metric: metric.name().to_string(),
        tie_policy,
        supporter_accuracy,
        defeater_accuracy,
        geometric_mean: geometric_mean(supporter_accuracy, defeater_accuracy),
        tie_count,
        outcomes,
        excluded,
    })
}

pub fn evaluate_defeasibility(
    metric: &dyn CausalMetric,
    data: &[DefeasibleInstance],
    tie_policy: TiePolicy,
) -> Result<DefeasibilityReport> {
    evaluate_defeasibility_with(metric, data, tie_policy, 1)
}
