//! Evaluation protocols over any [`CausalMetric`].

mod copa;
mod defeasibility;
mod metrics;
mod shift;

pub use copa::{evaluate_copa, evaluate_copa_with, CopaReport};
pub use defeasibility::{
    evaluate_defeasibility, evaluate_defeasibility_with, geometric_mean, percent, DefeasibilityReport,
    Excluded, InstanceOutcome, TiePolicy,
};
pub use metrics::{CeqMetric, CtcwMetric, FnMetric, RockMetric};
pub use shift::{shift_report, ShiftSummary, FALLBACK_BANDWIDTH, GRID_POINTS, GRID_SPAN};

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::cesar::ModelError;
use crate::numerics::NumericsError;
use crate::text::EventText;

/// What an addition to the cause is meant to do. Role-blind metrics
/// ignore it; prompt-based ones may pick a template by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdditionRole {
    Supporter,
    Defeater,
    Other,
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("{0}")]
    Other(String),
}

/// A causal-strength score `s(cause ⊕ addition, effect)`.
///
/// Implementations must be deterministic for fixed internal state.
pub trait CausalMetric: Send + Sync {
    fn name(&self) -> &str;

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> std::result::Result<f64, MetricError>;
}

impl CausalMetric for crate::cesar::CesarModel {
    fn name(&self) -> &str {
        "cesar"
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> std::result::Result<f64, MetricError> {
        Ok(crate::cesar::CesarModel::score(self, cause, addition.map(|a| a.0), effect)?.score)
    }
}

impl<M: CausalMetric + ?Sized> CausalMetric for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> std::result::Result<f64, MetricError> {
        (**self).score(cause, addition, effect)
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation data is empty")]
    EmptyData,
    #[error("no instance could be scored ({0} excluded)")]
    AllExcluded(usize),
    #[error("output directory {path}: {source}")]
    OutputDir { path: String, source: std::io::Error },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Runs `f` over `items` on `jobs` threads (sequentially for `jobs <= 1`),
/// keeping input order.
pub(crate) fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Mean computed around the first sample, so a constant sample returns
/// that constant exactly.
pub(crate) fn shifted_mean(xs: &[f64]) -> f64 {
    match xs.first() {
        None => f64::NAN,
        Some(&x0) => x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64,
    }
}
