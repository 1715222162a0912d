//! Comparison metrics: CEQ, ROCK and CTCW.
//!
//! When a supporter or defeater is attached, CEQ and ROCK score the cause
//! and the addition joined into one text; CTCW renders it into a prompt
//! template instead.

mod ceq;
mod ctcw;
mod provider;
mod rock;

pub use ceq::{ceq_score, ceq_score_with_stats, CeqConfig, CooccurrenceStats, DEFAULT_ALPHA};
pub use ctcw::{
    ctcw_build_prompt, ctcw_pair_prompt, ctcw_parse, ctcw_score, ctcw_scores, CtcwScore, CtcwTemplate,
    ProbabilityTable, CONTRASTIVE_WORDS, INSTRUCTION,
};
pub use provider::{
    prompt_sha256, CtcwProvider, FixtureRecord, HttpProvider, MockProvider, CHAT_TEMPERATURE,
};
pub use rock::{
    rock_score, ConstantScorer, PrecedenceScorer, Propensity, PropensityFilter, RockInputs, RockOracleFile,
    TableScorer,
};

use thiserror::Error;

use crate::text::TextError;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("co-occurrence corpus is empty")]
    EmptyCorpus,
    #[error("{0} has no words after tokenization")]
    EmptyOperand(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("intervention list is empty")]
    NoInterventions,
    #[error("empty intervention set: no intervention is within epsilon {epsilon} of the cause")]
    EmptyInterventionSet { epsilon: f64 },
    #[error("oracle returned {value} for {what}; expected a value in [0, 1]")]
    OracleRange { what: String, value: f64 },
    #[error("the {0} template needs an addition")]
    MissingAddition(CtcwTemplate),
    #[error("unparseable probability response ({message}): {line:?}")]
    Parse { line: String, message: String },
    #[error("response gives no probability for {0:?}")]
    MissingWord(&'static str),
    #[error("probability for {word:?} is {value}; expected a value in [0, 1]")]
    ProbabilityRange { word: &'static str, value: f64 },
    #[error("fixture file (line {line}): {message}")]
    Fixture { line: usize, message: String },
    #[error("provider: {0}")]
    Provider(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BaselineError>;

/// `cause` and `addition` as one text, for metrics that see a bag of words.
pub(crate) fn joined(cause: &str, addition: Option<&str>) -> String {
    match addition {
        Some(a) => format!("{cause} {a}"),
        None => cause.to_string(),
    }
}
