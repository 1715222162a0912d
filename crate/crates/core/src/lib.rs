//! Causal-strength metrics for defeasible causal reasoning.
//!
//! The crate scores how strongly a cause leads to an effect and checks
//! whether a metric moves in the right direction when a supporter or a
//! defeater is attached to the cause.
//!
//! - [`cesar`]: token-level causal embedding association weighted by a
//!   learned global-softmax attention, with analytic gradients and an
//!   AdamW training loop.
//! - [`baselines`]: CEQ (corpus co-occurrence), ROCK (intervention
//!   based, pluggable oracles) and CTCW (contrastive temporal/causal word
//!   probabilities from a chat model, with an offline mock).
//! - [`eval`]: supporter/defeater accuracy, COPA accuracy and score
//!   distribution shift reports.
//! - [`data`]: JSONL loaders, training-set augmentation and splits.
//!
//! Runnable examples live in `examples/`; the `cesar` binary wraps the
//! same pieces behind subcommands.

pub mod baselines;
pub mod cesar;
pub mod cli;
pub mod data;
pub mod eval;
pub mod numerics;
pub mod synthetic;
pub mod text;

pub use cesar::{CesarModel, ModelConfig, ScoreBreakdown, TrainConfig};
pub use eval::{AdditionRole, CausalMetric, DefeasibilityReport, TiePolicy};
pub use text::{EventText, Vocabulary};
