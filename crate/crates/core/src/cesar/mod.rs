//! The CESAR causal-strength metric.
//!
//! A pair is scored as `Σ_ij a_ij · |c_i·e_j| / (‖c_i‖‖e_j‖)`: absolute
//! cosine association between every cause token and every effect token,
//! weighted by a causality-aware attention `A = softmax(C W_q (E W_k)ᵀ)`
//! normalized over the whole matrix.

mod checkpoint;
mod embedder;
mod head;
mod model;
mod train;

pub use checkpoint::FORMAT_VERSION;
pub use embedder::{load_fixed_embeddings, EmbedderKind};
pub use head::ScoreBreakdown;
pub use model::{AttentionMode, CesarModel, Gradients, ModelConfig, ParamId};
pub use train::{train, write_loss_curve, TrainConfig, TrainReport};

use thiserror::Error;

use crate::numerics::NumericsError;
use crate::text::TextError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("token id {id} outside embedder range {rows}")]
    TokenOutOfRange { id: u32, rows: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("target {0} outside [0, 1]")]
    InvalidTarget(f64),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss at step {step} (example {example}): score {score}, target {target}")]
    NonFiniteLoss {
        step: usize,
        example: usize,
        score: f64,
        target: f64,
    },
    #[error("checkpoint format_version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("checkpoint vocabulary hash {found} does not match {expected}")]
    VocabMismatch { found: String, expected: String },
    #[error("corrupt checkpoint (line {line}): {message}")]
    Corrupt { line: usize, message: String },
    #[error("embedding file (line {line}): {message}")]
    EmbeddingFile { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
