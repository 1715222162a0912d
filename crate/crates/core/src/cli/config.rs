use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::baselines::{CtcwTemplate, DEFAULT_ALPHA};
use crate::cesar::{ModelConfig, TrainConfig};
use crate::data::TargetConstants;
use crate::eval::TiePolicy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Cesar,
    Ceq,
    Rock,
    Ctcw,
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cesar" => Ok(MetricName::Cesar),
            "ceq" => Ok(MetricName::Ceq),
            "rock" => Ok(MetricName::Rock),
            "ctcw" => Ok(MetricName::Ctcw),
            _ => Err(format!(
                "unknown metric {s:?} (expected cesar, ceq, rock or ctcw)"
            )),
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::Cesar => "cesar",
            MetricName::Ceq => "ceq",
            MetricName::Rock => "rock",
            MetricName::Ctcw => "ctcw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Mock,
    Http,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mock" => Ok(ProviderKind::Mock),
            "http" => Ok(ProviderKind::Http),
            _ => Err(format!("unknown provider {s:?} (expected mock or http)")),
        }
    }
}

/// File form of every setting the subcommands read. All keys are
/// optional; see the README for the full schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub targets: TargetConstants,
    pub vocab_size: Option<usize>,
    pub embeddings: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub model_path: Option<PathBuf>,
    pub metric: Option<MetricName>,
    pub tie_policy: TiePolicy,
    pub jobs: usize,
    pub corpus: Option<PathBuf>,
    pub alpha: f64,
    pub oracles: Option<PathBuf>,
    pub provider: ProviderKind,
    pub fixtures: Option<PathBuf>,
    pub llm_model: Option<String>,
    pub supporter_template: CtcwTemplate,
    pub defeater_template: CtcwTemplate,
    pub other_template: CtcwTemplate,
    pub clamp: bool,
    /// Set when a flag overrides a loaded checkpoint's attention mode.
    #[serde(skip)]
    pub attention_override: bool,
    #[serde(skip)]
    pub specials_override: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            targets: TargetConstants::default(),
            vocab_size: None,
            embeddings: None,
            data: None,
            model_path: None,
            metric: None,
            tie_policy: TiePolicy::Strict,
            jobs: 1,
            corpus: None,
            alpha: DEFAULT_ALPHA,
            oracles: None,
            provider: ProviderKind::Mock,
            fixtures: None,
            llm_model: None,
            supporter_template: CtcwTemplate::Fact,
            defeater_template: CtcwTemplate::AndLater,
            other_template: CtcwTemplate::And,
            clamp: true,
            attention_override: false,
            specials_override: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&raw)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Propagates the run seed to the model and training settings.
    pub fn apply_seed(&mut self) {
        self.model.seed = self.seed;
        self.train.seed = self.seed;
    }
}

pub(super) fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

pub(super) fn set_value<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
