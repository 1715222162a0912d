//! [`CausalMetric`] adapters for the baselines and for ad-hoc oracles.

use std::sync::Arc;

use super::{AdditionRole, CausalMetric, MetricError};
use crate::baselines::{
    ceq_score_with_stats, ctcw_build_prompt, ctcw_pair_prompt, ctcw_scores, joined, CeqConfig,
    CooccurrenceStats, CtcwProvider, CtcwTemplate, RockInputs,
};
use crate::text::{EventText, WordTokenizer};

/// Wraps a closure as a metric.
pub struct FnMetric<F> {
    name: String,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&EventText, Option<(&EventText, AdditionRole)>, &EventText) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> CausalMetric for FnMetric<F>
where
    F: Fn(&EventText, Option<(&EventText, AdditionRole)>, &EventText) -> f64 + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> Result<f64, MetricError> {
        Ok((self.f)(cause, addition, effect))
    }
}

pub struct CeqMetric {
    pub stats: CooccurrenceStats,
    pub config: CeqConfig,
}

impl CausalMetric for CeqMetric {
    fn name(&self) -> &str {
        "ceq"
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> Result<f64, MetricError> {
        let cause = joined(cause.as_str(), addition.map(|a| a.0.as_str()));
        Ok(ceq_score_with_stats(
            &self.stats,
            &WordTokenizer,
            &cause,
            effect.as_str(),
            &self.config,
        )?)
    }
}

pub struct RockMetric {
    pub inputs: RockInputs,
}

impl CausalMetric for RockMetric {
    fn name(&self) -> &str {
        "rock"
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> Result<f64, MetricError> {
        let cause = joined(cause.as_str(), addition.map(|a| a.0.as_str()));
        Ok(self.inputs.score_text(&cause, effect.as_str())?)
    }
}

/// CTCW through a provider, with one template per addition role.
pub struct CtcwMetric {
    pub provider: Arc<dyn CtcwProvider>,
    pub supporter_template: CtcwTemplate,
    pub defeater_template: CtcwTemplate,
    pub other_template: CtcwTemplate,
    /// Rescale tables whose probabilities sum above 1.
    pub clamp: bool,
}

impl CtcwMetric {
    /// `Fact` for supporters, `AndLater` for defeaters, `And` otherwise;
    /// clamping on.
    pub fn new(provider: Arc<dyn CtcwProvider>) -> Self {
        Self {
            provider,
            supporter_template: CtcwTemplate::Fact,
            defeater_template: CtcwTemplate::AndLater,
            other_template: CtcwTemplate::And,
            clamp: true,
        }
    }

    /// Same template for every role.
    pub fn with_template(mut self, template: CtcwTemplate) -> Self {
        self.supporter_template = template;
        self.defeater_template = template;
        self.other_template = template;
        self
    }

    pub fn prompt(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> Result<String, MetricError> {
        Ok(match addition {
            None => ctcw_pair_prompt(cause, effect),
            Some((text, role)) => {
                let template = match role {
                    AdditionRole::Supporter => self.supporter_template,
                    AdditionRole::Defeater => self.defeater_template,
                    AdditionRole::Other => self.other_template,
                };
                ctcw_build_prompt(template, cause, effect, Some(text))?
            }
        })
    }
}

impl CausalMetric for CtcwMetric {
    fn name(&self) -> &str {
        "ctcw"
    }

    fn score(
        &self,
        cause: &EventText,
        addition: Option<(&EventText, AdditionRole)>,
        effect: &EventText,
    ) -> Result<f64, MetricError> {
        let prompt = self.prompt(cause, addition, effect)?;
        let table = self.provider.probabilities(&prompt)?;
        let s = ctcw_scores(&table);
        if s.raw != s.clamped {
            log::debug!(
                "ctcw probabilities sum to {}; raw {} clamped {}",
                s.raw_sum,
                s.raw,
                s.clamped
            );
        }
        Ok(s.value(self.clamp))
    }
}
