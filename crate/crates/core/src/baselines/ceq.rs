use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{BaselineError, Result};
use crate::text::{is_punctuation, EventText, Tokenizer};

/// Exponent on the effect-word count. The usual choice in the
/// co-occurrence causality literature.
pub const DEFAULT_ALPHA: f64 = 0.66;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CeqConfig {
    pub alpha: f64,
}

impl Default for CeqConfig {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA }
    }
}

impl CeqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_finite() && self.alpha > 0.0 {
            Ok(())
        } else {
            Err(BaselineError::InvalidConfig(format!(
                "alpha must be finite and positive, got {}",
                self.alpha
            )))
        }
    }
}

/// Word and cause→effect word-pair counts over a corpus of causal
/// statements.
///
/// `word_count[w]` is the number of occurrences of `w` on either side of
/// any statement. `pair_count[(a, b)]` is the number of statements whose
/// cause contains `a` and whose effect contains `b`. Punctuation is not
/// counted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceStats {
    pub word_count: BTreeMap<String, u64>,
    pub pair_count: BTreeMap<(String, String), u64>,
    pub source: String,
}

fn words(tokenizer: &dyn Tokenizer, text: &str) -> Vec<String> {
    tokenizer
        .split(text)
        .into_iter()
        .filter(|w| !is_punctuation(w))
        .collect()
}

impl CooccurrenceStats {
    pub fn from_corpus(
        tokenizer: &dyn Tokenizer,
        corpus: &[(EventText, EventText)],
        source: impl Into<String>,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        let mut stats = Self {
            source: source.into(),
            ..Self::default()
        };
        for (cause, effect) in corpus {
            let cw = words(tokenizer, cause.as_str());
            let ew = words(tokenizer, effect.as_str());
            for w in cw.iter().chain(&ew) {
                *stats.word_count.entry(w.clone()).or_default() += 1;
            }
            let cs: BTreeSet<&String> = cw.iter().collect();
            let es: BTreeSet<&String> = ew.iter().collect();
            for a in &cs {
                for b in &es {
                    *stats.pair_count.entry(((*a).clone(), (*b).clone())).or_default() += 1;
                }
            }
        }
        Ok(stats)
    }

    pub fn word(&self, w: &str) -> u64 {
        self.word_count.get(w).copied().unwrap_or(0)
    }

    pub fn pair(&self, cause_word: &str, effect_word: &str) -> u64 {
        self.pair_count
            .get(&(cause_word.to_string(), effect_word.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// Checks that no pair count exceeds either of its word counts.
    pub fn validate(&self) -> Result<()> {
        for ((a, b), &n) in &self.pair_count {
            if n > self.word(a) || n > self.word(b) {
                return Err(BaselineError::InvalidConfig(format!(
                    "pair ({a}, {b}) count {n} exceeds a word count"
                )));
            }
        }
        Ok(())
    }

    /// `Count(a, b) / (Count(a) · Count(b)^α)`, or 0 when any count is 0.
    pub fn pair_strength(&self, cause_word: &str, effect_word: &str, alpha: f64) -> f64 {
        let joint = self.pair(cause_word, effect_word);
        let (ca, cb) = (self.word(cause_word), self.word(effect_word));
        if joint == 0 || ca == 0 || cb == 0 {
            return 0.0;
        }
        joint as f64 / (ca as f64 * (cb as f64).powf(alpha))
    }
}

/// Average pairwise strength between the words of `cause` and `effect`,
/// normalized by `N_C + N_E`.
pub fn ceq_score_with_stats(
    stats: &CooccurrenceStats,
    tokenizer: &dyn Tokenizer,
    cause: &str,
    effect: &str,
    config: &CeqConfig,
) -> Result<f64> {
    config.validate()?;
    let cw = words(tokenizer, cause);
    let ew = words(tokenizer, effect);
    if cw.is_empty() {
        return Err(BaselineError::EmptyOperand("cause"));
    }
    if ew.is_empty() {
        return Err(BaselineError::EmptyOperand("effect"));
    }
    let total: f64 = cw
        .iter()
        .flat_map(|a| ew.iter().map(move |b| (a, b)))
        .map(|(a, b)| stats.pair_strength(a, b, config.alpha))
        .sum();
    Ok(total / (cw.len() + ew.len()) as f64)
}

/// Builds counts over `corpus` and scores one pair against them.
pub fn ceq_score(
    tokenizer: &dyn Tokenizer,
    corpus: &[(EventText, EventText)],
    cause: &EventText,
    effect: &EventText,
    config: &CeqConfig,
) -> Result<f64> {
    let stats = CooccurrenceStats::from_corpus(tokenizer, corpus, "inline")?;
    ceq_score_with_stats(&stats, tokenizer, cause.as_str(), effect.as_str(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::WordTokenizer;

    fn t(s: &str) -> EventText {
        EventText::new(s).unwrap()
    }

    #[test]
    fn counts_and_invariant() {
        let corpus = vec![
            (t("Fire spreads."), t("Houses burn, houses fall.")),
            (t("Fire."), t("Smoke.")),
        ];
        let stats = CooccurrenceStats::from_corpus(&WordTokenizer, &corpus, "toy").unwrap();
        assert_eq!(stats.word("fire"), 2);
        assert_eq!(stats.word("houses"), 2);
        assert_eq!(stats.word(","), 0);
        assert_eq!(stats.pair("fire", "houses"), 1);
        assert_eq!(stats.pair("fire", "smoke"), 1);
        assert_eq!(stats.pair("houses", "fire"), 0);
        stats.validate().unwrap();
    }

    #[test]
    fn rejects_bad_inputs() {
        let corpus = vec![(t("fire"), t("burn"))];
        assert!(matches!(
            ceq_score(&WordTokenizer, &[], &t("fire"), &t("burn"), &CeqConfig::default()),
            Err(BaselineError::EmptyCorpus)
        ));
        assert!(matches!(
            ceq_score(
                &WordTokenizer,
                &corpus,
                &t("..."),
                &t("burn"),
                &CeqConfig::default()
            ),
            Err(BaselineError::EmptyOperand("cause"))
        ));
        assert!(ceq_score(
            &WordTokenizer,
            &corpus,
            &t("fire"),
            &t("burn"),
            &CeqConfig { alpha: 0.0 }
        )
        .is_err());
    }
}
