//! Contrastive temporal/causal word metric.
//!
//! A chat model is asked how likely each of `after`, `before`,
//! `therefore` and `because` is to fill the gap in `C [MASK] E`; the
//! score is `p(before) + p(therefore) − p(after) − p(because)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BaselineError, Result};
use crate::text::EventText;

pub const CONTRASTIVE_WORDS: [&str; 4] = ["after", "before", "therefore", "because"];

/// Instruction appended after the masked sentence.
pub const INSTRUCTION: &str = "Give the probabilities for each of the listed words to replace the [MASK]:
- after
- before
- therefore
- because
such that,
- \"after\" implies that A happened later than B
- \"before\" implies that A happened earlier than B
- \"therefore\" implies that A causes B, i.e., A is the cause of B, and B is the effect of A
- \"because\" implies that B causes A, i.e., A is the effect of B, and B is the cause.
Keep in mind that \"therefore\" and \"because\" have opposite meanings in this context. The sum of probabilities should not exceed 1.0, but if words don't fit well enough, the sum can be less than 1.0. The probabilities should be based on the descriptions above. If a word does not fit well, it should have zero probability. The cause should always precede the effect. Try to list only probabilities without further explanations.";

/// How an addition is merged into the cause side of the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CtcwTemplate {
    /// `C and a`
    And,
    /// `It is a fact that a. So, c`
    Fact,
    /// `C, and later a`
    AndLater,
}

impl CtcwTemplate {
    pub const ALL: [CtcwTemplate; 3] = [CtcwTemplate::And, CtcwTemplate::Fact, CtcwTemplate::AndLater];

    pub fn as_str(self) -> &'static str {
        match self {
            CtcwTemplate::And => "and",
            CtcwTemplate::Fact => "fact",
            CtcwTemplate::AndLater => "and-later",
        }
    }
}

impl fmt::Display for CtcwTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CtcwTemplate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "and" => Ok(CtcwTemplate::And),
            "fact" => Ok(CtcwTemplate::Fact),
            "and-later" => Ok(CtcwTemplate::AndLater),
            _ => Err(format!(
                "unknown template {s:?} (expected and, fact or and-later)"
            )),
        }
    }
}

fn clause(text: &str) -> &str {
    text.trim().trim_end_matches(['.', '!', '?', ' '])
}

/// Lowercases the first letter unless the first word looks like an
/// acronym (`US`, `NASA`) or is the pronoun `I`.
fn lower_first(text: &str) -> String {
    let first_word = text.split_whitespace().next().unwrap_or("");
    let letters: Vec<char> = first_word.chars().filter(|c| c.is_alphabetic()).take(2).collect();
    let acronym = letters.len() == 2 && letters.iter().all(|c| c.is_uppercase());
    let keep = acronym || first_word == "I" || first_word.starts_with("I'");
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if !keep => c.to_lowercase().chain(chars).collect(),
        _ => text.to_string(),
    }
}

fn with_instruction(sentence: String) -> String {
    format!("{sentence}\n\n{INSTRUCTION}")
}

/// Prompt for the bare pair: `C [MASK] e`.
pub fn ctcw_pair_prompt(cause: &EventText, effect: &EventText) -> String {
    with_instruction(format!(
        "{} [MASK] {}",
        clause(cause.as_str()),
        lower_first(effect.as_str().trim())
    ))
}

/// Prompt for `template` applied to `cause ⊕ addition`.
///
/// Without an addition `And` and `AndLater` fall back to the bare pair;
/// `Fact` has no bare form and is an error.
pub fn ctcw_build_prompt(
    template: CtcwTemplate,
    cause: &EventText,
    effect: &EventText,
    addition: Option<&EventText>,
) -> Result<String> {
    let Some(addition) = addition else {
        return match template {
            CtcwTemplate::Fact => Err(BaselineError::MissingAddition(template)),
            _ => Ok(ctcw_pair_prompt(cause, effect)),
        };
    };
    let c = clause(cause.as_str());
    let a = lower_first(clause(addition.as_str()));
    let cause_side = match template {
        CtcwTemplate::And => format!("{c} and {a}"),
        CtcwTemplate::Fact => format!("It is a fact that {a}. So, {}", lower_first(c)),
        CtcwTemplate::AndLater => format!("{c}, and later {a}"),
    };
    Ok(with_instruction(format!(
        "{cause_side} [MASK] {}",
        lower_first(effect.as_str().trim())
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub after: f64,
    pub before: f64,
    pub therefore: f64,
    pub because: f64,
    /// Sum of the four probabilities as given.
    pub raw_sum: f64,
}

impl ProbabilityTable {
    pub fn new(after: f64, before: f64, therefore: f64, because: f64) -> Result<Self> {
        for (word, value) in CONTRASTIVE_WORDS
            .into_iter()
            .zip([after, before, therefore, because])
        {
            if !(0.0..=1.0).contains(&value) {
                return Err(BaselineError::ProbabilityRange { word, value });
            }
        }
        Ok(Self {
            after,
            before,
            therefore,
            because,
            raw_sum: after + before + therefore + because,
        })
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        match word {
            "after" => Some(self.after),
            "before" => Some(self.before),
            "therefore" => Some(self.therefore),
            "because" => Some(self.because),
            _ => None,
        }
    }
}

/// Pulls a number off the front of `s`; returns it with the rest of `s`.
fn leading_number(s: &str) -> Option<(f64, &str)> {
    let end = s
        .char_indices()
        .find(|&(i, c)| !(c.is_ascii_digit() || c == '.' || (i == 0 && (c == '-' || c == '+'))))
        .map_or(s.len(), |(i, _)| i);
    let value: f64 = s[..end].parse().ok()?;
    Some((value, &s[end..]))
}

/// Reads one value per contrastive word from lines like `- after: 0.30`.
///
/// Lines that name a word but carry no number right after it (an echoed
/// instruction, say) are ignored; a number outside [0, 1], a repeated
/// word or a missing word is an error. Percentages are accepted.
pub fn ctcw_parse(response: &str) -> Result<ProbabilityTable> {
    if response.trim().is_empty() {
        return Err(BaselineError::Parse {
            line: String::new(),
            message: "empty response".into(),
        });
    }
    let mut found: [Option<f64>; 4] = [None; 4];
    for line in response.lines() {
        let lowered = line.to_lowercase();
        let body = lowered.trim_start_matches(|c: char| !c.is_alphanumeric());
        let Some((k, word)) = CONTRASTIVE_WORDS
            .iter()
            .enumerate()
            .find(|(_, w)| body.starts_with(**w))
        else {
            continue;
        };
        let rest = &body[word.len()..];
        if rest.chars().next().is_some_and(char::is_alphanumeric) {
            continue;
        }
        let rest =
            rest.trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '=' | '"' | '\'' | '*'));
        let Some((mut value, tail)) = leading_number(rest) else {
            continue;
        };
        if tail.trim_start().starts_with('%') {
            value /= 100.0;
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(BaselineError::Parse {
                line: line.to_string(),
                message: format!("probability {value} outside [0, 1]"),
            });
        }
        if found[k].replace(value).is_some() {
            return Err(BaselineError::Parse {
                line: line.to_string(),
                message: format!("second value for {word:?}"),
            });
        }
    }
    let mut values = [0.0; 4];
    for (k, v) in found.iter().enumerate() {
        values[k] = v.ok_or(BaselineError::MissingWord(CONTRASTIVE_WORDS[k]))?;
    }
    ProbabilityTable::new(values[0], values[1], values[2], values[3])
}

/// Raw and sum-normalized scores of one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtcwScore {
    pub raw: f64,
    /// Equal to `raw` unless `raw_sum > 1`, in which case the
    /// probabilities are first divided by `raw_sum`.
    pub clamped: f64,
    pub raw_sum: f64,
}

impl CtcwScore {
    pub fn value(&self, clamp: bool) -> f64 {
        if clamp {
            self.clamped
        } else {
            self.raw
        }
    }
}

/// Probabilities are short decimals; summing them in units of 1e-9
/// keeps results like 0.5 + 0.2 − 0.3 at exactly 0.4.
fn nanos(p: f64) -> i64 {
    (p * 1e9).round() as i64
}

pub fn ctcw_scores(table: &ProbabilityTable) -> CtcwScore {
    let diff = nanos(table.before) + nanos(table.therefore) - nanos(table.after) - nanos(table.because);
    let total = nanos(table.after) + nanos(table.before) + nanos(table.therefore) + nanos(table.because);
    let raw = diff as f64 / 1e9;
    let clamped = if total > 1_000_000_000 {
        diff as f64 / total as f64
    } else {
        raw
    };
    CtcwScore {
        raw,
        clamped,
        raw_sum: table.raw_sum,
    }
}

pub fn ctcw_score(table: &ProbabilityTable, clamp: bool) -> f64 {
    ctcw_scores(table).value(clamp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> EventText {
        EventText::new(s).unwrap()
    }

    fn sentence(prompt: &str) -> &str {
        prompt.split("\n\n").next().unwrap()
    }

    #[test]
    fn templates() {
        let c = t("The earthquake hit a city.");
        let e = t("Mental health issues arose.");
        let a = t("A disaster usually leads to suffering and loss of people");
        assert_eq!(
            sentence(&ctcw_build_prompt(CtcwTemplate::And, &c, &e, Some(&a)).unwrap()),
            "The earthquake hit a city and a disaster usually leads to suffering and loss of people [MASK] mental health issues arose."
        );
        assert!(matches!(
            ctcw_build_prompt(CtcwTemplate::Fact, &c, &e, None),
            Err(BaselineError::MissingAddition(CtcwTemplate::Fact))
        ));
        assert_eq!(
            ctcw_build_prompt(CtcwTemplate::AndLater, &c, &e, None).unwrap(),
            ctcw_pair_prompt(&c, &e)
        );
        assert!(ctcw_pair_prompt(&c, &e).ends_with(INSTRUCTION));
    }

    #[test]
    fn acronyms_keep_case() {
        assert_eq!(lower_first("NASA launched."), "NASA launched.");
        assert_eq!(lower_first("I left."), "I left.");
        assert_eq!(lower_first("A storm."), "a storm.");
        assert_eq!(lower_first("Storms came."), "storms came.");
    }

    #[test]
    fn parse_variants() {
        let table = ctcw_parse("after = 30%\n* Before: 0.5\nTherefore 0.2\n\"because\": 0").unwrap();
        assert_eq!(
            (table.after, table.before, table.therefore, table.because),
            (0.3, 0.5, 0.2, 0.0)
        );
        let echoed = format!("{INSTRUCTION}\n- after: 0.1\n- before: 0.2\n- therefore: 0.3\n- because: 0.4");
        assert_eq!(ctcw_parse(&echoed).unwrap().because, 0.4);
        assert!(matches!(
            ctcw_parse("after: 0.1\nafter: 0.2\nbefore: 0\ntherefore: 0\nbecause: 0"),
            Err(BaselineError::Parse { .. })
        ));
        assert!(matches!(ctcw_parse("   "), Err(BaselineError::Parse { .. })));
        assert!(matches!(
            ctcw_parse("after: -0.1\nbefore: 0\ntherefore: 0\nbecause: 0"),
            Err(BaselineError::Parse { .. })
        ));
    }

    #[test]
    fn clamping_rescales_only_above_one() {
        let over = ProbabilityTable::new(0.2, 0.6, 0.6, 0.1).unwrap();
        let s = ctcw_scores(&over);
        assert!((s.raw - 0.9).abs() < 1e-15);
        assert!((s.clamped - 0.9 / 1.5).abs() < 1e-15);
        assert!((s.raw_sum - 1.5).abs() < 1e-15);
        let under = ProbabilityTable::new(0.2, 0.3, 0.1, 0.1).unwrap();
        assert_eq!(ctcw_score(&under, true), ctcw_score(&under, false));
        assert!(ProbabilityTable::new(0.2, 1.1, 0.0, 0.0).is_err());
    }
}
