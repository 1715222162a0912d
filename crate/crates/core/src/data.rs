//! Dataset records, JSONL loaders, training-set augmentation and splits.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::EventText;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("record {index}: causal record has no explanation")]
    MissingExplanation { index: usize },
    #[error("invalid target constant {0}")]
    InvalidTarget(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Environment,
    Business,
    ScienceTechnology,
    Health,
    Work,
    Politics,
    Education,
    Sports,
    Entertainment,
    Travel,
}

impl Domain {
    pub const ALL: [Domain; 10] = [
        Domain::Environment,
        Domain::Business,
        Domain::ScienceTechnology,
        Domain::Health,
        Domain::Work,
        Domain::Politics,
        Domain::Education,
        Domain::Sports,
        Domain::Entertainment,
        Domain::Travel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Environment => "environment",
            Domain::Business => "business",
            Domain::ScienceTechnology => "science_technology",
            Domain::Health => "health",
            Domain::Work => "work",
            Domain::Politics => "politics",
            Domain::Education => "education",
            Domain::Sports => "sports",
            Domain::Entertainment => "entertainment",
            Domain::Travel => "travel",
        }
    }
}

impl FromStr for Domain {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm: String = s
            .trim()
            .to_lowercase()
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { '_' })
            .collect();
        Ok(match norm.as_str() {
            "environment" => Domain::Environment,
            "business" => Domain::Business,
            "science" | "technology" | "science_technology" => Domain::ScienceTechnology,
            "health" => Domain::Health,
            "work" => Domain::Work,
            "politics" => Domain::Politics,
            "education" => Domain::Education,
            "sports" | "sport" => Domain::Sports,
            "entertainment" => Domain::Entertainment,
            "travel" => Domain::Travel,
            _ => return Err(format!("unknown domain {s:?}")),
        })
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeInterval {
    Months,
    Years,
    Decades,
    Centuries,
}

impl TimeInterval {
    pub const ALL: [TimeInterval; 4] = [
        TimeInterval::Months,
        TimeInterval::Years,
        TimeInterval::Decades,
        TimeInterval::Centuries,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TimeInterval::Months => "months",
            TimeInterval::Years => "years",
            TimeInterval::Decades => "decades",
            TimeInterval::Centuries => "centuries",
        }
    }
}

impl FromStr for TimeInterval {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.trim().to_lowercase();
        let norm = norm.strip_suffix(" later").unwrap_or(&norm);
        Ok(match norm {
            "months" => TimeInterval::Months,
            "years" => TimeInterval::Years,
            "decades" => TimeInterval::Decades,
            "centuries" => TimeInterval::Centuries,
            _ => return Err(format!("unknown time_interval {s:?}")),
        })
    }
}

/// A cause-effect pair with its supporter and defeater.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefeasibleInstance {
    pub id: String,
    pub domain: Domain,
    pub cause: EventText,
    pub effect: EventText,
    pub time_interval: TimeInterval,
    pub supporter: EventText,
    pub defeater: EventText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub cause: EventText,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addition: Option<EventText>,
    pub effect: EventText,
    pub target: f64,
}

/// Source record for the augmented training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub cause: EventText,
    pub effect: EventText,
    #[serde(default)]
    pub explanation: Option<EventText>,
    #[serde(default)]
    pub opposite: Option<EventText>,
    pub is_causal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AskFor {
    Cause,
    Effect,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopaInstance {
    pub premise: EventText,
    pub ask_for: AskFor,
    pub choice1: EventText,
    pub choice2: EventText,
    /// 1 or 2.
    pub label: u8,
}

impl CopaInstance {
    /// Directed (cause, effect) pair for choice 1 or 2.
    pub fn pair(&self, choice: u8) -> (&EventText, &EventText) {
        let alt = if choice == 1 { &self.choice1 } else { &self.choice2 };
        match self.ask_for {
            AskFor::Cause => (alt, &self.premise),
            AskFor::Effect => (&self.premise, alt),
        }
    }
}

/// Causal-strength regression targets for the four kinds of training rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetConstants {
    pub pair: f64,
    pub with_explanation: f64,
    pub with_opposite: f64,
    pub non_causal: f64,
}

impl Default for TargetConstants {
    fn default() -> Self {
        Self {
            pair: 0.7,
            with_explanation: 1.0,
            with_opposite: 0.2,
            non_causal: 0.0,
        }
    }
}

impl TargetConstants {
    pub fn validate(&self) -> Result<()> {
        for v in [
            self.pair,
            self.with_explanation,
            self.with_opposite,
            self.non_causal,
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(DataError::InvalidTarget(v));
            }
        }
        Ok(())
    }
}

/// Expands augmentation records into regression examples:
/// causal rows yield (C,E), (C⊕H,E) and, when an opposite exists, (C⊕¬H,E);
/// non-causal rows yield a single (C,E) at the non-causal target.
pub fn build_augmented_set(
    records: &[AugmentationRecord],
    targets: &TargetConstants,
) -> Result<Vec<TrainingExample>> {
    targets.validate()?;
    let mut out = Vec::with_capacity(records.len() * 3);
    for (index, r) in records.iter().enumerate() {
        let example = |addition: Option<&EventText>, target| TrainingExample {
            cause: r.cause.clone(),
            addition: addition.cloned(),
            effect: r.effect.clone(),
            target,
        };
        if !r.is_causal {
            out.push(example(None, targets.non_causal));
            continue;
        }
        let explanation = r
            .explanation
            .as_ref()
            .ok_or(DataError::MissingExplanation { index })?;
        out.push(example(None, targets.pair));
        out.push(example(Some(explanation), targets.with_explanation));
        if let Some(opposite) = &r.opposite {
            out.push(example(Some(opposite), targets.with_opposite));
        }
    }
    Ok(out)
}

fn record_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Record {
        line,
        message: message.into(),
    }
}

/// Reads non-blank JSONL lines as raw JSON objects, 1-based line numbers.
fn read_jsonl(path: &Path) -> Result<Vec<(usize, serde_json::Map<String, serde_json::Value>)>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(serde_json::Value::Object(map)) => out.push((line_no, map)),
            Ok(_) => return Err(record_err(line_no, "expected a JSON object")),
            Err(e) => return Err(record_err(line_no, format!("invalid JSON: {e}"))),
        }
    }
    if out.is_empty() {
        log::warn!("{} contains no records", path.display());
    }
    Ok(out)
}

struct Fields<'a> {
    line: usize,
    map: &'a serde_json::Map<String, serde_json::Value>,
}

impl Fields<'_> {
    fn string(&self, name: &str) -> Result<&str> {
        match self.map.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s),
            Some(serde_json::Value::Null) | None => {
                Err(record_err(self.line, format!("missing field `{name}`")))
            }
            Some(_) => Err(record_err(self.line, format!("field `{name}` must be a string"))),
        }
    }

    fn text(&self, name: &str) -> Result<EventText> {
        EventText::new(self.string(name)?)
            .map_err(|_| record_err(self.line, format!("field `{name}` is empty")))
    }

    fn parsed<T: FromStr<Err = String>>(&self, name: &str) -> Result<T> {
        self.string(name)?
            .parse()
            .map_err(|e: String| record_err(self.line, format!("field `{name}`: {e}")))
    }
}

/// Loads defeasibility instances, one JSON object per line.
pub fn load_defeasibility(path: impl AsRef<Path>) -> Result<Vec<DefeasibleInstance>> {
    read_jsonl(path.as_ref())?
        .iter()
        .map(|(line, map)| {
            let f = Fields { line: *line, map };
            let id = match map.get("id") {
                Some(serde_json::Value::Number(n)) => n.to_string(),
                _ => f.string("id")?.to_string(),
            };
            Ok(DefeasibleInstance {
                id,
                domain: f.parsed("domain")?,
                cause: f.text("cause")?,
                effect: f.text("effect")?,
                time_interval: f.parsed("time_interval")?,
                supporter: f.text("supporter")?,
                defeater: f.text("defeater")?,
            })
        })
        .collect()
}

pub fn load_copa(path: impl AsRef<Path>) -> Result<Vec<CopaInstance>> {
    read_jsonl(path.as_ref())?
        .iter()
        .map(|(line, map)| {
            let f = Fields { line: *line, map };
            let ask_for = match f.string("ask_for")?.trim().to_lowercase().as_str() {
                "cause" => AskFor::Cause,
                "effect" => AskFor::Effect,
                other => {
                    return Err(record_err(
                        *line,
                        format!("field `ask_for`: unknown value {other:?}"),
                    ))
                }
            };
            let label = match map.get("label") {
                Some(serde_json::Value::Number(n)) if n.as_u64() == Some(1) => 1,
                Some(serde_json::Value::Number(n)) if n.as_u64() == Some(2) => 2,
                None => return Err(record_err(*line, "missing field `label`")),
                Some(v) => {
                    return Err(record_err(
                        *line,
                        format!("field `label` must be 1 or 2, got {v}"),
                    ))
                }
            };
            Ok(CopaInstance {
                premise: f.text("premise")?,
                ask_for,
                choice1: f.text("choice1")?,
                choice2: f.text("choice2")?,
                label,
            })
        })
        .collect()
}

fn load_typed<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path)?
        .into_iter()
        .map(|(line, map)| {
            serde_json::from_value(serde_json::Value::Object(map))
                .map_err(|e| record_err(line, e.to_string()))
        })
        .collect()
}

pub fn load_training(path: impl AsRef<Path>) -> Result<Vec<TrainingExample>> {
    let examples: Vec<TrainingExample> = load_typed(path.as_ref())?;
    for (i, ex) in examples.iter().enumerate() {
        if !(0.0..=1.0).contains(&ex.target) {
            return Err(record_err(i + 1, format!("target {} outside [0, 1]", ex.target)));
        }
    }
    Ok(examples)
}

pub fn load_augmentation_source(path: impl AsRef<Path>) -> Result<Vec<AugmentationRecord>> {
    load_typed(path.as_ref())
}

/// Reads `(cause, effect)` statements from any JSONL file whose records
/// carry `cause` and `effect`. Records marked `"is_causal": false` are
/// skipped, so augmentation sources can be used directly.
pub fn load_causal_statements(path: impl AsRef<Path>) -> Result<Vec<(EventText, EventText)>> {
    let mut out = Vec::new();
    for (line, map) in read_jsonl(path.as_ref())? {
        if map.get("is_causal") == Some(&serde_json::Value::Bool(false)) {
            continue;
        }
        let f = Fields { line, map: &map };
        out.push((f.text("cause")?, f.text("effect")?));
    }
    Ok(out)
}

/// Writes any serializable records as JSONL.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Train/dev/test proportions of the released benchmark.
pub const SPLIT_PROPORTIONS: [usize; 3] = [7000, 2276, 1969];

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then cut by `proportions` (scaled to the input size).
pub fn split_with<T: Clone>(items: &[T], proportions: [usize; 3], seed: u64) -> Split<T> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let total: usize = proportions.iter().sum();
    let n = items.len();
    let n_train = (n * proportions[0] + total / 2) / total;
    let n_dev = ((n * proportions[1] + total / 2) / total).min(n - n_train);
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
    Split {
        train: pick(&order[..n_train]),
        dev: pick(&order[n_train..n_train + n_dev]),
        test: pick(&order[n_train + n_dev..]),
    }
}

pub fn split<T: Clone>(items: &[T], seed: u64) -> Split<T> {
    split_with(items, SPLIT_PROPORTIONS, seed)
}

/// Per-domain counts by time interval, as CSV
/// (`domain,overall,months,years,decades,centuries`, plus a total row).
pub fn statistics_csv(data: &[DefeasibleInstance]) -> String {
    let mut table: BTreeMap<Domain, [usize; 4]> = BTreeMap::new();
    for inst in data {
        let col = TimeInterval::ALL
            .iter()
            .position(|t| *t == inst.time_interval)
            .unwrap_or(0);
        table.entry(inst.domain).or_default()[col] += 1;
    }
    let mut out = String::from("domain,overall,months,years,decades,centuries\n");
    let mut totals = [0usize; 4];
    for domain in Domain::ALL {
        let row = table.get(&domain).copied().unwrap_or_default();
        for (t, v) in totals.iter_mut().zip(row) {
            *t += v;
        }
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            domain,
            row.iter().sum::<usize>(),
            row[0],
            row[1],
            row[2],
            row[3]
        ));
    }
    out.push_str(&format!(
        "total,{},{},{},{},{}\n",
        totals.iter().sum::<usize>(),
        totals[0],
        totals[1],
        totals[2],
        totals[3]
    ));
    out
}
