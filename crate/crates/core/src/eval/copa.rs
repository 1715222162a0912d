use serde::Serialize;

use super::{parallel_map, CausalMetric, EvalError, Excluded, Result};
use crate::data::CopaInstance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CopaReport {
    pub metric: String,
    pub accuracy: f64,
    pub correct: usize,
    pub evaluated: usize,
    pub excluded: Vec<Excluded>,
}

/// Two-choice accuracy: an instance is correct only when the labeled
/// choice's directed pair scores strictly higher than the other's.
pub fn evaluate_copa_with(
    metric: &dyn CausalMetric,
    data: &[CopaInstance],
    jobs: usize,
) -> Result<CopaReport> {
    if data.is_empty() {
        return Err(EvalError::EmptyData);
    }
    let scored = parallel_map(data, jobs, |inst| {
        let s = |choice| {
            let (c, e) = inst.pair(choice);
            metric.score(c, None, e).map_err(|e| e.to_string())
        };
        Ok::<_, String>((s(1)?, s(2)?))
    })?;
    let mut correct = 0;
    let mut evaluated = 0;
    let mut excluded = Vec::new();
    for (i, (inst, result)) in data.iter().zip(scored).enumerate() {
        match result {
            Ok((s1, s2)) => {
                evaluated += 1;
                let (right, wrong) = if inst.label == 1 { (s1, s2) } else { (s2, s1) };
                correct += usize::from(right > wrong);
            }
            Err(error) => {
                log::warn!("{}: COPA instance {} excluded: {error}", metric.name(), i + 1);
                excluded.push(Excluded {
                    id: (i + 1).to_string(),
                    error,
                });
            }
        }
    }
    if evaluated == 0 {
        return Err(EvalError::AllExcluded(excluded.len()));
    }
    Ok(CopaReport {
        metric: metric.name().to_string(),
        accuracy: correct as f64 / evaluated as f64,
        correct,
        evaluated,
        excluded,
    })
}

pub fn evaluate_copa(metric: &dyn CausalMetric, data: &[CopaInstance]) -> Result<CopaReport> {
    evaluate_copa_with(metric, data, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::AskFor;
    use crate::eval::FnMetric;
    use crate::text::EventText;

    fn inst(premise: &str, ask_for: AskFor, c1: &str, c2: &str, label: u8) -> CopaInstance {
        let t = |s: &str| EventText::new(s).unwrap();
        CopaInstance {
            premise: t(premise),
            ask_for,
            choice1: t(c1),
            choice2: t(c2),
            label,
        }
    }

    #[test]
    fn direction_and_ties() {
        // Scores 1 only for the pair rain → wet.
        let oracle = FnMetric::new("lookup", |c, _, e| {
            f64::from(u8::from(c.as_str() == "rain" && e.as_str() == "wet"))
        });
        let data = vec![
            inst("wet", AskFor::Cause, "sun", "rain", 2),
            inst("rain", AskFor::Effect, "wet", "dry", 1),
            inst("wet", AskFor::Cause, "rain", "sun", 1),
            inst("wet", AskFor::Effect, "rain", "sun", 1),
        ];
        let r = evaluate_copa(&oracle, &data).unwrap();
        assert_eq!((r.correct, r.evaluated), (3, 4));
        assert_eq!(r.accuracy, 0.75);
        let flat = FnMetric::new("flat", |_, _, _| 0.3);
        assert_eq!(evaluate_copa(&flat, &data).unwrap().accuracy, 0.0);
    }
}
