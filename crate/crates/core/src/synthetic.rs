//! Generated corpora with planted causal links, for offline training runs
//! and for testing the whole pipeline without external data.
//!
//! Every topic owns a few cause words, effect words and explanation words.
//! A causal pair draws its cause and effect from one topic; its
//! explanation (and any supporter) draws from the same topic's explanation
//! words, while an opposite (and any defeater) pairs a negation word with
//! one of them. Non-causal pairs mix the cause of one topic with the
//! effect of another.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{
    build_augmented_set, AskFor, AugmentationRecord, CopaInstance, DefeasibleInstance, Domain,
    TargetConstants, TimeInterval, TrainingExample,
};
use crate::text::{EventText, Tokenizer, Vocabulary, WordTokenizer};

const NEGATIONS: [&str; 4] = ["never", "prevents", "stops", "blocks"];
const CAUSE_FILLERS: [&str; 2] = ["the", "a"];
const EFFECT_FILLERS: [&str; 2] = ["then", "later"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub topics: usize,
    pub words_per_role: usize,
    /// Causal records used for training (each yields up to three examples).
    pub causal_records: usize,
    pub non_causal_records: usize,
    /// Held-out defeasibility instances.
    pub held_out: usize,
    /// Held-out two-choice instances.
    pub copa: usize,
    /// Fraction of causal training records that carry an opposite.
    pub opposite_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            topics: 8,
            words_per_role: 4,
            causal_records: 500,
            non_causal_records: 400,
            held_out: 200,
            copa: 100,
            opposite_rate: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<AugmentationRecord>,
    pub held_out: Vec<DefeasibleInstance>,
    pub copa: Vec<CopaInstance>,
    pub vocabulary: Vocabulary,
}

struct Topic {
    cause: Vec<String>,
    effect: Vec<String>,
    explanation: Vec<String>,
}

fn pick<'a, R: Rng>(words: &'a [String], rng: &mut R) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

fn sentence(words: &[&str]) -> EventText {
    let mut s = words.join(" ");
    s.push('.');
    EventText::new(s).expect("generated text is non-empty")
}

struct Generator {
    topics: Vec<Topic>,
    rng: ChaCha8Rng,
}

impl Generator {
    fn cause(&mut self, t: usize) -> EventText {
        let filler = *CAUSE_FILLERS.choose(&mut self.rng).unwrap();
        let a = pick(&self.topics[t].cause, &mut self.rng).to_string();
        let b = pick(&self.topics[t].cause, &mut self.rng).to_string();
        sentence(&[filler, &a, &b])
    }

    fn effect(&mut self, t: usize) -> EventText {
        let filler = *EFFECT_FILLERS.choose(&mut self.rng).unwrap();
        let a = pick(&self.topics[t].effect, &mut self.rng).to_string();
        let b = pick(&self.topics[t].effect, &mut self.rng).to_string();
        sentence(&[filler, &a, &b])
    }

    fn support(&mut self, t: usize) -> EventText {
        let a = pick(&self.topics[t].explanation, &mut self.rng).to_string();
        let b = pick(&self.topics[t].explanation, &mut self.rng).to_string();
        sentence(&[&a, &b])
    }

    fn contradict(&mut self, t: usize) -> EventText {
        let neg = *NEGATIONS.choose(&mut self.rng).unwrap();
        let a = pick(&self.topics[t].explanation, &mut self.rng).to_string();
        sentence(&[neg, &a])
    }
}

impl SyntheticCorpus {
    pub fn generate(config: &SyntheticConfig) -> Self {
        assert!(
            config.topics >= 2,
            "need at least two topics for non-causal pairs"
        );
        let role = |prefix: char, t: usize| -> Vec<String> {
            (0..config.words_per_role)
                .map(|i| format!("{prefix}{t}{}", (b'a' + i as u8) as char))
                .collect()
        };
        let topics: Vec<Topic> = (0..config.topics)
            .map(|t| Topic {
                cause: role('c', t),
                effect: role('e', t),
                explanation: role('h', t),
            })
            .collect();
        let mut g = Generator {
            topics,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        };

        let mut records = Vec::with_capacity(config.causal_records + config.non_causal_records);
        for i in 0..config.causal_records {
            let t = i % config.topics;
            let opposite = g.rng.gen_bool(config.opposite_rate.clamp(0.0, 1.0));
            records.push(AugmentationRecord {
                cause: g.cause(t),
                effect: g.effect(t),
                explanation: Some(g.support(t)),
                opposite: opposite.then(|| g.contradict(t)),
                is_causal: true,
            });
        }
        for i in 0..config.non_causal_records {
            let t = i % config.topics;
            let other = (t + 1 + g.rng.gen_range(0..config.topics - 1)) % config.topics;
            records.push(AugmentationRecord {
                cause: g.cause(t),
                effect: g.effect(other),
                explanation: None,
                opposite: None,
                is_causal: false,
            });
        }
        records.shuffle(&mut g.rng);

        let held_out = (0..config.held_out)
            .map(|i| {
                let t = g.rng.gen_range(0..config.topics);
                DefeasibleInstance {
                    id: format!("synthetic-{i}"),
                    domain: Domain::ALL[t % Domain::ALL.len()],
                    cause: g.cause(t),
                    effect: g.effect(t),
                    time_interval: TimeInterval::ALL[i % TimeInterval::ALL.len()],
                    supporter: g.support(t),
                    defeater: g.contradict(t),
                }
            })
            .collect();

        let copa = (0..config.copa)
            .map(|i| {
                let t = g.rng.gen_range(0..config.topics);
                let other = (t + 1 + g.rng.gen_range(0..config.topics - 1)) % config.topics;
                let (premise, right, wrong, ask_for) = if i % 2 == 0 {
                    (g.cause(t), g.effect(t), g.effect(other), AskFor::Effect)
                } else {
                    (g.effect(t), g.cause(t), g.cause(other), AskFor::Cause)
                };
                let label = if g.rng.gen_bool(0.5) { 1 } else { 2 };
                let (choice1, choice2) = if label == 1 {
                    (right, wrong)
                } else {
                    (wrong, right)
                };
                CopaInstance {
                    premise,
                    ask_for,
                    choice1,
                    choice2,
                    label,
                }
            })
            .collect();

        let mut texts: Vec<String> = Vec::new();
        for r in &records {
            texts.push(r.cause.to_string());
            texts.push(r.effect.to_string());
            texts.extend(r.explanation.iter().map(ToString::to_string));
            texts.extend(r.opposite.iter().map(ToString::to_string));
        }
        let vocabulary = Vocabulary::build(&WordTokenizer, texts.iter().map(String::as_str), None);
        Self {
            records,
            held_out,
            copa,
            vocabulary,
        }
    }

    /// The augmented regression set with the default targets.
    pub fn training_examples(&self) -> Vec<TrainingExample> {
        build_augmented_set(&self.records, &TargetConstants::default()).expect("generated records are valid")
    }

    /// Words of the held-out split that the training vocabulary lacks.
    pub fn unseen_held_out_words(&self) -> Vec<String> {
        let mut missing: Vec<String> = self
            .held_out
            .iter()
            .flat_map(|d| [&d.cause, &d.effect, &d.supporter, &d.defeater])
            .flat_map(|t| WordTokenizer.split(t.as_str()))
            .filter(|w| self.vocabulary.id(w).is_none())
            .collect();
        missing.sort();
        missing.dedup();
        missing
    }
}
