//! Two-choice COPA accuracy of a trained model on synthetic instances,
//! asking for causes and effects alike.

use cesar::cesar::train;
use cesar::data::AskFor;
use cesar::eval::{evaluate_copa, percent};
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, ModelConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let model = CesarModel::new(corpus.vocabulary.clone(), ModelConfig::default())?;
    println!(
        "untrained: {}%",
        percent(evaluate_copa(&model, &corpus.copa)?.accuracy)
    );

    let (trained, _) = train(&model, &corpus.training_examples(), &TrainConfig::default())?;
    let r = evaluate_copa(&trained, &corpus.copa)?;
    println!(
        "trained: {}% ({} of {})",
        percent(r.accuracy),
        r.correct,
        r.evaluated
    );

    let c = corpus
        .copa
        .iter()
        .find(|c| c.ask_for == AskFor::Cause)
        .expect("cause question");
    let s1 = trained.score(c.pair(1).0, None, c.pair(1).1)?.score;
    let s2 = trained.score(c.pair(2).0, None, c.pair(2).1)?.score;
    println!(
        "\npremise: {}\nwhat was the cause?\n  1. {} ({s1:.3})\n  2. {} ({s2:.3})\nlabel {}",
        c.premise, c.choice1, c.choice2, c.label
    );
    Ok(())
}
