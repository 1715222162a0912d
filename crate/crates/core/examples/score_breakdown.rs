//! Prints the association, attention and strength matrices behind one
//! score, before and after a short training run, and with a supporter.

use cesar::cesar::train;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, ModelConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let model = CesarModel::new(
        corpus.vocabulary.clone(),
        ModelConfig {
            dim: 32,
            ..ModelConfig::default()
        },
    )?;
    let d = &corpus.held_out[0];

    println!(
        "cause: {}\neffect: {}\nsupporter: {}\n",
        d.cause, d.effect, d.supporter
    );
    println!("untrained\n{}", model.score(&d.cause, None, &d.effect)?.render());

    let (trained, _) = train(&model, &corpus.training_examples(), &TrainConfig::default())?;
    let base = trained.score(&d.cause, None, &d.effect)?;
    println!("trained\n{}", base.render());
    let supported = trained.score(&d.cause, Some(&d.supporter), &d.effect)?;
    println!("trained, with supporter\n{}", supported.render());

    // The score is exactly the sum of the strength matrix.
    assert!((base.strength.sum() - base.score).abs() < 1e-12);
    Ok(())
}
