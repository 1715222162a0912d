//! Saves a trained model, reloads it, and checks that parameters and
//! scores survive bit for bit. Also shows the vocabulary check.

use cesar::cesar::{train, ModelError};
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, ModelConfig, TrainConfig, Vocabulary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig {
        causal_records: 60,
        non_causal_records: 40,
        held_out: 10,
        ..SyntheticConfig::default()
    });
    let model = CesarModel::new(
        corpus.vocabulary.clone(),
        ModelConfig {
            dim: 16,
            ..ModelConfig::default()
        },
    )?;
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let (trained, _) = train(&model, &corpus.training_examples(), &cfg)?;

    let dir = std::env::temp_dir().join(format!("cesar-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    trained.save(&path)?;
    let loaded = CesarModel::load_with_vocab(&path, trained.vocab())?;
    assert_eq!(loaded, trained);

    for d in &corpus.held_out {
        let a = trained.score(&d.cause, Some(&d.supporter), &d.effect)?.score;
        let b = loaded.score(&d.cause, Some(&d.supporter), &d.effect)?.score;
        assert_eq!(a.to_bits(), b.to_bits());
    }
    println!(
        "{} bytes, parameters and scores identical after reload",
        std::fs::metadata(&path)?.len()
    );

    match CesarModel::load_with_vocab(&path, &Vocabulary::from_tokens(["unrelated"])) {
        Err(ModelError::VocabMismatch { found, expected }) => {
            println!(
                "vocabulary check: stored {}… vs supplied {}…",
                &found[..12],
                &expected[..12]
            )
        }
        other => panic!("expected a vocabulary mismatch, got {other:?}"),
    }
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
