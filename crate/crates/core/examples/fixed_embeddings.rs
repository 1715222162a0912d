//! Frozen word vectors from a text file; only the attention projections
//! are trained.

use std::fmt::Write as _;

use cesar::cesar::{load_fixed_embeddings, train, ParamId};
use cesar::eval::evaluate_defeasibility;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::text::is_punctuation;
use cesar::{CesarModel, ModelConfig, TiePolicy, TrainConfig};
use rand::{Rng, SeedableRng};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());

    // Vectors where words of one topic share a direction, plus noise.
    let dim = 24;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut file = String::new();
    for token in corpus.vocabulary.tokens().iter().skip(4) {
        let topic: Option<usize> = token
            .get(1..)
            .and_then(|s| s.trim_end_matches(char::is_alphabetic).parse().ok());
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.3..0.3)).collect();
        if let (Some(t), false) = (topic, is_punctuation(token)) {
            v[t % dim] += 1.0;
        }
        let values: Vec<String> = v.iter().map(|x| format!("{x:.5}")).collect();
        let _ = writeln!(file, "{token} {}", values.join(" "));
    }
    let path = std::env::temp_dir().join(format!("cesar-vectors-{}.txt", std::process::id()));
    std::fs::write(&path, file)?;

    let (vocab, table) = load_fixed_embeddings(&path)?;
    let model = CesarModel::with_fixed_embeddings(
        vocab,
        table,
        ModelConfig {
            dim,
            ..ModelConfig::default()
        },
    )?;
    println!("trainable: {:?}", model.trainable_params());
    let (trained, report) = train(&model, &corpus.training_examples(), &TrainConfig::default())?;
    assert_eq!(trained.param(ParamId::Table), model.param(ParamId::Table));
    println!("loss {:?}", report.epoch_loss);
    println!(
        "{}",
        evaluate_defeasibility(&trained, &corpus.held_out, TiePolicy::Strict)?
    );
    std::fs::remove_file(path)?;
    Ok(())
}
