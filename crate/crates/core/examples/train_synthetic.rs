//! Trains CESAR from scratch on a generated corpus with planted causal
//! links and reports held-out supporter/defeater accuracy.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [out_dir]
//! ```
//!
//! With `out_dir`, the checkpoint and the loss curve are written there.

use std::path::PathBuf;
use std::time::Instant;

use cesar::cesar::{train, write_loss_curve};
use cesar::eval::evaluate_defeasibility;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, ModelConfig, TiePolicy, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let examples = corpus.training_examples();
    println!(
        "{} training examples, vocabulary {}, {} held-out instances",
        examples.len(),
        corpus.vocabulary.len(),
        corpus.held_out.len()
    );

    let model = CesarModel::new(corpus.vocabulary.clone(), ModelConfig::default())?;
    let config = TrainConfig::default();
    println!(
        "peak learning rate {:e}, batch {}",
        config.peak_lr(),
        config.batch_size
    );

    let start = Instant::now();
    let (trained, report) = train(&model, &examples, &config)?;
    for (i, loss) in report.epoch_loss.iter().enumerate() {
        println!("epoch {} loss {loss:.5}", i + 1);
    }
    println!("trained {} steps in {:.1?}", report.steps, start.elapsed());

    let result = evaluate_defeasibility(&trained, &corpus.held_out, TiePolicy::Strict)?;
    println!("{result}");

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        trained.save(dir.join("synthetic.ckpt"))?;
        write_loss_curve(dir.join("loss.csv"), &report)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
