//! Writes a distribution-shift report (CSV, summary, SVG) for a trained
//! model on the synthetic held-out split.
//!
//! ```text
//! cargo run --release --example shift_report -- [out_dir]
//! ```

use std::path::PathBuf;

use cesar::cesar::train;
use cesar::eval::shift_report;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, ModelConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("cesar-shift-report"));
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let model = CesarModel::new(corpus.vocabulary.clone(), ModelConfig::default())?;
    let (trained, _) = train(&model, &corpus.training_examples(), &TrainConfig::default())?;

    let summary = shift_report(&trained, &corpus.held_out, &out_dir)?;
    println!(
        "means: base {:.3}, supporter {:.3}, defeater {:.3}",
        summary.mean_base, summary.mean_supporter, summary.mean_defeater
    );
    println!(
        "mean deltas: supporter {:+.3}, defeater {:+.3}",
        summary.mean_delta_supporter, summary.mean_delta_defeater
    );
    println!("KDE integrals: {:?}", summary.integrals);
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
