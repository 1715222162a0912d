//! Supporter/defeater accuracy of a trained model and of its ablations,
//! under both tie policies, scored on four threads.

use cesar::cesar::{train, AttentionMode};
use cesar::eval::evaluate_defeasibility_with;
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::{CesarModel, DefeasibilityReport, ModelConfig, TiePolicy, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let model = CesarModel::new(corpus.vocabulary.clone(), ModelConfig::default())?;
    let (trained, _) = train(&model, &corpus.training_examples(), &TrainConfig::default())?;

    let mut uniform = trained.clone();
    uniform.set_attention_mode(AttentionMode::Uniform);
    let mut no_specials = trained.clone();
    no_specials.set_include_specials(false);

    println!("{}", DefeasibilityReport::header());
    for (label, m) in [
        ("trained", &trained),
        ("uniform attention", &uniform),
        ("no specials", &no_specials),
    ] {
        for policy in [TiePolicy::Strict, TiePolicy::Lenient] {
            let mut r = evaluate_defeasibility_with(m, &corpus.held_out, policy, 4)?;
            r.metric = format!("{label} ({policy})");
            println!("{}", r.row());
        }
    }

    let r = evaluate_defeasibility_with(&trained, &corpus.held_out, TiePolicy::Strict, 4)?;
    let worst = r
        .outcomes
        .iter()
        .min_by(|a, b| a.delta_supporter().total_cmp(&b.delta_supporter()))
        .expect("non-empty");
    println!(
        "smallest supporter delta: {} ({:+.4}), defeater delta {:+.4}",
        worst.id,
        worst.delta_supporter(),
        worst.delta_defeater()
    );
    Ok(())
}
