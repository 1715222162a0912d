//! CEQ over a small co-occurrence corpus and ROCK with table-driven
//! oracles, scored directly and through the evaluation harness.

use std::sync::Arc;

use cesar::baselines::{
    ceq_score, ceq_score_with_stats, rock_score, CeqConfig, CooccurrenceStats, PropensityFilter, RockInputs,
    TableScorer,
};
use cesar::eval::{evaluate_defeasibility, CeqMetric, RockMetric};
use cesar::synthetic::{SyntheticConfig, SyntheticCorpus};
use cesar::text::WordTokenizer;
use cesar::{EventText, TiePolicy};

fn t(s: &str) -> EventText {
    EventText::new(s).expect("non-empty")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = vec![
        (t("Fire broke out."), t("The house burned.")),
        (t("A fire started in the kitchen."), t("The kitchen burned.")),
        (t("Heavy rain fell."), t("The river flooded.")),
    ];
    for alpha in [1.0, 0.66] {
        let s = ceq_score(
            &WordTokenizer,
            &corpus,
            &t("Fire."),
            &t("Burned."),
            &CeqConfig { alpha },
        )?;
        println!("CEQ(fire -> burned), alpha {alpha}: {s:.4}");
    }
    let stats = CooccurrenceStats::from_corpus(&WordTokenizer, &corpus, "toy")?;
    let unrelated = ceq_score_with_stats(&stats, &WordTokenizer, "rain", "burned", &CeqConfig::default())?;
    println!("CEQ(rain -> burned): {unrelated}");

    let f = TableScorer::new(0.5)
        .with("Fire broke out.", "The house burned.", 0.9)
        .with("Nobody lit anything.", "The house burned.", 0.3);
    let q = TableScorer::new(0.5).with("dry weather", "Heavy rain fell.", 0.0);
    let inputs = RockInputs::new(
        Arc::new(f),
        vec![
            t("Nobody lit anything."),
            t("Heavy rain fell."),
            t("The oven was off."),
        ],
    )
    .with_filter(PropensityFilter {
        propensity: Arc::new(q),
        confounders: vec!["dry weather".into()],
        epsilon: 0.1,
    });
    println!(
        "ROCK kept {} of {} interventions",
        inputs.admissible("Fire broke out.")?.len(),
        inputs.interventions.len()
    );
    println!(
        "ROCK(fire -> house burned): {:.3}",
        rock_score(&inputs, &t("Fire broke out."), &t("The house burned."))?
    );

    // Both baselines on the synthetic held-out split; CEQ counts come from
    // the causal training statements.
    let synth = SyntheticCorpus::generate(&SyntheticConfig::default());
    let statements: Vec<_> = synth
        .records
        .iter()
        .filter(|r| r.is_causal)
        .map(|r| (r.cause.clone(), r.effect.clone()))
        .collect();
    let ceq = CeqMetric {
        stats: CooccurrenceStats::from_corpus(&WordTokenizer, &statements, "synthetic")?,
        config: CeqConfig::default(),
    };
    let rock = RockMetric {
        inputs: RockInputs::new(Arc::new(TableScorer::new(0.5)), vec![t("nothing happened.")]),
    };
    println!(
        "\n{}",
        evaluate_defeasibility(&ceq, &synth.held_out, TiePolicy::Strict)?
    );
    println!(
        "\n{}",
        evaluate_defeasibility(&rock, &synth.held_out, TiePolicy::Strict)?
    );
    Ok(())
}
