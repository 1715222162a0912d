//! The earthquake case study, offline: builds the three prompts, answers
//! them from the bundled mock fixtures, and scores them.
//!
//! Run from the crate directory or the workspace root.

use std::path::Path;
use std::sync::Arc;

use cesar::baselines::{
    ctcw_build_prompt, ctcw_pair_prompt, ctcw_parse, ctcw_score, CtcwProvider, CtcwTemplate, MockProvider,
};
use cesar::data::load_defeasibility;
use cesar::eval::{evaluate_defeasibility, CtcwMetric};
use cesar::TiePolicy;

fn fixture(name: &str) -> std::path::PathBuf {
    let local = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    if local.exists() {
        local
    } else {
        Path::new("fixtures").join(name)
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mock = MockProvider::from_fixtures(fixture("ctcw_case_study.jsonl"))?;
    let d = &load_defeasibility(fixture("case.jsonl"))?[0];

    let prompts = [
        ("bare pair", ctcw_pair_prompt(&d.cause, &d.effect)),
        (
            "fact + supporter",
            ctcw_build_prompt(CtcwTemplate::Fact, &d.cause, &d.effect, Some(&d.supporter))?,
        ),
        (
            "and later + defeater",
            ctcw_build_prompt(CtcwTemplate::AndLater, &d.cause, &d.effect, Some(&d.defeater))?,
        ),
    ];
    for (label, prompt) in &prompts {
        let table = mock.probabilities(prompt)?;
        println!("{label}: {}", prompt.lines().next().unwrap_or_default());
        println!(
            "  after {:.2}  before {:.2}  therefore {:.2}  because {:.2}  ->  {:.2}",
            table.after,
            table.before,
            table.therefore,
            table.because,
            ctcw_score(&table, true)
        );
    }
    println!(
        "\ninstruction block sent with every prompt:\n{}\n",
        cesar::baselines::INSTRUCTION
    );

    // A provider reply in free text goes through the same parser.
    let reply = "- after: 0.30\n- before: 0.50\n- therefore: 0.20\n- because: 0.00";
    println!("parsed reply scores {:.2}", ctcw_score(&ctcw_parse(reply)?, true));

    let metric = CtcwMetric::new(Arc::new(mock));
    let report = evaluate_defeasibility(&metric, std::slice::from_ref(d), TiePolicy::Strict)?;
    println!("\n{report}");
    Ok(())
}
