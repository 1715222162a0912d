mod common;

use std::collections::{BTreeSet, HashMap};

use cesar::baselines::{
    ctcw_scores, CooccurrenceStats, CtcwProvider, MockProvider, ProbabilityTable, RockInputs, TableScorer,
};
use cesar::cesar::{AttentionMode, EmbedderKind};
use cesar::data::{
    build_augmented_set, split_with, AugmentationRecord, DefeasibleInstance, Domain, TargetConstants,
    TimeInterval,
};
use cesar::eval::{evaluate_defeasibility, geometric_mean, FnMetric};
use cesar::numerics::{abs_cosine, global_softmax, kde_density, linspace, silverman_bandwidth, Matrix};
use cesar::{AdditionRole, CausalMetric, EventText, TiePolicy};
use proptest::prelude::*;
use std::sync::Arc;

fn vec_f64(len: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, len)
}

fn t(s: &str) -> EventText {
    EventText::new(s).unwrap()
}

fn instances(n: usize) -> Vec<DefeasibleInstance> {
    (0..n)
        .map(|i| DefeasibleInstance {
            id: format!("i{i}"),
            domain: Domain::ALL[i % Domain::ALL.len()],
            cause: t(&format!("c{i}")),
            effect: t("e"),
            time_interval: TimeInterval::ALL[i % TimeInterval::ALL.len()],
            supporter: t("s"),
            defeater: t("d"),
        })
        .collect()
}

/// A metric that replays `(base, supporter, defeater)` per instance index,
/// passed through `g`.
fn replay(scores: Vec<(f64, f64, f64)>, g: fn(f64) -> f64) -> Box<dyn CausalMetric> {
    Box::new(FnMetric::new(
        "replay",
        move |c: &EventText, a: Option<(&EventText, AdditionRole)>, _: &EventText| {
            let i: usize = c.as_str()[1..].parse().unwrap();
            let (b, s, d) = scores[i];
            g(match a.map(|(_, r)| r) {
                None => b,
                Some(AdditionRole::Supporter) => s,
                Some(_) => d,
            })
        },
    ))
}

/// Scores drawn from a handful of values so ties are common.
fn triples() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    let v = prop::sample::select(vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0]);
    prop::collection::vec((v.clone(), v.clone(), v), 1..40)
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant_and_normalized(logits in vec_f64(1..30), shift in -50.0f64..50.0) {
        let cols = 1 + logits.len() % 5;
        let rows = logits.len() / cols;
        prop_assume!(rows > 0);
        let m = Matrix::from_vec(rows, cols, logits[..rows * cols].to_vec()).unwrap();
        let p = global_softmax(&m).unwrap();
        let q = global_softmax(&m.map(|x| x + shift)).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-12);
        prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
        prop_assert!(p.max_abs_diff(&q) < 1e-12);
    }

    #[test]
    fn abs_cosine_is_scale_and_sign_invariant(
        uv in (1usize..12).prop_flat_map(|d| (vec_f64(d), vec_f64(d))),
        a in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
    ) {
        let (u, v) = uv;
        let c = abs_cosine(&u, &v).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
        let scaled: Vec<f64> = u.iter().map(|x| a * x).collect();
        let flipped: Vec<f64> = u.iter().map(|x| -x).collect();
        prop_assert!((abs_cosine(&scaled, &v).unwrap() - c).abs() < 1e-12);
        prop_assert_eq!(abs_cosine(&flipped, &v).unwrap(), c);
        prop_assert_eq!(abs_cosine(&v, &u).unwrap(), c);
    }

    #[test]
    fn kde_integrates_to_one(samples in prop::collection::vec(-1.0f64..1.0, 1..60)) {
        let h = silverman_bandwidth(&samples).unwrap_or(0.05);
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min) - 8.0 * h;
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 8.0 * h;
        let curve = kde_density(&samples, h, &linspace(lo, hi, 512)).unwrap();
        prop_assert!((curve.integral() - 1.0).abs() < 0.01, "integral {}", curve.integral());
    }

    #[test]
    fn uniform_attention_scores_the_mean_association(seed in 0u64..10_000) {
        let mut case = common::grad_case(seed, EmbedderKind::Lookup);
        case.model.set_attention_mode(AttentionMode::Uniform);
        let b = case.model.score_sequence(&case.seq).unwrap();
        let m = &b.association;
        let mean = m.sum() / (m.rows() * m.cols()) as f64;
        prop_assert!((b.score - mean).abs() < 1e-12);
    }

    #[test]
    fn cesar_scores_lie_in_unit_interval(seed in 0u64..10_000) {
        for kind in [EmbedderKind::Lookup, EmbedderKind::Mixer] {
            let case = common::grad_case(seed, kind);
            let b = case.model.score_sequence(&case.seq).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&b.score));
            prop_assert!((b.attention.sum() - 1.0).abs() < 1e-12);
            prop_assert!((b.strength.sum() - b.score).abs() < 1e-12);
        }
    }

    #[test]
    fn ceq_strength_is_nonnegative_and_monotone_in_joint_count(
        ca in 1u64..50, cb in 1u64..50, joint in 0u64..50, alpha in 0.0f64..2.0,
    ) {
        let joint = joint.min(ca).min(cb);
        let mut stats = CooccurrenceStats::default();
        stats.word_count.insert("a".into(), ca);
        stats.word_count.insert("b".into(), cb);
        stats.pair_count.insert(("a".into(), "b".into()), joint);
        let s = stats.pair_strength("a", "b", alpha);
        prop_assert!(s >= 0.0);
        stats.pair_count.insert(("a".into(), "b".into()), joint + 1);
        prop_assert!(stats.pair_strength("a", "b", alpha) > s);
    }

    #[test]
    fn rock_scores_lie_in_signed_unit_interval(
        direct in 0.0f64..=1.0, others in prop::collection::vec(0.0f64..=1.0, 1..8),
    ) {
        let mut f = TableScorer::new(0.0).with("c", "e", direct);
        let interventions: Vec<EventText> = (0..others.len()).map(|i| t(&format!("a{i}"))).collect();
        for (a, &v) in interventions.iter().zip(&others) {
            f = f.with(a.as_str(), "e", v);
        }
        let s = RockInputs::new(Arc::new(f), interventions).score_text("c", "e").unwrap();
        let mean = others.iter().sum::<f64>() / others.len() as f64;
        prop_assert!((-1.0..=1.0).contains(&s));
        prop_assert!((s - (direct - mean)).abs() < 1e-12);
    }

    #[test]
    fn ctcw_scores_are_bounded(p in prop::array::uniform4(0.0f64..=1.0)) {
        let table = ProbabilityTable::new(p[0], p[1], p[2], p[3]).unwrap();
        let s = ctcw_scores(&table);
        prop_assert!((-1.0..=1.0).contains(&s.clamped));
        prop_assert!((-2.0..=2.0).contains(&s.raw));
        if p.iter().sum::<f64>() <= 1.0 - 1e-9 {
            prop_assert_eq!(s.raw, s.clamped);
        }
    }

    #[test]
    fn mock_provider_is_a_pure_function_of_the_prompt(prompt in ".{0,200}") {
        let a = MockProvider::new().probabilities(&prompt).unwrap();
        let b = MockProvider::new().probabilities(&prompt).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.after + a.before + a.therefore + a.because <= 1.0);
    }

    #[test]
    fn lenient_never_scores_below_strict(scores in triples()) {
        let data = instances(scores.len());
        let m = replay(scores, |x| x);
        let strict = evaluate_defeasibility(&m, &data, TiePolicy::Strict).unwrap();
        let lenient = evaluate_defeasibility(&m, &data, TiePolicy::Lenient).unwrap();
        prop_assert!(strict.supporter_accuracy <= lenient.supporter_accuracy);
        prop_assert!(strict.defeater_accuracy <= lenient.defeater_accuracy);
        prop_assert_eq!(strict.tie_count, lenient.tie_count);
    }

    #[test]
    fn accuracy_is_invariant_under_increasing_transforms(scores in triples()) {
        let data = instances(scores.len());
        let plain = evaluate_defeasibility(&replay(scores.clone(), |x| x), &data, TiePolicy::Strict).unwrap();
        let warped = evaluate_defeasibility(&replay(scores, |x| x.powi(3) + 2.0 * x - 7.0), &data, TiePolicy::Strict).unwrap();
        prop_assert_eq!(plain.supporter_accuracy, warped.supporter_accuracy);
        prop_assert_eq!(plain.defeater_accuracy, warped.defeater_accuracy);
        prop_assert_eq!(plain.tie_count, warped.tie_count);
    }

    #[test]
    fn geometric_mean_is_bounded_by_its_inputs(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let g = geometric_mean(a, b);
        prop_assert!(g <= a.max(b) + 1e-15);
        prop_assert!(g >= a.min(b) - 1e-15);
    }

    #[test]
    fn augmentation_yields_the_expected_row_count(kinds in prop::collection::vec(0u8..3, 0..50)) {
        // 0: non-causal, 1: causal with explanation, 2: causal with opposite too
        let records: Vec<AugmentationRecord> = kinds
            .iter()
            .map(|&k| AugmentationRecord {
                cause: t("c"),
                effect: t("e"),
                explanation: (k > 0).then(|| t("h")),
                opposite: (k == 2).then(|| t("not h")),
                is_causal: k > 0,
            })
            .collect();
        let expected: usize = kinds.iter().map(|&k| usize::from(k) + 1).sum();
        let out = build_augmented_set(&records, &TargetConstants::default()).unwrap();
        prop_assert_eq!(out.len(), expected);
    }

    #[test]
    fn split_is_disjoint_and_exhaustive(n in 0usize..300, seed in any::<u64>(), p in prop::array::uniform3(1usize..100)) {
        let items: Vec<usize> = (0..n).collect();
        let s = split_with(&items, p, seed);
        let all: Vec<usize> = s.train.iter().chain(&s.dev).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), n);
        let unique: BTreeSet<usize> = all.iter().copied().collect();
        prop_assert_eq!(unique, items.iter().copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(split_with(&items, p, seed), s);
    }
}

#[test]
fn replay_metric_sees_every_role() {
    let data = instances(2);
    let seen = std::sync::Mutex::new(HashMap::new());
    let m = FnMetric::new(
        "spy",
        |c: &EventText, a: Option<(&EventText, AdditionRole)>, _: &EventText| {
            seen.lock()
                .unwrap()
                .insert((c.to_string(), a.map(|(_, r)| r)), ());
            0.5
        },
    );
    evaluate_defeasibility(&m, &data, TiePolicy::Strict).unwrap();
    assert_eq!(seen.lock().unwrap().len(), 6);
}
