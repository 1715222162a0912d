//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use cesar::cesar::{AttentionMode, EmbedderKind, ParamId};
use cesar::numerics::{finite_diff_gradient, Matrix};
use cesar::text::{pack_pair, TokenSequence, Vocabulary};
use cesar::{CesarModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

pub struct GradCase {
    pub model: CesarModel,
    pub seq: TokenSequence,
    pub target: f64,
}

/// A small random model and input, reproducible from `seed`.
pub fn grad_case(seed: u64, kind: EmbedderKind) -> GradCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
    let vocab = Vocabulary::from_tokens(words);
    let dim = rng.gen_range(2..=16);
    let config = ModelConfig {
        dim,
        embedder: kind,
        include_specials: rng.gen_bool(0.5),
        seed,
        ..ModelConfig::default()
    };
    let mut model = match kind {
        EmbedderKind::Fixed => {
            let data = (0..vocab.len() * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let table = Matrix::from_vec(vocab.len(), dim, data).unwrap();
            CesarModel::with_fixed_embeddings(vocab.clone(), table, config).unwrap()
        }
        _ => CesarModel::new(vocab.clone(), config).unwrap(),
    };
    // Move the projections away from their initial scale so the softmax is
    // not close to uniform.
    for id in [ParamId::Query, ParamId::Key] {
        for x in model.param_mut(id).unwrap().as_mut_slice() {
            *x *= rng.gen_range(1.0..3.0);
        }
    }
    let first = 4u32;
    let last = vocab.len() as u32;
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let cause: Vec<u32> = (0..n).map(|_| rng.gen_range(first..last)).collect();
    let effect: Vec<u32> = (0..m).map(|_| rng.gen_range(first..last)).collect();
    GradCase {
        model,
        seq: pack_pair(&cause, &effect, 512).unwrap(),
        target: rng.gen_range(0.0..1.0),
    }
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = cesar::numerics::norm(a).max(cesar::numerics::norm(b));
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

/// Worst relative error between analytic and central-difference gradients
/// over every trainable parameter, with the parameter it occurred in.
pub fn worst_gradient_error(case: &GradCase) -> (f64, ParamId) {
    let (_, grads) = case
        .model
        .loss_and_grads_sequence(&case.seq, case.target)
        .unwrap();
    let mut worst = (0.0, ParamId::Query);
    for id in case.model.trainable_params() {
        let x0 = case.model.param(id).unwrap().as_slice().to_vec();
        let mut probe = case.model.clone();
        let numeric = finite_diff_gradient(
            |x| {
                probe.param_mut(id).unwrap().as_mut_slice().copy_from_slice(x);
                probe.loss_and_grads_sequence(&case.seq, case.target).unwrap().0
            },
            &x0,
            FD_STEP,
        )
        .unwrap();
        let analytic = match grads.get(id) {
            Some(g) => g.as_slice().to_vec(),
            None => vec![0.0; x0.len()],
        };
        let e = rel_error(&analytic, &numeric);
        if e > worst.0 {
            worst = (e, id);
        }
    }
    worst
}

pub fn uniform(mut case: GradCase) -> GradCase {
    case.model.set_attention_mode(AttentionMode::Uniform);
    case
}
