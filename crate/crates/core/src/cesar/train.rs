//! Mini-batch MSE training with AdamW and a linearly decaying learning rate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{CesarModel, Gradients, ParamId};
use super::{ModelError, Result};
use crate::data::TrainingExample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Peak learning rate at step 0; decays linearly to 0 at the last step.
    pub learning_rate: f64,
    /// Multiplier on `learning_rate`. 1e-5 is a fine-tuning rate for a
    /// pretrained encoder; the embedders here start from random weights
    /// and need a larger step, so the default scale is
    /// [`TrainConfig::DEFAULT_LR_SCALE`] (peak rate 1e-2).
    pub lr_scale: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 4,
            learning_rate: 1e-5,
            lr_scale: Self::DEFAULT_LR_SCALE,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 16,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub const DEFAULT_LR_SCALE: f64 = 1e3;

    pub fn peak_lr(&self) -> f64 {
        self.learning_rate * self.lr_scale
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.peak_lr() > 0.0 && self.peak_lr().is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if self.weight_decay < 0.0 || self.epsilon <= 0.0 {
            return bad("weight_decay must be >= 0 and epsilon > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    /// Mean per-example loss of each epoch, measured before each update.
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
}

struct AdamW {
    moments: BTreeMap<ParamId, (Vec<f64>, Vec<f64>)>,
    step: u64,
}

impl AdamW {
    fn new() -> Self {
        Self {
            moments: BTreeMap::new(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut CesarModel, grads: &Gradients, lr: f64, cfg: &TrainConfig) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - cfg.beta1.powi(t);
        let bias2 = 1.0 - cfg.beta2.powi(t);
        for id in model.trainable_params() {
            let grad = grads.get(id).map(|g| g.as_slice());
            let param = model.param_mut(id).expect("trainable parameter exists");
            let values = param.as_mut_slice();
            let (m, v) = self
                .moments
                .entry(id)
                .or_insert_with(|| (vec![0.0; values.len()], vec![0.0; values.len()]));
            for k in 0..values.len() {
                let g = grad.map_or(0.0, |g| g[k]);
                values[k] -= lr * cfg.weight_decay * values[k];
                m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
                v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                values[k] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Trains a copy of `model`. Deterministic for a fixed `config.seed`.
pub fn train(
    model: &CesarModel,
    dataset: &[TrainingExample],
    config: &TrainConfig,
) -> Result<(CesarModel, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if let Some(bad) = dataset.iter().find(|e| !(0.0..=1.0).contains(&e.target)) {
        return Err(ModelError::InvalidTarget(bad.target));
    }
    let sequences = dataset
        .iter()
        .map(|e| model.encode(&e.cause, e.addition.as_ref(), &e.effect))
        .collect::<Result<Vec<_>>>()?;

    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut optimizer = AdamW::new();
    let batches_per_epoch = dataset.len().div_ceil(config.batch_size);
    let total_steps = batches_per_epoch * config.epochs;
    let peak = config.peak_lr();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Gradients::default();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (loss, score, g) = model.forward_backward(&sequences[i], dataset[i].target)?;
                if !loss.is_finite() || !g.max_abs().is_finite() {
                    return Err(ModelError::NonFiniteLoss {
                        step,
                        example: i,
                        score,
                        target: dataset[i].target,
                    });
                }
                loss_sum += loss;
                grads.add_all(&g, scale);
            }
            let lr = peak * (total_steps - step) as f64 / total_steps as f64;
            optimizer.update(&mut model, &grads, lr, config);
            step += 1;
        }
        let mean = loss_sum / dataset.len() as f64;
        log::info!("epoch {} loss {:.6}", epoch + 1, mean);
        epoch_loss.push(mean);
    }
    Ok((
        model,
        TrainReport {
            epoch_loss,
            steps: step,
        },
    ))
}

/// `epoch,loss` CSV with a header row.
pub fn write_loss_curve(path: impl AsRef<Path>, report: &TrainReport) -> Result<()> {
    let mut out = String::from("epoch,loss\n");
    for (i, loss) in report.epoch_loss.iter().enumerate() {
        writeln!(out, "{},{loss}", i + 1).expect("write to string");
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cesar::ModelConfig;
    use crate::text::{EventText, Vocabulary};

    fn example(cause: &str, addition: Option<&str>, effect: &str, target: f64) -> TrainingExample {
        TrainingExample {
            cause: EventText::new(cause).unwrap(),
            addition: addition.map(|a| EventText::new(a).unwrap()),
            effect: EventText::new(effect).unwrap(),
            target,
        }
    }

    fn model() -> CesarModel {
        let vocab = Vocabulary::from_tokens(["fire", "starts", "house", "burns", "rain", "."]);
        CesarModel::new(
            vocab,
            ModelConfig {
                dim: 8,
                ..ModelConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let data = vec![example("Fire starts.", None, "House burns.", 0.7)];
        assert!(matches!(
            train(&model(), &data, &cfg),
            Err(ModelError::InvalidConfig(_))
        ));
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(matches!(
            train(&model(), &[], &TrainConfig::default()),
            Err(ModelError::EmptyDataset)
        ));
    }

    #[test]
    fn repeated_example_loss_never_increases() {
        let data = vec![example("Fire starts.", None, "House burns.", 1.0); 8];
        let cfg = TrainConfig {
            epochs: 6,
            lr_scale: 100.0,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (_, report) = train(&model(), &data, &cfg).unwrap();
        assert_eq!(report.epoch_loss.len(), 6);
        for w in report.epoch_loss.windows(2) {
            assert!(w[1] <= w[0], "{:?}", report.epoch_loss);
        }
    }

    #[test]
    fn same_seed_same_parameters() {
        let data = vec![
            example("Fire starts.", None, "House burns.", 0.7),
            example("Fire starts.", Some("Rain."), "House burns.", 0.2),
            example("Rain.", None, "House burns.", 0.0),
        ];
        let cfg = TrainConfig {
            batch_size: 2,
            ..TrainConfig::default()
        };
        let (a, ra) = train(&model(), &data, &cfg).unwrap();
        let (b, rb) = train(&model(), &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_ne!(a, model());
    }

    #[test]
    fn loss_curve_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let report = TrainReport {
            epoch_loss: vec![0.5, 0.25],
            steps: 2,
        };
        write_loss_curve(&path, &report).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "epoch,loss\n1,0.5\n2,0.25\n");
    }
}
