use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Gradients, ParamId};
use super::{ModelError, Result};
use crate::numerics::Matrix;
use crate::text::{Vocabulary, PAD, RESERVED};

/// Token encoder backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    /// Trainable `|vocab| × d` lookup table.
    Lookup,
    /// Lookup table followed by one residual self-attention layer over the
    /// whole packed sequence, so cause and effect tokens see each other.
    Mixer,
    /// Frozen vectors loaded from a file.
    Fixed,
}

impl EmbedderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbedderKind::Lookup => "lookup",
            EmbedderKind::Mixer => "mixer",
            EmbedderKind::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lookup" => Some(EmbedderKind::Lookup),
            "mixer" => Some(EmbedderKind::Mixer),
            "fixed" => Some(EmbedderKind::Fixed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mixer {
    pub query: Matrix,
    pub key: Matrix,
    pub value: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Embedder {
    pub kind: EmbedderKind,
    pub table: Matrix,
    pub mixer: Option<Mixer>,
}

struct MixerCache {
    query: Matrix,
    key: Matrix,
    value: Matrix,
    probs: Matrix,
}

/// Forward state kept for the backward pass.
pub(crate) struct EmbedCache {
    ids: Vec<u32>,
    input: Matrix,
    mixer: Option<MixerCache>,
}

pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Matrix::from_vec(rows, cols, data).expect("finite init")
}

/// Uniform entries with variance `1/cols`, so rows have roughly unit norm
/// and initial attention logits stay O(1/√d).
pub(crate) fn unit_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let limit = (3.0 / cols as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Matrix::from_vec(rows, cols, data).expect("finite init")
}

fn row_softmax(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
    out
}

impl Embedder {
    pub fn random(kind: EmbedderKind, vocab_size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let table = unit_uniform(vocab_size, dim, rng);
        let mixer = (kind == EmbedderKind::Mixer).then(|| Mixer {
            query: glorot(dim, dim, rng),
            key: glorot(dim, dim, rng),
            value: glorot(dim, dim, rng),
        });
        Self { kind, table, mixer }
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    /// Hidden states for `ids`, one row per id.
    pub fn forward(&self, ids: &[u32]) -> Result<(Matrix, EmbedCache)> {
        let rows = self.table.rows();
        let mut indices = Vec::with_capacity(ids.len());
        for &id in ids {
            if id as usize >= rows {
                return Err(ModelError::TokenOutOfRange { id, rows });
            }
            indices.push(id as usize);
        }
        let input = self.table.select_rows(&indices);
        let Some(mixer) = &self.mixer else {
            return Ok((
                input.clone(),
                EmbedCache {
                    ids: ids.to_vec(),
                    input,
                    mixer: None,
                },
            ));
        };
        let query = input.matmul(&mixer.query)?;
        let key = input.matmul(&mixer.key)?;
        let value = input.matmul(&mixer.value)?;
        let mut logits = query.matmul_transposed(&key)?;
        logits.scale(1.0 / (self.dim() as f64).sqrt());
        let probs = row_softmax(&logits);
        let mut hidden = probs.matmul(&value)?;
        hidden.add_scaled(&input, 1.0);
        Ok((
            hidden,
            EmbedCache {
                ids: ids.to_vec(),
                input,
                mixer: Some(MixerCache {
                    query,
                    key,
                    value,
                    probs,
                }),
            },
        ))
    }

    /// Accumulates parameter gradients given `d_hidden = ∂L/∂hidden`.
    pub fn backward(&self, cache: &EmbedCache, d_hidden: &Matrix, grads: &mut Gradients) -> Result<()> {
        if self.kind == EmbedderKind::Fixed {
            return Ok(());
        }
        let mut d_input = d_hidden.clone();
        if let (Some(mixer), Some(mc)) = (&self.mixer, &cache.mixer) {
            let d_probs = d_hidden.matmul_transposed(&mc.value)?;
            let d_value = mc.probs.transposed_matmul(d_hidden)?;
            let scale = 1.0 / (self.dim() as f64).sqrt();
            let mut d_logits = Matrix::zeros(mc.probs.rows(), mc.probs.cols());
            for r in 0..mc.probs.rows() {
                let p = mc.probs.row(r);
                let dp = d_probs.row(r);
                let inner: f64 = p.iter().zip(dp).map(|(a, b)| a * b).sum();
                for (c, out) in d_logits.row_mut(r).iter_mut().enumerate() {
                    *out = p[c] * (dp[c] - inner) * scale;
                }
            }
            let d_query = d_logits.matmul(&mc.key)?;
            let d_key = d_logits.transposed_matmul(&mc.query)?;
            grads.accumulate(ParamId::MixerQuery, &cache.input.transposed_matmul(&d_query)?);
            grads.accumulate(ParamId::MixerKey, &cache.input.transposed_matmul(&d_key)?);
            grads.accumulate(ParamId::MixerValue, &cache.input.transposed_matmul(&d_value)?);
            d_input.add_scaled(&d_query.matmul_transposed(&mixer.query)?, 1.0);
            d_input.add_scaled(&d_key.matmul_transposed(&mixer.key)?, 1.0);
            d_input.add_scaled(&d_value.matmul_transposed(&mixer.value)?, 1.0);
        }
        let table_grad = grads.entry(ParamId::Table, self.table.shape());
        for (row, &id) in cache.ids.iter().enumerate() {
            for (g, d) in table_grad.row_mut(id as usize).iter_mut().zip(d_input.row(row)) {
                *g += d;
            }
        }
        Ok(())
    }
}

/// Reads whitespace-separated `token v1 … vd` lines (GloVe layout).
///
/// Reserved tokens missing from the file get fixed pseudo-random vectors
/// (`[PAD]` gets zeros).
pub fn load_fixed_embeddings(path: impl AsRef<Path>) -> Result<(Vocabulary, Matrix)> {
    let text = fs::read_to_string(path)?;
    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values = parts
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| ModelError::EmbeddingFile {
                line: line_no,
                message: e.to_string(),
            })?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::EmbeddingFile {
                line: line_no,
                message: "non-finite value".into(),
            });
        }
        match dim {
            None if values.is_empty() => {
                return Err(ModelError::EmbeddingFile {
                    line: line_no,
                    message: "no vector values".into(),
                })
            }
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(ModelError::EmbeddingFile {
                    line: line_no,
                    message: format!("expected {d} values, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        entries.push((token.to_string(), values));
    }
    let dim = dim.ok_or(ModelError::EmbeddingFile {
        line: 0,
        message: "file has no vectors".into(),
    })?;
    let mut seen = HashSet::new();
    if let Some(i) = entries.iter().position(|(t, _)| !seen.insert(t.as_str())) {
        return Err(ModelError::EmbeddingFile {
            line: i + 1,
            message: format!("duplicate token {:?}", entries[i].0),
        });
    }
    let vocab = Vocabulary::from_tokens(
        entries
            .iter()
            .filter(|(t, _)| !RESERVED.contains(&t.as_str()))
            .map(|(t, _)| t.clone()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut table = unit_uniform(vocab.len(), dim, &mut rng);
    table.row_mut(0).iter_mut().for_each(|v| *v = 0.0);
    debug_assert_eq!(vocab.token(0), Some(PAD));
    for (token, values) in entries {
        let id = vocab.id(&token).expect("token inserted above") as usize;
        table.row_mut(id).copy_from_slice(&values);
    }
    Ok((vocab, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn fixed_file_parsing() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "fire 1 0").unwrap();
        writeln!(f, "burns 0.5 0.5").unwrap();
        let (vocab, table) = load_fixed_embeddings(f.path()).unwrap();
        assert_eq!(vocab.len(), 6);
        assert_eq!(table.row(vocab.id("burns").unwrap() as usize), &[0.5, 0.5]);
        assert_eq!(table.row(0), &[0.0, 0.0]);
    }

    #[test]
    fn fixed_file_rejects_ragged() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "fire 1 0").unwrap();
        writeln!(f, "burns 0.5").unwrap();
        let err = load_fixed_embeddings(f.path()).unwrap_err();
        assert!(matches!(err, ModelError::EmbeddingFile { line: 2, .. }), "{err}");
    }

    #[test]
    fn out_of_range_id() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = Embedder::random(EmbedderKind::Lookup, 5, 3, &mut rng);
        assert!(matches!(
            e.forward(&[2, 9]),
            Err(ModelError::TokenOutOfRange { id: 9, rows: 5 })
        ));
    }

    #[test]
    fn row_softmax_rows_sum_to_one() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, 0.0, 0.0]]).unwrap();
        let p = row_softmax(&m);
        for r in 0..2 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
