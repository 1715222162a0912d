//! Text checkpoint format.
//!
//! ```text
//! cesar-checkpoint
//! format_version 1
//! dim <d>
//! embedder lookup|mixer|fixed
//! attention_mode learned|uniform
//! include_specials true|false
//! max_len <n>
//! seed <u64>
//! vocab_hash <sha256 hex of the vocabulary file form>
//! vocab <count>
//! <one token per line>
//! param <name> <rows> <cols>
//! <one matrix row per line, values as %.16e>
//! ...
//! end
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::embedder::{Embedder, EmbedderKind, Mixer};
use super::model::{CesarModel, ModelConfig, ParamId};
use super::{ModelError, Result};
use crate::numerics::Matrix;
use crate::text::{Vocabulary, WordTokenizer};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "cesar-checkpoint";

fn corrupt(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Corrupt {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l)
            }
            None => Err(corrupt(self.last + 1, "unexpected end of file")),
        }
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| corrupt(self.last, format!("expected `{key}` record")))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let raw = self.field(key)?;
        raw.parse()
            .map_err(|_| corrupt(self.last, format!("bad `{key}` value {raw:?}")))
    }
}

impl CesarModel {
    pub fn to_checkpoint_string(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "format_version {FORMAT_VERSION}");
        let _ = writeln!(out, "dim {}", c.dim);
        let _ = writeln!(out, "embedder {}", c.embedder.as_str());
        let _ = writeln!(out, "attention_mode {}", c.attention_mode);
        let _ = writeln!(out, "include_specials {}", c.include_specials);
        let _ = writeln!(out, "max_len {}", c.max_len);
        let _ = writeln!(out, "seed {}", c.seed);
        let _ = writeln!(out, "vocab_hash {}", self.vocab.content_hash());
        let _ = writeln!(out, "vocab {}", self.vocab.len());
        out.push_str(&self.vocab.to_text());
        let mut params = vec![ParamId::Table];
        if self.embedder.mixer.is_some() {
            params.extend([ParamId::MixerQuery, ParamId::MixerKey, ParamId::MixerValue]);
        }
        params.extend([ParamId::Query, ParamId::Key]);
        for id in params {
            let m = self.param(id).expect("listed parameter exists");
            let _ = writeln!(out, "param {} {} {}", id.name(), m.rows(), m.cols());
            for r in 0..m.rows() {
                let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_checkpoint_string())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_str(&fs::read_to_string(path)?)
    }

    /// Loads and additionally requires the stored vocabulary to match `vocab`.
    pub fn load_with_vocab(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let model = Self::load(path)?;
        let (found, expected) = (model.vocab.content_hash(), vocab.content_hash());
        if found != expected {
            return Err(ModelError::VocabMismatch { found, expected });
        }
        Ok(model)
    }

    pub fn from_checkpoint_str(text: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            last: 0,
        };
        if lines.next()? != MAGIC {
            return Err(corrupt(1, "not a cesar checkpoint"));
        }
        let version: u32 = lines.parsed("format_version")?;
        if version != FORMAT_VERSION {
            return Err(ModelError::VersionMismatch {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let dim: usize = lines.parsed("dim")?;
        let embedder_raw = lines.field("embedder")?;
        let embedder = EmbedderKind::parse(embedder_raw)
            .ok_or_else(|| corrupt(lines.last, format!("unknown embedder {embedder_raw:?}")))?;
        let attention_mode = lines.parsed("attention_mode")?;
        let include_specials = lines.parsed("include_specials")?;
        let max_len = lines.parsed("max_len")?;
        let seed = lines.parsed("seed")?;
        let header_hash = lines.field("vocab_hash")?.to_string();
        let vocab_len: usize = lines.parsed("vocab")?;
        let mut vocab_text = String::new();
        for _ in 0..vocab_len {
            vocab_text.push_str(lines.next()?);
            vocab_text.push('\n');
        }
        let vocab = Vocabulary::from_text(&vocab_text).map_err(|e| corrupt(lines.last, e.to_string()))?;
        let found = vocab.content_hash();
        if found != header_hash {
            return Err(ModelError::VocabMismatch {
                found,
                expected: header_hash,
            });
        }

        let mut read_param = |expect: ParamId, rows: usize| -> Result<Matrix> {
            let header = lines.field("param")?;
            let parts: Vec<&str> = header.split(' ').collect();
            let shape = match parts.as_slice() {
                [name, r, c] if *name == expect.name() => (r.parse::<usize>().ok(), c.parse::<usize>().ok()),
                _ => return Err(corrupt(lines.last, format!("expected param {}", expect.name()))),
            };
            if shape != (Some(rows), Some(dim)) {
                return Err(corrupt(
                    lines.last,
                    format!("param {} has wrong shape", expect.name()),
                ));
            }
            let mut data = Vec::with_capacity(rows * dim);
            for _ in 0..rows {
                let line = lines.next()?;
                let before = data.len();
                for v in line.split(' ') {
                    data.push(
                        v.parse::<f64>()
                            .map_err(|_| corrupt(lines.last, format!("bad value {v:?}")))?,
                    );
                }
                if data.len() - before != dim {
                    return Err(corrupt(lines.last, "row length mismatch"));
                }
            }
            Matrix::from_vec(rows, dim, data).map_err(|e| corrupt(lines.last, e.to_string()))
        };

        let table = read_param(ParamId::Table, vocab.len())?;
        let mixer = if embedder == EmbedderKind::Mixer {
            Some(Mixer {
                query: read_param(ParamId::MixerQuery, dim)?,
                key: read_param(ParamId::MixerKey, dim)?,
                value: read_param(ParamId::MixerValue, dim)?,
            })
        } else {
            None
        };
        let w_q = read_param(ParamId::Query, dim)?;
        let w_k = read_param(ParamId::Key, dim)?;
        if lines.next()? != "end" {
            return Err(corrupt(lines.last, "missing end marker"));
        }
        Ok(CesarModel {
            config: ModelConfig {
                dim,
                embedder,
                attention_mode,
                include_specials,
                max_len,
                seed,
            },
            vocab,
            tokenizer: Arc::new(WordTokenizer),
            embedder: Embedder {
                kind: embedder,
                table,
                mixer,
            },
            w_q,
            w_k,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::EventText;

    fn model(kind: EmbedderKind) -> CesarModel {
        let vocab = Vocabulary::from_tokens(["fire", "starts", "house", "burns", "."]);
        CesarModel::new(
            vocab,
            ModelConfig {
                dim: 6,
                embedder: kind,
                ..ModelConfig::default()
            },
        )
        .unwrap()
    }

    fn score(m: &CesarModel) -> f64 {
        m.score(
            &EventText::new("Fire starts.").unwrap(),
            None,
            &EventText::new("House burns.").unwrap(),
        )
        .unwrap()
        .score
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        for kind in [EmbedderKind::Lookup, EmbedderKind::Mixer] {
            let m = model(kind);
            let back = CesarModel::from_checkpoint_str(&m.to_checkpoint_string()).unwrap();
            assert_eq!(back, m);
            assert_eq!(score(&back).to_bits(), score(&m).to_bits());
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let text = model(EmbedderKind::Lookup)
            .to_checkpoint_string()
            .replace("format_version 1", "format_version 2");
        assert!(matches!(
            CesarModel::from_checkpoint_str(&text),
            Err(ModelError::VersionMismatch {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn vocabulary_hash_checked() {
        let m = model(EmbedderKind::Lookup);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        m.save(&path).unwrap();
        let other = Vocabulary::from_tokens(["rain"]);
        assert!(matches!(
            CesarModel::load_with_vocab(&path, &other),
            Err(ModelError::VocabMismatch { .. })
        ));
        assert!(CesarModel::load_with_vocab(&path, m.vocab()).is_ok());

        let tampered = m.to_checkpoint_string().replace("\nburns\n", "\nburn\n");
        assert!(matches!(
            CesarModel::from_checkpoint_str(&tampered),
            Err(ModelError::VocabMismatch { .. })
        ));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = model(EmbedderKind::Lookup).to_checkpoint_string();
        let cut = &text[..text.len() / 2];
        assert!(matches!(
            CesarModel::from_checkpoint_str(cut),
            Err(ModelError::Corrupt { .. })
        ));
        assert!(CesarModel::from_checkpoint_str("hello\n").is_err());
    }
}
