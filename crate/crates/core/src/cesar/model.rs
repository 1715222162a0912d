use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::embedder::{glorot, Embedder, EmbedderKind};
use super::head::{self, ScoreBreakdown};
use super::{ModelError, Result};
use crate::data::TrainingExample;
use crate::numerics::Matrix;
use crate::text::{
    concatenate, pack_pair, tokenize, EventText, TextError, TokenSequence, Tokenizer, Vocabulary,
    WordTokenizer, DEFAULT_MAX_LEN,
};

/// How token-pair weights are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionMode {
    /// Global softmax over `C W_q (E W_k)ᵀ`.
    Learned,
    /// Every pair weighted `1/(n·m)`.
    Uniform,
}

impl fmt::Display for AttentionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttentionMode::Learned => "learned",
            AttentionMode::Uniform => "uniform",
        })
    }
}

impl FromStr for AttentionMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "learned" => Ok(AttentionMode::Learned),
            "uniform" => Ok(AttentionMode::Uniform),
            _ => Err(format!("unknown attention mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub dim: usize,
    pub embedder: EmbedderKind,
    pub attention_mode: AttentionMode,
    /// Keep `[CLS]`/`[SEP]` rows when scoring.
    pub include_specials: bool,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            embedder: EmbedderKind::Lookup,
            attention_mode: AttentionMode::Learned,
            include_specials: true,
            max_len: DEFAULT_MAX_LEN,
            seed: 42,
        }
    }
}

/// Identifies one parameter matrix of a [`CesarModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamId {
    Table,
    MixerQuery,
    MixerKey,
    MixerValue,
    Query,
    Key,
}

impl ParamId {
    pub const ALL: [ParamId; 6] = [
        ParamId::Table,
        ParamId::MixerQuery,
        ParamId::MixerKey,
        ParamId::MixerValue,
        ParamId::Query,
        ParamId::Key,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Table => "embedding",
            ParamId::MixerQuery => "mixer_query",
            ParamId::MixerKey => "mixer_key",
            ParamId::MixerValue => "mixer_value",
            ParamId::Query => "query",
            ParamId::Key => "key",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Gradients keyed by parameter. Missing entries are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    map: BTreeMap<ParamId, Matrix>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.map.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.map.contains_key(&id)
    }

    pub(crate) fn entry(&mut self, id: ParamId, shape: (usize, usize)) -> &mut Matrix {
        self.map
            .entry(id)
            .or_insert_with(|| Matrix::zeros(shape.0, shape.1))
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, grad: &Matrix) {
        self.entry(id, grad.shape()).add_scaled(grad, 1.0);
    }

    pub(crate) fn add_all(&mut self, other: &Gradients, scale: f64) {
        for (id, g) in other.iter() {
            self.entry(id, g.shape()).add_scaled(g, scale);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.map
            .values()
            .flat_map(|m| m.as_slice().iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// A CESAR scorer: vocabulary, token encoder and attention projections.
#[derive(Clone)]
pub struct CesarModel {
    pub(crate) config: ModelConfig,
    pub(crate) vocab: Vocabulary,
    pub(crate) tokenizer: Arc<dyn Tokenizer>,
    pub(crate) embedder: Embedder,
    pub(crate) w_q: Matrix,
    pub(crate) w_k: Matrix,
}

impl fmt::Debug for CesarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CesarModel")
            .field("config", &self.config)
            .field("vocab_size", &self.vocab.len())
            .finish_non_exhaustive()
    }
}

impl PartialEq for CesarModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.vocab == other.vocab
            && self.embedder == other.embedder
            && self.w_q == other.w_q
            && self.w_k == other.w_k
    }
}

fn validate(config: &ModelConfig) -> Result<()> {
    if config.dim == 0 {
        return Err(ModelError::InvalidConfig("dim must be positive".into()));
    }
    if config.max_len < 5 {
        return Err(ModelError::InvalidConfig("max_len must be at least 5".into()));
    }
    Ok(())
}

impl CesarModel {
    /// Randomly initialized model with a trainable embedder.
    pub fn new(vocab: Vocabulary, config: ModelConfig) -> Result<Self> {
        validate(&config)?;
        if config.embedder == EmbedderKind::Fixed {
            return Err(ModelError::InvalidConfig(
                "fixed embedder needs vectors; use CesarModel::with_fixed_embeddings".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w_q = glorot(config.dim, config.dim, &mut rng);
        let w_k = glorot(config.dim, config.dim, &mut rng);
        let embedder = Embedder::random(config.embedder, vocab.len(), config.dim, &mut rng);
        Ok(Self {
            config,
            vocab,
            tokenizer: Arc::new(WordTokenizer),
            embedder,
            w_q,
            w_k,
        })
    }

    /// Model over frozen vectors; only `W_q`, `W_k` train. `config.dim` and
    /// `config.embedder` are taken from the table.
    pub fn with_fixed_embeddings(vocab: Vocabulary, table: Matrix, mut config: ModelConfig) -> Result<Self> {
        if table.rows() != vocab.len() {
            return Err(ModelError::InvalidConfig(format!(
                "{} embedding rows for a vocabulary of {}",
                table.rows(),
                vocab.len()
            )));
        }
        config.dim = table.cols();
        config.embedder = EmbedderKind::Fixed;
        validate(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let w_q = glorot(config.dim, config.dim, &mut rng);
        let w_k = glorot(config.dim, config.dim, &mut rng);
        Ok(Self {
            config,
            vocab,
            tokenizer: Arc::new(WordTokenizer),
            embedder: Embedder {
                kind: EmbedderKind::Fixed,
                table,
                mixer: None,
            },
            w_q,
            w_k,
        })
    }

    pub fn with_tokenizer(mut self, tokenizer: Arc<dyn Tokenizer>) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn tokenizer(&self) -> &dyn Tokenizer {
        self.tokenizer.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Switching modes keeps all parameters.
    pub fn set_attention_mode(&mut self, mode: AttentionMode) {
        self.config.attention_mode = mode;
    }

    pub fn set_include_specials(&mut self, include: bool) {
        self.config.include_specials = include;
    }

    pub fn param(&self, id: ParamId) -> Option<&Matrix> {
        match id {
            ParamId::Table => Some(&self.embedder.table),
            ParamId::MixerQuery => self.embedder.mixer.as_ref().map(|m| &m.query),
            ParamId::MixerKey => self.embedder.mixer.as_ref().map(|m| &m.key),
            ParamId::MixerValue => self.embedder.mixer.as_ref().map(|m| &m.value),
            ParamId::Query => Some(&self.w_q),
            ParamId::Key => Some(&self.w_k),
        }
    }

    pub fn param_mut(&mut self, id: ParamId) -> Option<&mut Matrix> {
        match id {
            ParamId::Table => Some(&mut self.embedder.table),
            ParamId::MixerQuery => self.embedder.mixer.as_mut().map(|m| &mut m.query),
            ParamId::MixerKey => self.embedder.mixer.as_mut().map(|m| &mut m.key),
            ParamId::MixerValue => self.embedder.mixer.as_mut().map(|m| &mut m.value),
            ParamId::Query => Some(&mut self.w_q),
            ParamId::Key => Some(&mut self.w_k),
        }
    }

    /// Replaces a parameter matrix of the same shape.
    pub fn set_param(&mut self, id: ParamId, value: Matrix) -> Result<()> {
        let slot = self
            .param_mut(id)
            .ok_or_else(|| ModelError::InvalidConfig(format!("model has no {} parameter", id.name())))?;
        if slot.shape() != value.shape() {
            return Err(ModelError::InvalidConfig(format!(
                "{} expects shape {:?}, got {:?}",
                id.name(),
                slot.shape(),
                value.shape()
            )));
        }
        *slot = value;
        Ok(())
    }

    pub fn trainable_params(&self) -> Vec<ParamId> {
        ParamId::ALL
            .into_iter()
            .filter(|&id| match id {
                ParamId::Table => self.embedder.kind != EmbedderKind::Fixed,
                ParamId::Query | ParamId::Key => true,
                _ => self.embedder.mixer.is_some(),
            })
            .collect()
    }

    pub fn encode(
        &self,
        cause: &EventText,
        addition: Option<&EventText>,
        effect: &EventText,
    ) -> Result<TokenSequence> {
        let tok = self.tokenizer.as_ref();
        let mut cause_ids = tokenize(&self.vocab, tok, cause)?;
        if let Some(addition) = addition {
            cause_ids = concatenate(&cause_ids, &tokenize(&self.vocab, tok, addition)?)?;
        }
        let effect_ids = tokenize(&self.vocab, tok, effect)?;
        Ok(pack_pair(&cause_ids, &effect_ids, self.config.max_len)?)
    }

    /// Rows of the hidden states that score on each side, as indices into
    /// the active (unpadded) positions.
    fn scoring_rows(&self, seq: &TokenSequence, active: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut cause_rows = Vec::new();
        let mut effect_rows = Vec::new();
        for (row, &pos) in active.iter().enumerate() {
            if !self.config.include_specials && Vocabulary::is_special(seq.ids[pos]) {
                continue;
            }
            if seq.type_ids[pos] == 0 {
                cause_rows.push(row);
            } else {
                effect_rows.push(row);
            }
        }
        if cause_rows.is_empty() {
            return Err(TextError::EmptySegment {
                segment: "cause",
                max_len: self.config.max_len,
            }
            .into());
        }
        if effect_rows.is_empty() {
            return Err(TextError::EmptySegment {
                segment: "effect",
                max_len: self.config.max_len,
            }
            .into());
        }
        Ok((cause_rows, effect_rows))
    }

    /// Cause (n×d) and effect (m×d) embeddings of a packed sequence.
    pub fn embed(&self, seq: &TokenSequence) -> Result<(Matrix, Matrix)> {
        let active: Vec<usize> = seq.active_positions().collect();
        let ids: Vec<u32> = active.iter().map(|&p| seq.ids[p]).collect();
        let (hidden, _) = self.embedder.forward(&ids)?;
        let (cr, er) = self.scoring_rows(seq, &active)?;
        Ok((hidden.select_rows(&cr), hidden.select_rows(&er)))
    }

    /// Attention weights for cause/effect embeddings.
    pub fn attention(&self, cause: &Matrix, effect: &Matrix) -> Result<Matrix> {
        Ok(head::attention(self.config.attention_mode, cause, effect, &self.w_q, &self.w_k)?.0)
    }

    pub fn score(
        &self,
        cause: &EventText,
        addition: Option<&EventText>,
        effect: &EventText,
    ) -> Result<ScoreBreakdown> {
        self.score_sequence(&self.encode(cause, addition, effect)?)
    }

    /// Convenience wrapper over [`CesarModel::score`] for plain strings.
    pub fn score_text(&self, cause: &str, addition: Option<&str>, effect: &str) -> Result<f64> {
        let addition = addition.map(EventText::new).transpose()?;
        Ok(self
            .score(
                &EventText::new(cause)?,
                addition.as_ref(),
                &EventText::new(effect)?,
            )?
            .score)
    }

    pub fn score_sequence(&self, seq: &TokenSequence) -> Result<ScoreBreakdown> {
        let active: Vec<usize> = seq.active_positions().collect();
        let ids: Vec<u32> = active.iter().map(|&p| seq.ids[p]).collect();
        let (hidden, _) = self.embedder.forward(&ids)?;
        let (cr, er) = self.scoring_rows(seq, &active)?;
        let cause = hidden.select_rows(&cr);
        let effect = hidden.select_rows(&er);
        let state = head::forward(self.config.attention_mode, &cause, &effect, &self.w_q, &self.w_k)?;
        let strength = state.association.hadamard(&state.attention)?;
        let name = |row: usize| self.vocab.token(ids[row]).unwrap_or(crate::text::UNK).to_string();
        Ok(ScoreBreakdown {
            cause_tokens: cr.iter().map(|&r| name(r)).collect(),
            effect_tokens: er.iter().map(|&r| name(r)).collect(),
            association: state.association,
            attention: state.attention,
            strength,
            score: state.score,
        })
    }

    /// Squared error against `target` and its gradient for every
    /// trainable parameter.
    pub fn loss_and_grads(&self, example: &TrainingExample) -> Result<(f64, Gradients)> {
        let seq = self.encode(&example.cause, example.addition.as_ref(), &example.effect)?;
        self.loss_and_grads_sequence(&seq, example.target)
    }

    pub fn loss_and_grads_sequence(&self, seq: &TokenSequence, target: f64) -> Result<(f64, Gradients)> {
        let (loss, _, grads) = self.forward_backward(seq, target)?;
        Ok((loss, grads))
    }

    /// Loss, score and gradients.
    pub(crate) fn forward_backward(&self, seq: &TokenSequence, target: f64) -> Result<(f64, f64, Gradients)> {
        if !(0.0..=1.0).contains(&target) {
            return Err(ModelError::InvalidTarget(target));
        }
        let active: Vec<usize> = seq.active_positions().collect();
        let ids: Vec<u32> = active.iter().map(|&p| seq.ids[p]).collect();
        let (hidden, cache) = self.embedder.forward(&ids)?;
        let (cr, er) = self.scoring_rows(seq, &active)?;
        let cause = hidden.select_rows(&cr);
        let effect = hidden.select_rows(&er);
        let state = head::forward(self.config.attention_mode, &cause, &effect, &self.w_q, &self.w_k)?;
        let residual = state.score - target;
        let loss = residual * residual;

        let hg = head::backward(&state, &cause, &effect, &self.w_q, &self.w_k, 2.0 * residual)?;
        let mut grads = Gradients::default();
        grads.accumulate(ParamId::Query, &hg.w_q);
        grads.accumulate(ParamId::Key, &hg.w_k);

        let mut d_hidden = Matrix::zeros(hidden.rows(), hidden.cols());
        for (src, &row) in cr.iter().enumerate() {
            for (d, g) in d_hidden.row_mut(row).iter_mut().zip(hg.cause.row(src)) {
                *d += g;
            }
        }
        for (src, &row) in er.iter().enumerate() {
            for (d, g) in d_hidden.row_mut(row).iter_mut().zip(hg.effect.row(src)) {
                *d += g;
            }
        }
        self.embedder.backward(&cache, &d_hidden, &mut grads)?;
        Ok((loss, state.score, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{CLS_ID, PAD_ID, SEP_ID};

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["fire", "starts", "house", "burns", "."])
    }

    fn small(mode: AttentionMode) -> CesarModel {
        CesarModel::new(
            vocab(),
            ModelConfig {
                dim: 4,
                attention_mode: mode,
                ..ModelConfig::default()
            },
        )
        .unwrap()
    }

    fn seq(cause: &[u32], effect: &[u32]) -> TokenSequence {
        pack_pair(cause, effect, 512).unwrap()
    }

    #[test]
    fn lookup_identity() {
        let mut model = small(AttentionMode::Learned);
        model.set_include_specials(false);
        let fire = model.vocab.id("fire").unwrap();
        let (c, e) = model.embed(&seq(&[fire], &[fire])).unwrap();
        assert_eq!(c.row(0), model.embedder.table.row(fire as usize));
        assert_eq!(c.rows(), 1);
        assert_eq!(e.rows(), 1);
    }

    #[test]
    fn pads_are_excluded() {
        let model = small(AttentionMode::Learned);
        let s = seq(&[4, 5], &[6]);
        let padded = s.clone().pad_to(s.len() + 2);
        assert_eq!(padded.ids[padded.len() - 1], PAD_ID);
        let (c1, e1) = model.embed(&s).unwrap();
        let (c2, e2) = model.embed(&padded).unwrap();
        assert_eq!((c1.rows(), e1.rows()), (c2.rows(), e2.rows()));
        assert_eq!(
            model.score_sequence(&s).unwrap().score,
            model.score_sequence(&padded).unwrap().score
        );
    }

    #[test]
    fn specials_flag_changes_row_counts() {
        let mut model = small(AttentionMode::Learned);
        let s = seq(&[4, 5], &[6]);
        let (c, e) = model.embed(&s).unwrap();
        assert_eq!((c.rows(), e.rows()), (4, 2));
        let b = model.score_sequence(&s).unwrap();
        assert_eq!(b.cause_tokens[0], "[CLS]");
        model.set_include_specials(false);
        let (c, e) = model.embed(&s).unwrap();
        assert_eq!((c.rows(), e.rows()), (2, 1));
        assert!(s.ids.contains(&CLS_ID) && s.ids.contains(&SEP_ID));
    }

    #[test]
    fn identical_and_orthogonal_single_tokens() {
        let mut model = small(AttentionMode::Learned);
        model.set_include_specials(false);
        let fire = model.vocab.id("fire").unwrap() as usize;
        let burns = model.vocab.id("burns").unwrap() as usize;
        let table = &mut model.embedder.table;
        table.row_mut(fire).copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
        table.row_mut(burns).copy_from_slice(&[0.0, 1.0, 0.0, 0.0]);
        let s = |c: usize, e: usize| {
            model
                .score_sequence(&seq(&[c as u32], &[e as u32]))
                .unwrap()
                .score
        };
        assert_eq!(s(fire, fire), 1.0);
        assert_eq!(s(fire, burns), 0.0);
    }

    #[test]
    fn worked_score_example() {
        let mut model = CesarModel::new(
            Vocabulary::from_tokens(["a", "b", "c"]),
            ModelConfig {
                dim: 2,
                include_specials: false,
                ..ModelConfig::default()
            },
        )
        .unwrap();
        model.set_param(ParamId::Query, Matrix::identity(2)).unwrap();
        model.set_param(ParamId::Key, Matrix::identity(2)).unwrap();
        let t = &mut model.embedder.table;
        t.row_mut(4).copy_from_slice(&[1.0, 0.0]);
        t.row_mut(5).copy_from_slice(&[0.0, 1.0]);
        t.row_mut(6).copy_from_slice(&[1.0, 1.0]);
        let b = model.score_sequence(&seq(&[4, 5], &[6])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b.attention.as_slice(), &[0.5, 0.5]);
        assert!((b.score - r).abs() < 1e-15);
        assert_eq!(b.strength, b.association.hadamard(&b.attention).unwrap());
    }

    #[test]
    fn zero_residual_gives_zero_gradients() {
        let model = small(AttentionMode::Learned);
        let s = seq(&[4, 5], &[6, 7]);
        let score = model.score_sequence(&s).unwrap().score;
        let (loss, grads) = model.loss_and_grads_sequence(&s, score).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.max_abs() < 1e-12);
    }

    #[test]
    fn uniform_mode_has_zero_projection_gradients() {
        let model = small(AttentionMode::Uniform);
        let (_, grads) = model
            .loss_and_grads_sequence(&seq(&[4, 5], &[6, 7]), 0.9)
            .unwrap();
        assert!(grads
            .get(ParamId::Query)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        assert!(grads
            .get(ParamId::Key)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&v| v == 0.0));
        assert!(
            grads
                .get(ParamId::Table)
                .unwrap()
                .max_abs_diff(&Matrix::zeros(9, 4))
                > 0.0
        );
    }

    #[test]
    fn fixed_backend_trains_projections_only() {
        let v = vocab();
        let table = Matrix::filled(v.len(), 3, 0.5);
        let mut t = table.clone();
        t.row_mut(4).copy_from_slice(&[1.0, -0.5, 0.2]);
        let model = CesarModel::with_fixed_embeddings(v, t, ModelConfig::default()).unwrap();
        assert_eq!(model.trainable_params(), vec![ParamId::Query, ParamId::Key]);
        let (_, grads) = model
            .loss_and_grads_sequence(&seq(&[4, 5], &[6, 7]), 0.0)
            .unwrap();
        assert!(!grads.contains(ParamId::Table));
        assert!(grads.contains(ParamId::Query) && grads.contains(ParamId::Key));
    }

    #[test]
    fn rejects_target_outside_unit_interval() {
        let model = small(AttentionMode::Learned);
        assert!(matches!(
            model.loss_and_grads_sequence(&seq(&[4], &[5]), 1.5),
            Err(ModelError::InvalidTarget(_))
        ));
    }

    #[test]
    fn text_scoring_path() {
        let model = small(AttentionMode::Learned);
        let s = model.score_text("Fire starts.", None, "House burns.").unwrap();
        assert!((0.0..=1.0).contains(&s));
        let with = model
            .score_text("Fire starts.", Some("House burns."), "House burns.")
            .unwrap();
        assert!((0.0..=1.0).contains(&with));
    }
}
