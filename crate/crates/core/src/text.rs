//! Tokenization, vocabulary and sequence packing.
//!
//! A scoring input is packed BERT-style as
//! `[CLS] cause [SEP] addition [SEP] effect [SEP]`, where everything up to
//! and including the second `[SEP]` is segment 0 and the effect plus its
//! terminating `[SEP]` is segment 1.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const CLS_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

pub const RESERVED: [&str; 4] = [PAD, UNK, CLS, SEP];

/// Maximum packed length, specials included.
pub const DEFAULT_MAX_LEN: usize = 512;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("event text is empty")]
    EmptyText,
    #[error("cannot concatenate an empty token list")]
    EmptyOperand,
    #[error("{segment} segment is empty after truncation to {max_len} tokens")]
    EmptySegment { segment: &'static str, max_len: usize },
    #[error("vocabulary file: {0}")]
    VocabFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TextError>;

/// A cause, effect, supporter or defeater sentence. Never blank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EventText(String);

impl EventText {
    pub fn new(raw: impl Into<String>) -> Result<Self> {
        let raw = raw.into();
        if raw.trim().is_empty() {
            return Err(TextError::EmptyText);
        }
        Ok(Self(raw))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for EventText {
    type Error = TextError;
    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<EventText> for String {
    fn from(value: EventText) -> Self {
        value.0
    }
}

impl fmt::Display for EventText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits text into word strings. Implementations must be deterministic.
pub trait Tokenizer: Send + Sync + fmt::Debug {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Lowercases, splits on whitespace and breaks every punctuation
/// character out as its own token.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn split(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for word in text.split_whitespace() {
            let mut current = String::new();
            for ch in word.chars() {
                if ch.is_alphanumeric() {
                    current.extend(ch.to_lowercase());
                } else {
                    if !current.is_empty() {
                        out.push(std::mem::take(&mut current));
                    }
                    out.push(ch.to_string());
                }
            }
            if !current.is_empty() {
                out.push(current);
            }
        }
        out
    }
}

/// True for tokens made only of punctuation.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric())
}

/// Bijective token ↔ id map with the four reserved tokens at ids 0..=3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(Vec::<String>::new())
    }
}

impl Vocabulary {
    /// Reserved tokens followed by `tokens` (duplicates and reserved
    /// names are skipped).
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for t in RESERVED {
            vocab.push(t.to_string());
        }
        for t in tokens {
            vocab.push(t.into());
        }
        vocab
    }

    fn push(&mut self, token: String) {
        if self.index.contains_key(&token) {
            return;
        }
        self.index.insert(token.clone(), self.tokens.len() as u32);
        self.tokens.push(token);
    }

    /// Builds a vocabulary from every token of `texts`, most frequent first
    /// with ties broken by first appearance. `max_size` caps the number of
    /// non-reserved tokens.
    pub fn build<'a, I>(tokenizer: &dyn Tokenizer, texts: I, max_size: Option<usize>) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
        let mut order = 0usize;
        for text in texts {
            for tok in tokenizer.split(text) {
                if RESERVED.contains(&tok.as_str()) {
                    continue;
                }
                let entry = counts.entry(tok).or_insert_with(|| {
                    order += 1;
                    (0, order)
                });
                entry.0 += 1;
            }
        }
        let mut ranked: Vec<(String, usize, usize)> =
            counts.into_iter().map(|(t, (c, o))| (t, c, o)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        if let Some(cap) = max_size {
            ranked.truncate(cap);
        }
        Self::from_tokens(ranked.into_iter().map(|(t, _, _)| t))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_special(id: u32) -> bool {
        id <= SEP_ID
    }

    /// One token per line; line number is the id.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let tokens: Vec<&str> = text.lines().collect();
        if tokens.len() < RESERVED.len() || tokens[..4] != RESERVED {
            return Err(TextError::VocabFormat(
                "first four lines must be [PAD], [UNK], [CLS], [SEP]".into(),
            ));
        }
        let vocab = Self::from_tokens(tokens[4..].iter().copied());
        if vocab.len() != tokens.len() {
            return Err(TextError::VocabFormat("duplicate token".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// SHA-256 of the persisted text form, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Token ids of `text`, without specials; unknown words map to `[UNK]`.
pub fn tokenize(vocab: &Vocabulary, tokenizer: &dyn Tokenizer, text: &EventText) -> Result<Vec<u32>> {
    let ids: Vec<u32> = tokenizer
        .split(text.as_str())
        .iter()
        .map(|t| vocab.id_or_unk(t))
        .collect();
    if ids.is_empty() {
        return Err(TextError::EmptyText);
    }
    Ok(ids)
}

/// `cause [SEP] addition`.
pub fn concatenate(cause_ids: &[u32], addition_ids: &[u32]) -> Result<Vec<u32>> {
    if cause_ids.is_empty() || addition_ids.is_empty() {
        return Err(TextError::EmptyOperand);
    }
    let mut out = Vec::with_capacity(cause_ids.len() + addition_ids.len() + 1);
    out.extend_from_slice(cause_ids);
    out.push(SEP_ID);
    out.extend_from_slice(addition_ids);
    Ok(out)
}

/// Packed model input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub type_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Positions with `attention_mask == 1`.
    pub fn active_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.attention_mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == 1)
            .map(|(i, _)| i)
    }

    /// Right-pads with `[PAD]` up to `len`.
    pub fn pad_to(mut self, len: usize) -> Self {
        while self.ids.len() < len {
            self.ids.push(PAD_ID);
            self.type_ids.push(0);
            self.attention_mask.push(0);
        }
        self
    }
}

/// Packs a (cause, effect) pair for scoring. `cause_ids` may already carry
/// an appended addition. Tokens are dropped from the tail of the longer
/// segment until the whole sequence fits in `max_len`.
pub fn pack_pair(cause_ids: &[u32], effect_ids: &[u32], max_len: usize) -> Result<TokenSequence> {
    let mut cause = cause_ids.to_vec();
    let mut effect = effect_ids.to_vec();
    let budget = max_len.saturating_sub(3);
    while cause.len() + effect.len() > budget {
        if cause.len() >= effect.len() {
            cause.pop();
        } else {
            effect.pop();
        }
    }
    // a trailing separator left over from truncating an addition is noise
    while cause.last() == Some(&SEP_ID) {
        cause.pop();
    }
    if cause.is_empty() {
        return Err(TextError::EmptySegment {
            segment: "cause",
            max_len,
        });
    }
    if effect.is_empty() {
        return Err(TextError::EmptySegment {
            segment: "effect",
            max_len,
        });
    }
    let n = cause.len() + 2;
    let m = effect.len() + 1;
    let mut ids = Vec::with_capacity(n + m);
    ids.push(CLS_ID);
    ids.extend(cause);
    ids.push(SEP_ID);
    ids.extend(effect);
    ids.push(SEP_ID);
    let mut type_ids = vec![0u8; n];
    type_ids.extend(std::iter::repeat_n(1u8, m));
    Ok(TokenSequence {
        attention_mask: vec![1; ids.len()],
        ids,
        type_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["fire", "starts", ".", "wind", "blows", "house", "burns"])
    }

    fn text(s: &str) -> EventText {
        EventText::new(s).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let v = vocab();
        let ids = tokenize(&v, &WordTokenizer, &text("Fire starts.")).unwrap();
        assert_eq!(
            ids,
            vec![v.id("fire").unwrap(), v.id("starts").unwrap(), v.id(".").unwrap()]
        );
        assert_eq!(
            tokenize(&v, &WordTokenizer, &text("FIRE   starts.")).unwrap(),
            ids
        );
        let unk = tokenize(&v, &WordTokenizer, &text("zyxwv starts.")).unwrap();
        assert_eq!(unk[0], UNK_ID);
        assert_eq!(&unk[1..], &ids[1..]);
    }

    #[test]
    fn empty_text_rejected() {
        assert!(EventText::new("   ").is_err());
        assert!(serde_json::from_str::<EventText>("\"\"").is_err());
    }

    #[test]
    fn concatenate_examples() {
        let v = vocab();
        let fs = [v.id("fire").unwrap(), v.id("starts").unwrap()];
        let wb = [v.id("wind").unwrap(), v.id("blows").unwrap()];
        let out = concatenate(&fs, &wb).unwrap();
        assert_eq!(out, vec![fs[0], fs[1], SEP_ID, wb[0], wb[1]]);
        assert_eq!(concatenate(&[7], &[8]).unwrap().len(), 3);
        assert!(concatenate(&[], &[8]).is_err());
    }

    #[test]
    fn packed_segments() {
        let joined = concatenate(&[4, 5], &[7, 8]).unwrap();
        let seq = pack_pair(&joined, &[9, 10], DEFAULT_MAX_LEN).unwrap();
        assert_eq!(seq.ids, vec![CLS_ID, 4, 5, SEP_ID, 7, 8, SEP_ID, 9, 10, SEP_ID]);
        assert_eq!(seq.type_ids, vec![0, 0, 0, 0, 0, 0, 0, 1, 1, 1]);
        assert!(seq.attention_mask.iter().all(|&m| m == 1));
        let padded = seq.pad_to(12);
        assert_eq!(padded.attention_mask[10..], [0, 0]);
        assert_eq!(padded.active_positions().count(), 10);
    }

    #[test]
    fn truncation_takes_from_longer_segment() {
        let cause: Vec<u32> = (10..20).collect();
        let effect: Vec<u32> = (30..33).collect();
        let seq = pack_pair(&cause, &effect, 10).unwrap();
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.type_ids.iter().filter(|&&t| t == 1).count(), 4);
        assert!(pack_pair(&cause, &effect, 4).is_err());
    }

    #[test]
    fn vocabulary_build_and_persist() {
        let v = Vocabulary::build(&WordTokenizer, ["b a a", "c b a"], None);
        assert_eq!(&v.tokens()[4..], &["a", "b", "c"]);
        let capped = Vocabulary::build(&WordTokenizer, ["b a a", "c b a"], Some(2));
        assert_eq!(capped.len(), 6);
        let round = Vocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(round, v);
        assert_eq!(round.content_hash(), v.content_hash());
        assert!(Vocabulary::from_text("a\nb\n").is_err());
    }

    #[test]
    fn tie_break_by_first_appearance() {
        let v = Vocabulary::build(&WordTokenizer, ["zeta alpha"], None);
        assert_eq!(&v.tokens()[4..], &["zeta", "alpha"]);
    }
}
