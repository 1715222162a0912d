//! Causality-aware attention and the association-weighted score, with the
//! hand-derived backward pass.

use serde::Serialize;

use super::model::AttentionMode;
use super::Result;
use crate::numerics::{abs_cosine, dot, global_softmax, norm, Matrix, NumericsError, ZERO_NORM};

/// The three matrices behind one score: association `M`, attention `A`
/// and their elementwise product `S`, with `score = ΣS`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub cause_tokens: Vec<String>,
    pub effect_tokens: Vec<String>,
    #[serde(serialize_with = "rows")]
    pub association: Matrix,
    #[serde(serialize_with = "rows")]
    pub attention: Matrix,
    #[serde(serialize_with = "rows")]
    pub strength: Matrix,
    pub score: f64,
}

fn rows<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.rows()))?;
    for r in 0..m.rows() {
        seq.serialize_element(m.row(r))?;
    }
    seq.end()
}

impl ScoreBreakdown {
    /// Plain-text rendering of the three matrices.
    pub fn render(&self) -> String {
        let width = self
            .cause_tokens
            .iter()
            .map(|t| t.chars().count())
            .max()
            .unwrap_or(0)
            .max(4);
        let mut out = String::new();
        for (title, m) in [
            ("association M", &self.association),
            ("attention A", &self.attention),
            ("strength S = M∘A", &self.strength),
        ] {
            out.push_str(title);
            out.push('\n');
            out.push_str(&format!("{:width$}", ""));
            for t in &self.effect_tokens {
                out.push_str(&format!(" {t:>8}"));
            }
            out.push('\n');
            for (i, t) in self.cause_tokens.iter().enumerate() {
                out.push_str(&format!("{t:width$}"));
                for v in m.row(i) {
                    out.push_str(&format!(" {v:>8.4}"));
                }
                out.push('\n');
            }
            out.push('\n');
        }
        out.push_str(&format!("score {:.6}\n", self.score));
        out
    }
}

pub(crate) fn association(cause: &Matrix, effect: &Matrix) -> Result<Matrix> {
    if cause.cols() != effect.cols() {
        return Err(NumericsError::Dimension(format!(
            "cause dim {} vs effect dim {}",
            cause.cols(),
            effect.cols()
        ))
        .into());
    }
    let mut m = Matrix::zeros(cause.rows(), effect.rows());
    for i in 0..cause.rows() {
        for j in 0..effect.rows() {
            m.set(i, j, abs_cosine(cause.row(i), effect.row(j))?);
        }
    }
    Ok(m)
}

/// Forward values that the backward pass reuses.
pub(crate) struct HeadState {
    pub query: Option<Matrix>,
    pub key: Option<Matrix>,
    pub association: Matrix,
    pub attention: Matrix,
    pub score: f64,
}

pub(crate) fn attention(
    mode: AttentionMode,
    cause: &Matrix,
    effect: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
) -> Result<(Matrix, Option<(Matrix, Matrix)>)> {
    let d = w_q.rows();
    if cause.cols() != d || effect.cols() != d {
        return Err(NumericsError::Dimension(format!(
            "attention expects {d} columns, got cause {} / effect {}",
            cause.cols(),
            effect.cols()
        ))
        .into());
    }
    let (n, m) = (cause.rows(), effect.rows());
    if n == 0 || m == 0 {
        return Err(NumericsError::Empty("attention operands").into());
    }
    match mode {
        AttentionMode::Uniform => Ok((Matrix::filled(n, m, 1.0 / (n * m) as f64), None)),
        AttentionMode::Learned => {
            let q = cause.matmul(w_q)?;
            let k = effect.matmul(w_k)?;
            let a = global_softmax(&q.matmul_transposed(&k)?)?;
            Ok((a, Some((q, k))))
        }
    }
}

pub(crate) fn forward(
    mode: AttentionMode,
    cause: &Matrix,
    effect: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
) -> Result<HeadState> {
    let (attention, qk) = attention(mode, cause, effect, w_q, w_k)?;
    let association = association(cause, effect)?;
    let score = association
        .as_slice()
        .iter()
        .zip(attention.as_slice())
        .map(|(m, a)| m * a)
        .sum();
    let (query, key) = match qk {
        Some((q, k)) => (Some(q), Some(k)),
        None => (None, None),
    };
    Ok(HeadState {
        query,
        key,
        association,
        attention,
        score,
    })
}

pub(crate) struct HeadGrads {
    pub cause: Matrix,
    pub effect: Matrix,
    pub w_q: Matrix,
    pub w_k: Matrix,
}

/// Backward pass given `upstream = ∂L/∂score`.
pub(crate) fn backward(
    state: &HeadState,
    cause: &Matrix,
    effect: &Matrix,
    w_q: &Matrix,
    w_k: &Matrix,
    upstream: f64,
) -> Result<HeadGrads> {
    let (n, m) = (cause.rows(), effect.rows());
    let d = cause.cols();
    let mut d_cause = Matrix::zeros(n, d);
    let mut d_effect = Matrix::zeros(m, d);
    let mut d_wq = Matrix::zeros(d, d);
    let mut d_wk = Matrix::zeros(d, d);

    // attention path: ∂s/∂L_ij = A_ij (M_ij − s)
    if let (Some(q), Some(k)) = (&state.query, &state.key) {
        let mut d_logits = Matrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                let a = state.attention.get(i, j);
                d_logits.set(i, j, upstream * a * (state.association.get(i, j) - state.score));
            }
        }
        let d_query = d_logits.matmul(k)?;
        let d_key = d_logits.transposed_matmul(q)?;
        d_wq = cause.transposed_matmul(&d_query)?;
        d_wk = effect.transposed_matmul(&d_key)?;
        d_cause.add_scaled(&d_query.matmul_transposed(w_q)?, 1.0);
        d_effect.add_scaled(&d_key.matmul_transposed(w_k)?, 1.0);
    }

    // association path: M_ij = |p| / (‖c‖‖e‖), p = c·e
    let cause_norms: Vec<f64> = (0..n).map(|i| norm(cause.row(i))).collect();
    let effect_norms: Vec<f64> = (0..m).map(|j| norm(effect.row(j))).collect();
    for (i, &nc) in cause_norms.iter().enumerate() {
        if nc < ZERO_NORM {
            continue;
        }
        let c = cause.row(i);
        for (j, &ne) in effect_norms.iter().enumerate() {
            if ne < ZERO_NORM {
                continue;
            }
            let e = effect.row(j);
            let p = dot(c, e);
            if p == 0.0 {
                continue;
            }
            let w = upstream * state.attention.get(i, j) * p.signum() / (nc * ne);
            let pc = p / (nc * nc);
            let pe = p / (ne * ne);
            for (k, g) in d_cause.row_mut(i).iter_mut().enumerate() {
                *g += w * (e[k] - pc * c[k]);
            }
            for (k, g) in d_effect.row_mut(j).iter_mut().enumerate() {
                *g += w * (c[k] - pe * e[k]);
            }
        }
    }

    Ok(HeadGrads {
        cause: d_cause,
        effect: d_effect,
        w_q: d_wq,
        w_k: d_wk,
    })
}
