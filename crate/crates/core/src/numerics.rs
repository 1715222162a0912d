//! Dense numeric kernels shared by every metric.
//!
//! Everything here is `f64`, row-major and allocation-light. There is no
//! attempt at a general linear-algebra layer: only the handful of products
//! the scoring and gradient code needs.

use std::fmt;

use thiserror::Error;

/// Norm below which a vector is treated as degenerate by [`abs_cosine`].
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("function evaluation was not finite at coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("grid is not strictly ascending at index {0}")]
    NotAscending(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Row-major dense matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from row-major values, rejecting bad lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NumericsError::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(NumericsError::NonFinite { index });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumericsError::Dimension("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Gathers the given rows of `self` into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(NumericsError::Dimension(format!(
                "{}x{} · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ`.
    pub fn matmul_transposed(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(NumericsError::Dimension(format!(
                "{}x{} · ({}x{})ᵀ",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(self.row(i), other.row(j));
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn transposed_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(NumericsError::Dimension(format!(
                "({}x{})ᵀ · {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            let a_row = self.row(r);
            let b_row = other.row(r);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(NumericsError::Dimension(format!(
                "hadamard of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        })
    }

    /// `self += scale · other`, shapes must agree.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!(self.shape(), other.shape(), "add_scaled shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Softmax over every entry of the matrix at once (not per row).
///
/// The global maximum is subtracted before exponentiation.
pub fn global_softmax(logits: &Matrix) -> Result<Matrix> {
    if logits.is_empty() {
        return Err(NumericsError::Empty("softmax logits"));
    }
    if let Some(index) = logits.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite { index });
    }
    let max = logits.max();
    let mut out = logits.map(|v| (v - max).exp());
    let total = out.sum();
    out.scale(1.0 / total);
    Ok(out)
}

/// `|u·v| / (‖u‖‖v‖)`, or 0 when either vector is (numerically) zero.
pub fn abs_cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(NumericsError::Dimension(format!(
            "cosine of length {} and {}",
            u.len(),
            v.len()
        )));
    }
    let nu = norm(u);
    let nv = norm(v);
    if nu < ZERO_NORM || nv < ZERO_NORM {
        return Ok(0.0);
    }
    Ok((dot(u, v).abs() / (nu * nv)).min(1.0))
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(NumericsError::InvalidParameter(format!("step h = {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let orig = probe[k];
        probe[k] = orig + h;
        let plus = f(&probe);
        probe[k] = orig - h;
        let minus = f(&probe);
        probe[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NumericsError::NonFiniteEvaluation { coordinate: k });
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// A density estimate sampled on an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityCurve {
    /// Trapezoidal integral of the curve over its grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Silverman's rule of thumb `1.06·σ·N^(-1/5)` with the sample standard
/// deviation. Returns `None` when it degenerates (one sample, zero spread).
pub fn silverman_bandwidth(samples: &[f64]) -> Option<f64> {
    let n = samples.len();
    if n < 2 {
        return None;
    }
    // identical samples would otherwise leave a rounding-sized spread
    if samples.iter().all(|&s| s == samples[0]) {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let h = 1.06 * var.sqrt() * (n as f64).powf(-0.2);
    (h > 0.0 && h.is_finite()).then_some(h)
}

/// Evenly spaced grid of `points` values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (points - 1) as f64;
            (0..points).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Gaussian kernel density estimate evaluated on `grid`.
pub fn kde_density(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<DensityCurve> {
    if samples.is_empty() {
        return Err(NumericsError::Empty("kde samples"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(NumericsError::InvalidParameter(format!("bandwidth {bandwidth}")));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(NumericsError::NotAscending(i + 1));
    }
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    let density = grid
        .iter()
        .map(|&x| {
            norm * samples
                .iter()
                .map(|s| (-(x - s).powi(2) * inv_two_h2).exp())
                .sum::<f64>()
        })
        .collect();
    Ok(DensityCurve {
        grid: grid.to_vec(),
        density,
    })
}
