//! Dense row-major matrices and the validated wrappers used across the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::validation(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, and a zero-column matrix has no data anyway.
        let cols = self.cols.max(1);
        self.data
            .chunks_exact(cols)
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the selected rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Per-column `(min, max)`. Empty for a matrix without rows.
    pub fn column_ranges(&self) -> Vec<(f64, f64)> {
        if self.rows == 0 {
            return Vec::new();
        }
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.cols];
        for r in self.iter_rows() {
            for (range, &v) in out.iter_mut().zip(r) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        out
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

pub fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Raw per-class network outputs, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix(Matrix);

impl LogitMatrix {
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::validation(
                "logit matrix must have at least one row and one column",
            ));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite logit at row {}, column {}",
                pos / values.cols(),
                pos % values.cols()
            )));
        }
        Ok(LogitMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn values(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }

    pub fn n_samples(&self) -> usize {
        self.0.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.0.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbKind {
    /// Independent per-class sigmoids of an OVA model.
    Sigmoid,
    /// Single-label products built from sigmoids.
    Slova,
    /// Output of the exponential calibration map.
    Calibrated,
    /// Rows of a softmax; each row sums to one.
    Softmax,
}

/// Slack allowed on the `sum <= 1` row check of SLOVA matrices.
const ROW_SUM_SLACK: f64 = 1e-9;
/// Softmax rows must sum to one within this; loose enough for single-precision
/// exports from other frameworks.
const SOFTMAX_SUM_TOL: f64 = 1e-6;

/// Probability matrix tagged with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    values: Matrix,
    kind: ProbKind,
}

impl ProbMatrix {
    pub fn new(values: Matrix, kind: ProbKind) -> Result<Self> {
        if values.cols() == 0 {
            return Err(Error::validation(
                "probability matrix must have at least one column",
            ));
        }
        for (i, r) in values.iter_rows().enumerate() {
            if let Some(k) = r.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::validation(format!(
                    "probability at row {i}, column {k} is {} (outside [0,1])",
                    r[k]
                )));
            }
            if matches!(kind, ProbKind::Slova) {
                let s: f64 = r.iter().sum();
                if s > 1.0 + ROW_SUM_SLACK {
                    return Err(Error::validation(format!(
                        "SLOVA row {i} sums to {s} (> 1)"
                    )));
                }
            }
            if matches!(kind, ProbKind::Softmax) {
                let s: f64 = r.iter().sum();
                if (s - 1.0).abs() > SOFTMAX_SUM_TOL {
                    return Err(Error::validation(format!(
                        "softmax row {i} sums to {s}, not 1"
                    )));
                }
            }
        }
        Ok(ProbMatrix { values, kind })
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: ProbKind) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?, kind)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(values: Matrix, kind: ProbKind) -> Self {
        debug_assert!(values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        ProbMatrix { values, kind }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn kind(&self) -> ProbKind {
        self.kind
    }

    pub fn n_samples(&self) -> usize {
        self.values.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.iter_rows()
    }

    pub fn select_rows(&self, idx: &[usize]) -> ProbMatrix {
        ProbMatrix {
            values: self.values.select_rows(idx),
            kind: self.kind,
        }
    }

    /// Per-row argmax with lowest-index tie-break.
    pub fn predictions(&self) -> Vec<usize> {
        self.iter_rows().map(argmax).collect()
    }

    /// Per-row maximum.
    pub fn confidences(&self) -> Vec<f64> {
        self.iter_rows().map(row_max).collect()
    }
}

/// Zero-based class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector(Vec<usize>);

impl LabelVector {
    /// Labels for a problem with `n_classes` classes.
    pub fn new(values: Vec<usize>, n_classes: usize) -> Result<Self> {
        if let Some(pos) = values.iter().position(|&y| y >= n_classes) {
            return Err(Error::validation(format!(
                "label {} at position {pos} out of range for {n_classes} classes",
                values[pos]
            )));
        }
        Ok(LabelVector(values))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> LabelVector {
        LabelVector(idx.iter().map(|&i| self.0[i]).collect())
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub(crate) fn check_len(&self, rows: usize) -> Result<()> {
        if self.0.len() != rows {
            return Err(Error::validation(format!(
                "{} labels for {rows} rows",
                self.0.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_classes(&self, n_classes: usize) -> Result<()> {
        if let Some(pos) = self.0.iter().position(|&y| y >= n_classes) {
            return Err(Error::validation(format!(
                "label {} at position {pos} out of range for {n_classes} classes",
                self.0[pos]
            )));
        }
        Ok(())
    }
}
