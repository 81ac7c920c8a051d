//! Dense row-major matrices and the Cholesky solver used for weightings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Max absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // Row-major lower triangle; the strict upper part is unused.
    l: Vec<f64>,
}

impl Cholesky {
    /// Factor a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with [`Error::CholeskyFailure`] on the first pivot that is not
    /// strictly positive (or not finite).
    pub fn factor(a: &Matrix) -> Result<Self> {
        assert_eq!(a.rows(), a.cols(), "cholesky needs a square matrix");
        let n = a.rows();
        let mut l = a.as_slice().to_vec();
        for j in 0..n {
            let (done, rest) = l.split_at_mut(j * n);
            let row_j = &mut rest[..n];
            // Row j, columns < j.
            for k in 0..j {
                let row_k = &done[k * n..k * n + n];
                let dot: f64 = row_j[..k].iter().zip(&row_k[..k]).map(|(a, b)| a * b).sum();
                row_j[k] = (row_j[k] - dot) / row_k[k];
            }
            let sq: f64 = row_j[..j].iter().map(|v| v * v).sum();
            let pivot = row_j[j] - sq;
            if !(pivot > 0.0) || !pivot.is_finite() {
                let diag: Vec<f64> = (0..j).map(|k| done[k * n + k]).collect();
                return Err(Error::CholeskyFailure {
                    pivot: j,
                    pivot_value: pivot,
                    condition_hint: condition_from_diagonal(&diag),
                });
            }
            row_j[j] = pivot.sqrt();
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i]).collect()
    }

    /// Squared ratio of the largest to the smallest diagonal entry of `L`.
    pub fn condition_hint(&self) -> f64 {
        condition_from_diagonal(&self.diagonal())
    }

    /// Solve `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - dot) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|k| self.l[k * n + i] * x[k]).sum();
            x[i] = (x[i] - s) / self.l[i * n + i];
        }
        x
    }
}

fn condition_from_diagonal(diag: &[f64]) -> f64 {
    if diag.is_empty() {
        return 1.0;
    }
    let max = diag.iter().cloned().fold(f64::MIN, f64::max);
    let min = diag.iter().cloned().fold(f64::MAX, f64::min);
    (max / min).powi(2)
}
