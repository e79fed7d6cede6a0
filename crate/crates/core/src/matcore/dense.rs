use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Column-major dense real matrix with finite entries.
///
/// A thin wrapper around [`nalgebra::DMatrix`]; read access goes through
/// `Deref`, construction checks finiteness.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Self::from_nalgebra(DMatrix::from_vec(rows, cols, data))
    }

    /// Builds a matrix from row-major data, which reads naturally in literals.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_nalgebra(m: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
            let rows = m.nrows().max(1);
            return Err(Error::NonFinite {
                row: pos % rows,
                col: pos / rows,
            });
        }
        Ok(DenseMatrix(m))
    }

    /// Wraps a matrix produced by this crate's own kernels.
    pub(crate) fn from_raw(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|v| v.is_finite()), "kernel produced non-finite");
        DenseMatrix(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix(DMatrix::zeros(rows, cols))
    }

    /// The leading `cols` columns of the `rows x rows` identity.
    pub fn eye(rows: usize, cols: usize) -> Self {
        DenseMatrix(DMatrix::identity(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_nalgebra(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_nalgebra(DMatrix::from_fn(rows, cols, f))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[f64] {
        let m = self.rows();
        &self.0.as_slice()[j * m..(j + 1) * m]
    }

    pub fn transpose(&self) -> Self {
        DenseMatrix(self.0.transpose())
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::dims("matmul", self.cols(), rhs.rows()));
        }
        Ok(DenseMatrix(&self.0 * &rhs.0))
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows() != rhs.rows() {
            return Err(Error::dims("tr_matmul", self.rows(), rhs.rows()));
        }
        Ok(DenseMatrix(self.0.tr_mul(&rhs.0)))
    }

    /// Columns `start..start + count`.
    pub fn columns(&self, start: usize, count: usize) -> Self {
        DenseMatrix(self.0.columns(start, count).into_owned())
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        DenseMatrix(self.0.select_columns(idx))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        DenseMatrix(self.0.select_rows(idx))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `max |selfᵀ self − I|`, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.0.tr_mul(&self.0);
        let n = g.nrows();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}
