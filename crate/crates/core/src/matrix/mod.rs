//! Dense real matrices and the classical factorizations the rest of the
//! crate is built from.
//!
//! Storage is column-major everywhere (the layout of [`nalgebra::DMatrix`],
//! which backs [`DenseMatrix`]). Every factorization returns freshly
//! allocated matrices; nothing aliases its input.

mod decomp;
mod partition;

pub use decomp::{
    frobenius_norm, full_evd, full_svd, matrix_sqrt, numerical_rank, pseudo_inverse,
    pseudo_inverse_tol, singular_values, spectral_norm, EvdResult, SvdResult,
};
pub use partition::{partition, BlockPartition};

use std::ops::Deref;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// An immutable, finite, column-major real matrix.
///
/// Read access to the underlying [`DMatrix`] is available through `Deref`,
/// so nalgebra's arithmetic can be used directly on `&*m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    /// Wraps an nalgebra matrix, rejecting NaN and infinite entries.
    pub fn new(inner: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = inner.iter().position(|v| !v.is_finite()) {
            let rows = inner.nrows().max(1);
            return Err(Error::NonFinite {
                row: pos % rows,
                col: pos / rows,
            });
        }
        Ok(Self(inner))
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(rows.len(), ncols, &flat)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Wraps a matrix produced by arithmetic on already-finite operands.
    ///
    /// Overflow is still caught in debug builds.
    pub(crate) fn wrap(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.iter().all(|v| v.is_finite()), "non-finite result");
        Self(inner)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Matrix product, checked for conformable shapes.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Self::new(&self.0 * &rhs.0)
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} minus {:?}",
                self.shape(),
                rhs.shape()
            )));
        }
        Ok(Self(&self.0 - &rhs.0))
    }

    /// Copies the submatrix at the given row and column positions, in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self(DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.0[(rows[i], cols[j])]
        }))
    }

    /// Largest absolute entry, or 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Exact symmetry test (every entry, bitwise equal to its mirror).
    pub fn is_exactly_symmetric(&self) -> bool {
        self.rows() == self.cols()
            && (0..self.rows()).all(|i| (0..i).all(|j| self.0[(i, j)] == self.0[(j, i)]))
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<DMatrix<f64>> for DenseMatrix {
    type Error = Error;

    fn try_from(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m)
    }
}

/// Ordered, duplicate-free positions within `[0, bound)`.
///
/// The order is the pivot order and is preserved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
    bound: usize,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>, bound: usize) -> Result<Self> {
        let mut seen = vec![false; bound];
        for &i in &indices {
            if i >= bound {
                return Err(Error::InvalidInput(format!(
                    "index {i} out of range [0, {bound})"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!("duplicate index {i}")));
            }
        }
        Ok(Self { indices, bound })
    }

    /// The first `len` positions, `0..len`.
    pub fn leading(len: usize, bound: usize) -> Result<Self> {
        Self::new((0..len).collect(), bound)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    /// Positions not in the set, in increasing order.
    pub fn complement(&self) -> Vec<usize> {
        let mut taken = vec![false; self.bound];
        for &i in &self.indices {
            taken[i] = true;
        }
        (0..self.bound).filter(|&i| !taken[i]).collect()
    }

    /// The set followed by its complement: a full permutation of `0..bound`.
    pub fn pivot_order(&self) -> Vec<usize> {
        let mut order = self.indices.clone();
        order.extend(self.complement());
        order
    }
}
