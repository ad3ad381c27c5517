use super::{DenseMatrix, IndexSet};
use crate::error::{Error, Result};

/// The pivoted 2x2 block view of a matrix around an `s x s` sample.
///
/// With `I` the sampled rows and `J` the sampled columns,
/// `A = M[I, J]`, `B = M[I, J^c]`, `F = M[I^c, J]` and `C = M[I^c, J^c]`,
/// complements in increasing index order. `A`, `B` and `F` are copied;
/// `C` is only materialized on request so that building a partition costs
/// `O(s (m + n))`.
#[derive(Debug, Clone)]
pub struct BlockPartition<'a> {
    source: &'a DenseMatrix,
    rows: IndexSet,
    cols: IndexSet,
    row_rest: Vec<usize>,
    col_rest: Vec<usize>,
    a: DenseMatrix,
    b: DenseMatrix,
    f: DenseMatrix,
}

pub fn partition<'a>(
    m: &'a DenseMatrix,
    rows: IndexSet,
    cols: IndexSet,
) -> Result<BlockPartition<'a>> {
    if rows.bound() != m.rows() || cols.bound() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "index bounds ({}, {}) do not match a {}x{} matrix",
            rows.bound(),
            cols.bound(),
            m.rows(),
            m.cols()
        )));
    }
    if rows.len() != cols.len() {
        return Err(Error::InvalidInput(format!(
            "sample needs as many rows as columns, got {} and {}",
            rows.len(),
            cols.len()
        )));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let row_rest = rows.complement();
    let col_rest = cols.complement();
    let a = m.select(rows.indices(), cols.indices());
    let b = m.select(rows.indices(), &col_rest);
    let f = m.select(&row_rest, cols.indices());
    Ok(BlockPartition {
        source: m,
        rows,
        cols,
        row_rest,
        col_rest,
        a,
        b,
        f,
    })
}

impl<'a> BlockPartition<'a> {
    pub fn source(&self) -> &'a DenseMatrix {
        self.source
    }

    pub fn sample_size(&self) -> usize {
        self.rows.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.source.shape()
    }

    pub fn row_set(&self) -> &IndexSet {
        &self.rows
    }

    pub fn col_set(&self) -> &IndexSet {
        &self.cols
    }

    pub fn row_complement(&self) -> &[usize] {
        &self.row_rest
    }

    pub fn col_complement(&self) -> &[usize] {
        &self.col_rest
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn f(&self) -> &DenseMatrix {
        &self.f
    }

    /// Copies `C = M[I^c, J^c]`. This is the only `O(mn)` accessor.
    pub fn c(&self) -> DenseMatrix {
        self.source.select(&self.row_rest, &self.col_rest)
    }

    /// Row permutation `I` followed by `I^c`.
    pub fn row_order(&self) -> Vec<usize> {
        let mut order = self.rows.indices().to_vec();
        order.extend_from_slice(&self.row_rest);
        order
    }

    pub fn col_order(&self) -> Vec<usize> {
        let mut order = self.cols.indices().to_vec();
        order.extend_from_slice(&self.col_rest);
        order
    }

    /// The pivoted matrix `[A B; F C]`.
    pub fn reassemble(&self) -> DenseMatrix {
        let s = self.sample_size();
        let c = self.c();
        let (m, n) = self.dims();
        DenseMatrix::wrap(nalgebra::DMatrix::from_fn(m, n, |i, j| {
            match (i < s, j < s) {
                (true, true) => self.a.get(i, j),
                (true, false) => self.b.get(i, j - s),
                (false, true) => self.f.get(i - s, j),
                (false, false) => c.get(i - s, j - s),
            }
        }))
    }

    /// Whether `I = J` as ordered sets and the sampled strips are mirror
    /// images: `A = A^T` and `F = B^T` within `tol * max|A|`.
    ///
    /// This is an `O(s n)` spot check, not a full symmetry scan.
    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        if self.rows.indices() != self.cols.indices() {
            return Err(Error::NotSymmetric(
                "row and column samples differ".into(),
            ));
        }
        if self.dims().0 != self.dims().1 {
            return Err(Error::NotSymmetric("matrix is not square".into()));
        }
        let scale = self.a.max_abs().max(self.b.max_abs()).max(f64::MIN_POSITIVE);
        let asym = self.a.max_abs_diff(&self.a.transpose());
        let strip = self.f.max_abs_diff(&self.b.transpose());
        if asym.max(strip) > tol * scale {
            return Err(Error::NotSymmetric(format!(
                "sampled strips differ from their mirror by {:e}",
                asym.max(strip)
            )));
        }
        Ok(())
    }
}
