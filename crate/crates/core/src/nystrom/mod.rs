//! Nystrom out-of-sample extension of an `s x s` sample and the explicit
//! construction of canonical SVD/EVD forms of the approximation
//!
//! ```text
//!     M_hat = [A; F] A^+ [A B]
//! ```
//!
//! which keeps `A`, `B` and `F` and replaces `C` by `F A^+ B`. None of the
//! constructors materializes `M_hat`; their cost is `O(s^2 (m + n))`.

mod canonical;

pub use canonical::{
    evd_general, evd_single_step, svd_general, svd_single_step, symmetric_svd_general,
    symmetric_svd_single_step, CanonicalDecomposition, DecompositionKind, DecompositionMethod,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{
    full_evd, full_svd, pseudo_inverse, pseudo_inverse_tol, BlockPartition, DenseMatrix, IndexSet,
};

/// `M_hat = left * core * right` with `left = [A; F]`, `core = A^+` and
/// `right = [A B]`, kept in pivoted order together with the permutations
/// needed to map back to the source layout.
#[derive(Debug, Clone)]
pub struct NystromFactorization {
    left: DenseMatrix,
    core: DenseMatrix,
    right: DenseMatrix,
    rows: IndexSet,
    cols: IndexSet,
    row_order: Vec<usize>,
    col_order: Vec<usize>,
}

pub fn factorize(p: &BlockPartition<'_>) -> Result<NystromFactorization> {
    factorize_with_tol(p, None)
}

/// As [`factorize`] with an explicit pseudo-inverse truncation threshold.
pub fn factorize_with_tol(p: &BlockPartition<'_>, tol: Option<f64>) -> Result<NystromFactorization> {
    let core = pseudo_inverse(p.a(), tol)?;
    Ok(NystromFactorization {
        left: vstack(p.a(), p.f()),
        core,
        right: hstack(p.a(), p.b()),
        rows: p.row_set().clone(),
        cols: p.col_set().clone(),
        row_order: p.row_order(),
        col_order: p.col_order(),
    })
}

impl NystromFactorization {
    pub fn sample_size(&self) -> usize {
        self.core.rows()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.left.rows(), self.right.cols())
    }

    /// `[A; F]` in pivoted row order.
    pub fn left(&self) -> &DenseMatrix {
        &self.left
    }

    /// `A^+`.
    pub fn core(&self) -> &DenseMatrix {
        &self.core
    }

    /// `[A B]` in pivoted column order.
    pub fn right(&self) -> &DenseMatrix {
        &self.right
    }

    pub fn row_set(&self) -> &IndexSet {
        &self.rows
    }

    pub fn col_set(&self) -> &IndexSet {
        &self.cols
    }

    /// The replacement `F A^+ B` for the unsampled block.
    pub fn approximate_c(&self) -> DenseMatrix {
        let s = self.sample_size();
        let (m, n) = self.dims();
        let f = self.left.rows_range(s..m);
        let b = self.right.columns_range(s..n);
        DenseMatrix::wrap(f * self.core.as_nalgebra() * b)
    }

    /// Densifies `M_hat` in the source matrix's row and column order.
    pub fn reconstruct(&self) -> DenseMatrix {
        let pivoted = self.left.as_nalgebra() * self.core.as_nalgebra() * self.right.as_nalgebra();
        let (m, n) = self.dims();
        let mut out = DMatrix::zeros(m, n);
        for (pj, &j) in self.col_order.iter().enumerate() {
            for (pi, &i) in self.row_order.iter().enumerate() {
                out[(i, j)] = pivoted[(pi, pj)];
            }
        }
        DenseMatrix::wrap(out)
    }
}

/// Right-hand factor of an extension: `V_hat` (`s x n`, EVD path) or
/// `H_hat` (`n x s`, SVD path).
#[derive(Debug, Clone)]
pub enum ExtendedRight {
    Evd(DenseMatrix),
    Svd(DenseMatrix),
}

/// Extended eigen- or singular vectors, rows/columns in pivoted order.
///
/// The top `s x s` block of `u_hat` is the decomposition basis of `A`.
#[derive(Debug, Clone)]
pub struct ExtendedVectors {
    pub u_hat: DenseMatrix,
    pub values: Vec<f64>,
    pub right: ExtendedRight,
    /// Condition number of the sample's eigenvector basis (1 on the SVD path).
    pub basis_condition: f64,
}

impl ExtendedVectors {
    /// `U_hat diag(values) V_hat` or `U_hat diag(values) H_hat^T`, pivoted order.
    pub fn recompose(&self) -> DenseMatrix {
        let ul = scale_columns(self.u_hat.as_nalgebra(), &self.values);
        DenseMatrix::wrap(match &self.right {
            ExtendedRight::Evd(v) => ul * v.as_nalgebra(),
            ExtendedRight::Svd(h) => ul * h.as_nalgebra().transpose(),
        })
    }
}

fn sample_tol(p: &BlockPartition<'_>) -> Result<f64> {
    let s = p.sample_size();
    let sigma1 = crate::matrix::spectral_norm(p.a())?;
    Ok(pseudo_inverse_tol(s, s, sigma1))
}

/// `U_hat = [U; F U Lambda^-1]`, `V_hat = [U^-1, Lambda^-1 U^-1 B]` from the
/// eigen-decomposition `A = U Lambda U^-1`.
pub fn extend_evd(p: &BlockPartition<'_>) -> Result<ExtendedVectors> {
    let tol = sample_tol(p)?;
    let evd = full_evd(p.a())?;
    let lambda = evd.real_eigenvalues().ok_or(Error::ComplexSpectrum)?;
    if evd.is_defective() {
        return Err(Error::DefectiveEigenbasis {
            condition: evd.condition,
        });
    }
    if let Some(&small) = lambda.iter().min_by(|a, b| a.abs().total_cmp(&b.abs())) {
        if small.abs() <= tol {
            return Err(Error::ZeroEigenvalue {
                magnitude: small.abs(),
                tol,
            });
        }
    }
    let u = evd.eigenvectors.clone().expect("real spectrum has vectors");
    let u_inv = evd.inverse_eigenvectors()?;
    let inv_lambda: Vec<f64> = lambda.iter().map(|l| 1.0 / l).collect();

    let u_tilde = scale_columns(&(p.f().as_nalgebra() * u.as_nalgebra()), &inv_lambda);
    let v_tilde = scale_rows(&(u_inv.as_nalgebra() * p.b().as_nalgebra()), &inv_lambda);
    let u_hat = vstack(&u, &DenseMatrix::new(u_tilde)?);
    let v_hat = hstack(&u_inv, &DenseMatrix::new(v_tilde)?);
    Ok(ExtendedVectors {
        u_hat,
        values: lambda,
        right: ExtendedRight::Evd(v_hat),
        basis_condition: evd.condition,
    })
}

/// `U_hat = [U; F H Lambda^-1]`, `H_hat = [H; B^T U Lambda^-1]` from the
/// SVD `A = U Lambda H^T`.
pub fn extend_svd(p: &BlockPartition<'_>) -> Result<ExtendedVectors> {
    let tol = sample_tol(p)?;
    let svd = full_svd(p.a())?;
    let sigma_s = svd.singular_values.last().copied().unwrap_or(0.0);
    if sigma_s <= tol {
        return Err(Error::SingularSample { sigma_s, tol });
    }
    let inv: Vec<f64> = svd.singular_values.iter().map(|l| 1.0 / l).collect();
    let u_tilde = scale_columns(&(p.f().as_nalgebra() * svd.v.as_nalgebra()), &inv);
    let h_tilde = scale_columns(&(p.b().as_nalgebra().transpose() * svd.u.as_nalgebra()), &inv);
    let u_hat = vstack(&svd.u, &DenseMatrix::new(u_tilde)?);
    let h_hat = vstack(&svd.v, &DenseMatrix::new(h_tilde)?);
    Ok(ExtendedVectors {
        u_hat,
        values: svd.singular_values,
        right: ExtendedRight::Svd(h_hat),
        basis_condition: 1.0,
    })
}

pub(crate) fn scale_columns(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, &x) in d.iter().enumerate() {
        out.column_mut(j).scale_mut(x);
    }
    out
}

pub(crate) fn scale_rows(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, &x) in d.iter().enumerate() {
        out.row_mut(i).scale_mut(x);
    }
    out
}

fn vstack(top: &DenseMatrix, bottom: &DenseMatrix) -> DenseMatrix {
    let (t, b) = (top.rows(), bottom.rows());
    DenseMatrix::wrap(DMatrix::from_fn(t + b, top.cols(), |i, j| {
        if i < t {
            top.get(i, j)
        } else {
            bottom.get(i - t, j)
        }
    }))
}

fn hstack(left: &DenseMatrix, right: &DenseMatrix) -> DenseMatrix {
    let l = left.cols();
    DenseMatrix::wrap(DMatrix::from_fn(left.rows(), l + right.cols(), |i, j| {
        if j < l {
            left.get(i, j)
        } else {
            right.get(i, j - l)
        }
    }))
}
