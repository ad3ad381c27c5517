use nalgebra::DMatrix;

use super::{extend_evd, extend_svd, sample_tol, scale_columns, scale_rows, ExtendedRight};
use crate::error::{Error, Result};
use crate::matrix::{
    full_evd, full_svd, matrix_sqrt, pseudo_inverse, BlockPartition, DenseMatrix,
};

/// Tolerance for the `A = A^T`, `F = B^T` spot check of the symmetric variants.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionKind {
    Svd,
    Evd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionMethod {
    General,
    SingleStep,
}

/// Canonical SVD or EVD of `M_hat`, rows in the source matrix's order.
///
/// `right` is `n x k` in both cases: `H_o` for an SVD and `V_o^T` for an
/// EVD, so `M_hat = left * diag(values) * right^T` either way.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub left: DenseMatrix,
    pub values: Vec<f64>,
    pub right: DenseMatrix,
    pub kind: DecompositionKind,
    pub method: DecompositionMethod,
    pub symmetric: bool,
    /// Condition number of the inner eigenbasis `F` (EVD kinds) or 1.
    pub inner_condition: f64,
    pub warnings: Vec<String>,
}

impl CanonicalDecomposition {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn recompose(&self) -> DenseMatrix {
        let l = scale_columns(self.left.as_nalgebra(), &self.values);
        DenseMatrix::wrap(l * self.right.as_nalgebra().transpose())
    }

    /// `max(|U_o^T U_o - I|, |H_o^T H_o - I|)` entrywise.
    pub fn orthogonality_residual(&self) -> f64 {
        let k = self.rank();
        let eye = DMatrix::<f64>::identity(k, k);
        let l = (self.left.as_nalgebra().transpose() * self.left.as_nalgebra() - &eye).amax();
        let r = (self.right.as_nalgebra().transpose() * self.right.as_nalgebra() - &eye).amax();
        l.max(r)
    }

    /// `|V_o U_o - I|` entrywise.
    pub fn biorthogonality_residual(&self) -> f64 {
        let k = self.rank();
        (self.right.as_nalgebra().transpose() * self.left.as_nalgebra()
            - DMatrix::<f64>::identity(k, k))
        .amax()
    }
}

fn require_square(p: &BlockPartition<'_>) -> Result<()> {
    let (m, n) = p.dims();
    if m != n {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition of M_hat needs a square matrix, got {m}x{n}"
        )));
    }
    Ok(())
}

fn sqrt_positive(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v > 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::NegativeEigenvalue { value: v })
            }
        })
        .collect()
}

fn inv_sqrt_root(a: &DenseMatrix) -> Result<DenseMatrix> {
    let root = matrix_sqrt(a)?;
    pseudo_inverse(&root, None)
}

/// EVD through `G_U = U_hat Lambda^{1/2}`, `G_V = Lambda^{1/2} V_hat`.
pub fn evd_general(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    require_square(p)?;
    let ext = extend_evd(p)?;
    let half = sqrt_positive(&ext.values)?;
    let ExtendedRight::Evd(v_hat) = &ext.right else {
        unreachable!("extend_evd yields the EVD path")
    };
    let g_u = scale_columns(ext.u_hat.as_nalgebra(), &half);
    let g_v = scale_rows(v_hat.as_nalgebra(), &half);
    finish_evd(p, g_u, g_v, DecompositionMethod::General)
}

/// EVD through `G_U = [A; F] A^{-1/2}`, `G_V = A^{-1/2} [A B]`.
pub fn evd_single_step(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    require_square(p)?;
    let inv_root = inv_sqrt_root(p.a())?;
    let (g_u, g_v) = single_step_factors(p, &inv_root);
    finish_evd(p, g_u, g_v, DecompositionMethod::SingleStep)
}

/// SVD through `Z_U = U_hat Lambda^{1/2}`, `Z_H = H_hat Lambda^{1/2}`.
pub fn svd_general(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    let ext = extend_svd(p)?;
    let half: Vec<f64> = ext.values.iter().map(|v| v.sqrt()).collect();
    let ExtendedRight::Svd(h_hat) = &ext.right else {
        unreachable!("extend_svd yields the SVD path")
    };
    let z_u = scale_columns(ext.u_hat.as_nalgebra(), &half);
    let z_h = scale_columns(h_hat.as_nalgebra(), &half);
    finish_svd(p, z_u, z_h, DecompositionMethod::General)
}

/// SVD through `G_U = [A; F] A^{-1/2}`, `G_H = (A^{-1/2} [A B])^T`.
pub fn svd_single_step(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    let inv_root = inv_sqrt_root(p.a())?;
    let (g_u, g_v) = single_step_factors(p, &inv_root);
    finish_svd(p, g_u, g_v.transpose(), DecompositionMethod::SingleStep)
}

/// Symmetric SVD: `Z = U_hat Lambda^{1/2}` with `U_hat = [U; B^T U Lambda^-1]`,
/// then `Z^T Z = F Sigma F^T` and `U_o = Z F Sigma^{-1/2}`.
pub fn symmetric_svd_general(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    p.check_symmetric(SYMMETRY_TOL)?;
    let tol = sample_tol(p)?;
    let a = symmetrized(p.a().as_nalgebra());
    let evd = full_evd(&a)?;
    let lambda = evd.real_eigenvalues().expect("symmetric spectrum is real");
    if let Some(&bad) = lambda.iter().find(|&&l| l <= tol) {
        return Err(if bad.abs() <= tol {
            Error::ZeroEigenvalue {
                magnitude: bad.abs(),
                tol,
            }
        } else {
            Error::NegativeEigenvalue { value: bad }
        });
    }
    let u = evd.eigenvectors.as_ref().expect("symmetric vectors");
    let inv: Vec<f64> = lambda.iter().map(|l| 1.0 / l).collect();
    let half: Vec<f64> = lambda.iter().map(|l| l.sqrt()).collect();
    let tail = scale_columns(&(p.b().as_nalgebra().transpose() * u.as_nalgebra()), &inv);
    let u_hat = stack_rows(u.as_nalgebra(), &tail);
    let z = scale_columns(&u_hat, &half);
    let gram = symmetrized(&(z.transpose() * &z));
    finish_symmetric(p, z, gram, DecompositionMethod::General)
}

/// Symmetric single-step SVD: `G = [A; B^T] A^{-1/2}`,
/// `S = A + A^{-1/2} B B^T A^{-1/2} = U_S Lambda_S U_S^T`, `U_o = G U_S Lambda_S^{-1/2}`.
pub fn symmetric_svd_single_step(p: &BlockPartition<'_>) -> Result<CanonicalDecomposition> {
    p.check_symmetric(SYMMETRY_TOL)?;
    let a = symmetrized(p.a().as_nalgebra());
    let inv_root = symmetrized(inv_sqrt_root(&a)?.as_nalgebra());
    let r = inv_root.as_nalgebra();
    let b = p.b().as_nalgebra();
    let g = stack_rows(&(a.as_nalgebra() * r), &(b.transpose() * r));
    let bbt = b * b.transpose();
    let s = symmetrized(&(a.as_nalgebra() + r * bbt * r));
    finish_symmetric(p, g, s, DecompositionMethod::SingleStep)
}

fn single_step_factors(p: &BlockPartition<'_>, inv_root: &DenseMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    let r = inv_root.as_nalgebra();
    let a = p.a().as_nalgebra();
    let g_u = stack_rows(&(a * r), &(p.f().as_nalgebra() * r));
    let g_v = stack_cols(&(r * a), &(r * p.b().as_nalgebra()));
    (g_u, g_v)
}

/// `G_V G_U = F Sigma F^-1`, `U_o = G_U F Sigma^{-1/2}`, `V_o = Sigma^{-1/2} F^-1 G_V`.
fn finish_evd(
    p: &BlockPartition<'_>,
    g_u: DMatrix<f64>,
    g_v: DMatrix<f64>,
    method: DecompositionMethod,
) -> Result<CanonicalDecomposition> {
    let inner = DenseMatrix::new(&g_v * &g_u)?;
    let evd = full_evd(&inner)?;
    let sigma = evd.real_eigenvalues().ok_or(Error::ComplexSpectrum)?;
    if evd.is_defective() {
        return Err(Error::DefectiveEigenbasis {
            condition: evd.condition,
        });
    }
    let tol = inner_tol(&sigma, sigma.len());
    if let Some(&small) = sigma.iter().find(|v| v.abs() <= tol) {
        return Err(Error::ZeroEigenvalue {
            magnitude: small.abs(),
            tol,
        });
    }
    let half = sqrt_positive(&sigma)?;
    let inv_half: Vec<f64> = half.iter().map(|h| 1.0 / h).collect();
    let f = evd.eigenvectors.as_ref().expect("real spectrum has vectors");
    let f_inv = evd.inverse_eigenvectors()?;
    let mut left = scale_columns(&(g_u * f.as_nalgebra()), &inv_half);
    let mut right_rows = scale_rows(&(f_inv.as_nalgebra() * g_v), &inv_half);
    for j in 0..left.ncols() {
        if dominant_sign(left.column(j).iter()) < 0.0 {
            left.column_mut(j).neg_mut();
            right_rows.row_mut(j).neg_mut();
        }
    }
    Ok(CanonicalDecomposition {
        left: unpivot_rows(&left, &p.row_order())?,
        values: sigma,
        right: unpivot_rows(&right_rows.transpose(), &p.col_order())?,
        kind: DecompositionKind::Evd,
        method,
        symmetric: false,
        inner_condition: evd.condition,
        warnings: Vec::new(),
    })
}

/// Shared tail of both general-matrix SVD constructions:
/// `Z_U^T Z_U = F_U Sigma_U F_U^T`, `Z_H^T Z_H = F_H Sigma_H F_H^T`,
/// `D = Sigma_U^{1/2} F_U^T F_H Sigma_H^{1/2} = U_D Lambda_D H_D^T`,
/// `U_o = Z_U F_U Sigma_U^{-1/2} U_D`, `H_o = Z_H F_H Sigma_H^{-1/2} H_D`.
fn finish_svd(
    p: &BlockPartition<'_>,
    z_u: DMatrix<f64>,
    z_h: DMatrix<f64>,
    method: DecompositionMethod,
) -> Result<CanonicalDecomposition> {
    let mut warnings = Vec::new();
    let (f_u, sigma_u) = gram_basis(&z_u, "Z_U", &mut warnings)?;
    let (f_h, sigma_h) = gram_basis(&z_h, "Z_H", &mut warnings)?;

    let half_u: Vec<f64> = sigma_u.iter().map(|v| v.sqrt()).collect();
    let half_h: Vec<f64> = sigma_h.iter().map(|v| v.sqrt()).collect();
    let d = scale_columns(&scale_rows(&(f_u.transpose() * &f_h), &half_u), &half_h);
    let d_svd = full_svd(&DenseMatrix::new(d)?)?;

    let inv_u: Vec<f64> = half_u.iter().map(|h| 1.0 / h).collect();
    let inv_h: Vec<f64> = half_h.iter().map(|h| 1.0 / h).collect();
    let mut left = scale_columns(&(z_u * f_u), &inv_u) * d_svd.u.as_nalgebra();
    let mut right = scale_columns(&(z_h * f_h), &inv_h) * d_svd.v.as_nalgebra();
    for j in 0..left.ncols() {
        if dominant_sign(left.column(j).iter()) < 0.0 {
            left.column_mut(j).neg_mut();
            right.column_mut(j).neg_mut();
        }
    }
    Ok(CanonicalDecomposition {
        left: unpivot_rows(&left, &p.row_order())?,
        values: d_svd.singular_values,
        right: unpivot_rows(&right, &p.col_order())?,
        kind: DecompositionKind::Svd,
        method,
        symmetric: false,
        inner_condition: 1.0,
        warnings,
    })
}

/// `gram = F Sigma F^T`, `U_o = factor F Sigma^{-1/2}`; `U_o` doubles as `H_o`.
fn finish_symmetric(
    p: &BlockPartition<'_>,
    factor: DMatrix<f64>,
    gram: DenseMatrix,
    method: DecompositionMethod,
) -> Result<CanonicalDecomposition> {
    let mut warnings = Vec::new();
    let (f, sigma) = truncated_eigh(&gram, "Gram matrix", &mut warnings)?;
    let inv_half: Vec<f64> = sigma.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut left = scale_columns(&(factor * f), &inv_half);
    for j in 0..left.ncols() {
        if dominant_sign(left.column(j).iter()) < 0.0 {
            left.column_mut(j).neg_mut();
        }
    }
    let left = unpivot_rows(&left, &p.row_order())?;
    Ok(CanonicalDecomposition {
        right: left.clone(),
        left,
        values: sigma,
        kind: DecompositionKind::Svd,
        method,
        symmetric: true,
        inner_condition: 1.0,
        warnings,
    })
}

fn gram_basis(
    z: &DMatrix<f64>,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let gram = symmetrized(&(z.transpose() * z));
    truncated_eigh(&gram, name, warnings)
}

/// Eigenpairs of a symmetric PSD Gram matrix, dropping those at or below
/// `k * eps * lambda_max`.
fn truncated_eigh(
    gram: &DenseMatrix,
    name: &str,
    warnings: &mut Vec<String>,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let evd = full_evd(gram)?;
    let values = evd.real_eigenvalues().expect("symmetric spectrum is real");
    let vectors = evd.eigenvectors.expect("symmetric vectors");
    let tol = inner_tol(&values, values.len());
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] > tol).collect();
    if keep.len() < values.len() {
        warnings.push(format!(
            "{name} is rank deficient: kept {} of {} directions",
            keep.len(),
            values.len()
        ));
    }
    if keep.is_empty() {
        return Err(Error::SingularSample {
            sigma_s: values.first().copied().unwrap_or(0.0),
            tol,
        });
    }
    let basis = vectors.as_nalgebra().select_columns(&keep);
    Ok((basis, keep.iter().map(|&i| values[i]).collect()))
}

fn inner_tol(values: &[f64], k: usize) -> f64 {
    let top = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    k.max(1) as f64 * f64::EPSILON * top
}

/// Sign of the largest-magnitude entry (first one wins ties).
fn dominant_sign<'a>(col: impl Iterator<Item = &'a f64>) -> f64 {
    let mut best = 0.0_f64;
    for &v in col {
        if v.abs() > best.abs() {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn unpivot_rows(pivoted: &DMatrix<f64>, order: &[usize]) -> Result<DenseMatrix> {
    let mut out = DMatrix::zeros(pivoted.nrows(), pivoted.ncols());
    for (pi, &i) in order.iter().enumerate() {
        out.set_row(i, &pivoted.row(pi));
    }
    DenseMatrix::new(out)
}

fn symmetrized(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::wrap((m + m.transpose()) * 0.5)
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let t = top.nrows();
    DMatrix::from_fn(t + bottom.nrows(), top.ncols(), |i, j| {
        if i < t {
            top[(i, j)]
        } else {
            bottom[(i - t, j)]
        }
    })
}

fn stack_cols(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let l = left.ncols();
    DMatrix::from_fn(left.nrows(), l + right.ncols(), |i, j| {
        if j < l {
            left[(i, j)]
        } else {
            right[(i, j - l)]
        }
    })
}
