use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Eigenbases with a condition number above `1/sqrt(eps)` are treated as defective.
pub(crate) const DEFECTIVE_CONDITION: f64 = 6.7108864e7;

fn svd_iteration_budget(rows: usize, cols: usize) -> usize {
    let k = rows.min(cols).max(1);
    30 * k * k + 1000
}

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
///
/// `u` is `m x k`, `v` is `n x k` with `k = min(m, n)`; singular values are
/// non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank_at(&self, tol: f64) -> usize {
        self.singular_values.iter().filter(|&&s| s > tol).count()
    }

    /// `U diag(sigma) V^T`.
    pub fn recompose(&self) -> DenseMatrix {
        let mut us = self.u.as_nalgebra().clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        DenseMatrix::wrap(us * self.v.as_nalgebra().transpose())
    }
}

pub fn full_svd(m: &DenseMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(SvdResult {
            u: DenseMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v: DenseMatrix::zeros(cols, 0),
        });
    }
    let svd = SVD::try_new(
        m.as_nalgebra().clone(),
        true,
        true,
        f64::EPSILON,
        svd_iteration_budget(rows, cols),
    )
    .ok_or(Error::NoConvergence("singular value decomposition"))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    Ok(SvdResult {
        u: DenseMatrix::wrap(u),
        singular_values: svd.singular_values.iter().copied().collect(),
        v: DenseMatrix::wrap(v_t.transpose()),
    })
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(Vec::new());
    }
    let svd = SVD::try_new(
        m.as_nalgebra().clone(),
        false,
        false,
        f64::EPSILON,
        svd_iteration_budget(rows, cols),
    )
    .ok_or(Error::NoConvergence("singular value decomposition"))?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// `||M||_2 = sigma_1(M)`.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

pub fn frobenius_norm(m: &DenseMatrix) -> f64 {
    m.as_nalgebra().norm()
}

/// Default truncation threshold: `max(m, n) * sigma_1 * eps`.
pub fn pseudo_inverse_tol(rows: usize, cols: usize, sigma1: f64) -> f64 {
    rows.max(cols) as f64 * sigma1 * f64::EPSILON
}

/// Moore-Penrose pseudo-inverse through the SVD. Singular values `<= tol`
/// are treated as zero; `None` selects [`pseudo_inverse_tol`].
pub fn pseudo_inverse(a: &DenseMatrix, tol: Option<f64>) -> Result<DenseMatrix> {
    let (rows, cols) = a.shape();
    let svd = full_svd(a)?;
    let sigma1 = svd.singular_values.first().copied().unwrap_or(0.0);
    let tol = tol.unwrap_or_else(|| pseudo_inverse_tol(rows, cols, sigma1));
    let mut v_scaled = svd.v.as_nalgebra().clone();
    for (j, &s) in svd.singular_values.iter().enumerate() {
        let inv = if s > tol { 1.0 / s } else { 0.0 };
        v_scaled.column_mut(j).scale_mut(inv);
    }
    DenseMatrix::new(v_scaled * svd.u.as_nalgebra().transpose())
}

/// Numerical rank with respect to `eps`: the index `r` of the last singular
/// value before the first `sigma_{r+1}` with `sigma_1 / sigma_{r+1} > eps`.
///
/// A ratio exactly equal to `eps` counts as within rank.
pub fn numerical_rank(a: &DenseMatrix, eps: f64) -> Result<usize> {
    if !(eps > 1.0) {
        return Err(Error::InvalidInput(format!(
            "numerical rank threshold must exceed 1, got {eps}"
        )));
    }
    Ok(numerical_rank_of(&singular_values(a)?, eps))
}

pub(crate) fn numerical_rank_of(sigma: &[f64], eps: f64) -> usize {
    let Some(&s1) = sigma.first() else {
        return 0;
    };
    if s1 == 0.0 {
        return 0;
    }
    sigma
        .iter()
        .position(|&s| s1 > eps * s)
        .unwrap_or(sigma.len())
}

/// Eigen-decomposition `A = U diag(lambda) U^{-1}` of a square matrix.
///
/// Eigenvalues are sorted by non-increasing magnitude (stable for ties).
/// Eigenvectors are only produced when the whole spectrum is real; they are
/// normalized to unit length and orthonormal for symmetric input.
#[derive(Debug, Clone)]
pub struct EvdResult {
    pub eigenvalues: Vec<Complex<f64>>,
    pub eigenvectors: Option<DenseMatrix>,
    /// 2-norm condition number of the eigenvector matrix (infinite when absent).
    pub condition: f64,
    pub symmetric: bool,
}

impl EvdResult {
    pub fn is_real(&self) -> bool {
        self.eigenvalues.iter().all(|z| z.im == 0.0)
    }

    pub fn real_eigenvalues(&self) -> Option<Vec<f64>> {
        self.is_real()
            .then(|| self.eigenvalues.iter().map(|z| z.re).collect())
    }

    pub fn is_defective(&self) -> bool {
        !(self.condition <= DEFECTIVE_CONDITION)
    }

    /// `U^{-1}`; the transpose for symmetric input.
    pub fn inverse_eigenvectors(&self) -> Result<DenseMatrix> {
        let u = self.eigenvectors.as_ref().ok_or(Error::ComplexSpectrum)?;
        if self.symmetric {
            return Ok(u.transpose());
        }
        if self.is_defective() {
            return Err(Error::DefectiveEigenbasis {
                condition: self.condition,
            });
        }
        let inv = u
            .as_nalgebra()
            .clone()
            .try_inverse()
            .ok_or(Error::DefectiveEigenbasis {
                condition: f64::INFINITY,
            })?;
        DenseMatrix::new(inv)
    }
}

pub fn full_evd(a: &DenseMatrix) -> Result<EvdResult> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if n == 0 {
        return Ok(EvdResult {
            eigenvalues: Vec::new(),
            eigenvectors: Some(DenseMatrix::zeros(0, 0)),
            condition: 1.0,
            symmetric: true,
        });
    }
    if a.is_exactly_symmetric() {
        symmetric_evd(a)
    } else {
        general_evd(a)
    }
}

fn sort_order_by_magnitude(values: &[Complex<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].norm().total_cmp(&values[i].norm()));
    order
}

fn symmetric_evd(a: &DenseMatrix) -> Result<EvdResult> {
    let n = a.rows();
    let eig = SymmetricEigen::try_new(
        a.as_nalgebra().clone(),
        f64::EPSILON,
        svd_iteration_budget(n, n),
    )
    .ok_or(Error::NoConvergence("symmetric eigen-decomposition"))?;
    let values: Vec<Complex<f64>> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex::new(l, 0.0))
        .collect();
    let order = sort_order_by_magnitude(&values);
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EvdResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: Some(DenseMatrix::wrap(vectors)),
        condition: 1.0,
        symmetric: true,
    })
}

fn general_evd(a: &DenseMatrix) -> Result<EvdResult> {
    let n = a.rows();
    let schur = Schur::try_new(
        a.as_nalgebra().clone(),
        f64::EPSILON,
        svd_iteration_budget(n, n),
    )
    .ok_or(Error::NoConvergence("Schur decomposition"))?;
    let (q, t) = schur.unpack();

    let mut values = Vec::with_capacity(n);
    let mut all_triangular = true;
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            let (p, b, c, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
            let half_tr = 0.5 * (p + d);
            let disc = 0.25 * (p - d) * (p - d) + b * c;
            if disc < 0.0 {
                let im = (-disc).sqrt();
                values.push(Complex::new(half_tr, im));
                values.push(Complex::new(half_tr, -im));
            } else {
                // Undecoupled real block: values are real but T is not triangular.
                let r = disc.sqrt();
                values.push(Complex::new(half_tr + r, 0.0));
                values.push(Complex::new(half_tr - r, 0.0));
                all_triangular = false;
            }
            k += 2;
        } else {
            values.push(Complex::new(t[(k, k)], 0.0));
            k += 1;
        }
    }
    let order = sort_order_by_magnitude(&values);
    let sorted: Vec<Complex<f64>> = order.iter().map(|&i| values[i]).collect();
    let real = values.iter().all(|z| z.im == 0.0);

    if !real || !all_triangular {
        return Ok(EvdResult {
            eigenvalues: sorted,
            eigenvectors: None,
            condition: f64::INFINITY,
            symmetric: false,
        });
    }

    let x = triangular_eigenvectors(&t);
    let mut vecs = q * x;
    for mut col in vecs.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col.unscale_mut(norm);
        }
    }
    let vectors = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    let sigma = singular_values(&DenseMatrix::wrap(vectors.clone()))?;
    let smallest = *sigma.last().unwrap_or(&0.0);
    let condition = if smallest > 0.0 {
        sigma[0] / smallest
    } else {
        f64::INFINITY
    };
    Ok(EvdResult {
        eigenvalues: sorted,
        eigenvectors: Some(DenseMatrix::wrap(vectors)),
        condition,
        symmetric: false,
    })
}

/// Eigenvectors of an upper-triangular matrix by back substitution; column
/// `k` belongs to the diagonal entry `t[(k, k)]`.
fn triangular_eigenvectors(t: &DMatrix<f64>) -> DMatrix<f64> {
    let n = t.nrows();
    let scale = t.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut x = DMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let smin = (f64::EPSILON * lambda.abs()).max(f64::EPSILON * scale);
        let mut col = DVector::zeros(n);
        col[k] = 1.0;
        for i in (0..k).rev() {
            let mut acc = 0.0;
            for j in i + 1..=k {
                acc += t[(i, j)] * col[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.abs() < smin {
                denom = smin.copysign(if denom == 0.0 { 1.0 } else { denom });
            }
            col[i] = -acc / denom;
            let big = col.amax();
            if big > 1e100 {
                col.unscale_mut(big);
            }
        }
        x.set_column(k, &col);
    }
    x
}

/// Principal real square root via diagonalization, `U diag(sqrt(lambda)) U^{-1}`.
///
/// Fails with [`Error::NoRealSquareRoot`] when an eigenvalue lies on the
/// closed negative real axis, the spectrum is complex, the eigenbasis is
/// numerically defective, or the result misses `S*S = A` by more than
/// `1e-8 * ||A||_2`.
pub fn matrix_sqrt(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    if n != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "square root needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let evd = full_evd(a)?;
    let Some(lambda) = evd.real_eigenvalues() else {
        return Err(Error::NoRealSquareRoot(
            "complex eigenvalues are not supported".into(),
        ));
    };
    if let Some(bad) = lambda.iter().find(|&&l| l <= 0.0) {
        return Err(Error::NoRealSquareRoot(format!(
            "eigenvalue {bad:e} on the closed negative real axis"
        )));
    }
    if evd.is_defective() {
        return Err(Error::NoRealSquareRoot(format!(
            "defective eigenbasis (condition {:e})",
            evd.condition
        )));
    }
    let u = evd.eigenvectors.as_ref().expect("real spectrum has vectors");
    let u_inv = evd
        .inverse_eigenvectors()
        .map_err(|e| Error::NoRealSquareRoot(e.to_string()))?;
    let mut scaled = u.as_nalgebra().clone();
    for (j, l) in lambda.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.sqrt());
    }
    let root = DenseMatrix::new(scaled * u_inv.as_nalgebra())?;

    let residual = DenseMatrix::wrap(root.as_nalgebra() * root.as_nalgebra() - a.as_nalgebra());
    let norm_a = spectral_norm(a)?;
    let res = spectral_norm(&residual)?;
    if res > 1e-8 * norm_a {
        return Err(Error::NoRealSquareRoot(format!(
            "square-root residual {res:e} exceeds 1e-8 * ||A||"
        )));
    }
    Ok(root)
}
