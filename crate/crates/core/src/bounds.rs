//! Error bounds for the Nystrom approximation and the predicates under which
//! they hold.
//!
//! Notation follows the split `M = M_lg + M_sm`, where `M_lg` is the top-`s`
//! singular component of `M`. `A_lg` is the sampled block of `M_lg`, `e_s`
//! the spectral error of the thin decomposition `M ~ G S`, `beta` the RRQR
//! quality constant and `gamma` the multiplicativity constant of `G S`.

use crate::error::{Error, Result};
use crate::matrix::{singular_values, spectral_norm, DenseMatrix, IndexSet, SvdResult};
use crate::nystrom::NystromFactorization;

/// Worst-case RRQR constant `sqrt(s (min(m, n) - s) + 1)`.
pub fn beta_default(s: usize, m: usize, n: usize) -> Result<f64> {
    let k = m.min(n);
    if s > k {
        return Err(Error::InvalidInput(format!("sample size {s} exceeds {k}")));
    }
    Ok(((s * (k - s) + 1) as f64).sqrt())
}

/// The measured quantities every bound is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary {
    pub sigma1: f64,
    pub sigma_s: f64,
    /// `sigma_{s+1}(M)`, zero when `s = min(m, n)`.
    pub sigma_next: f64,
    /// `sigma_s(A_M)`.
    pub sigma_s_sample: f64,
    /// `sigma_s(A_lg)`.
    pub sigma_s_large: f64,
    pub residual: f64,
    pub beta: f64,
    pub gamma: f64,
    pub s: usize,
    pub m: usize,
    pub n: usize,
}

impl SpectralSummary {
    /// Measures the spectral quantities of `m` and of the sample at
    /// (`rows`, `cols`), given an SVD of `m`.
    ///
    /// `A_lg = X_A Y_A` with `X_A = U_s[I, :] Sigma_s` and `Y_A = V_s[J, :]^T`.
    pub fn measure(
        m: &DenseMatrix,
        svd: &SvdResult,
        rows: &IndexSet,
        cols: &IndexSet,
        residual: f64,
        beta: f64,
        gamma: f64,
    ) -> Result<Self> {
        let s = rows.len();
        let sv = &svd.singular_values;
        if s == 0 || s > sv.len() || cols.len() != s {
            return Err(Error::InvalidInput(format!(
                "sample of {}x{} against rank {}",
                s,
                cols.len(),
                sv.len()
            )));
        }
        let lead: Vec<usize> = (0..s).collect();
        let mut x_a = svd.u.as_nalgebra().select_rows(rows.indices()).select_columns(&lead);
        for j in 0..s {
            x_a.column_mut(j).scale_mut(sv[j]);
        }
        let y_a = svd
            .v
            .as_nalgebra()
            .select_rows(cols.indices())
            .select_columns(&lead)
            .transpose();
        let large = DenseMatrix::wrap(x_a * y_a);
        let sample = m.select(rows.indices(), cols.indices());
        let last = |v: Vec<f64>| v.get(s - 1).copied().unwrap_or(0.0);
        Ok(SpectralSummary {
            sigma1: sv[0],
            sigma_s: sv[s - 1],
            sigma_next: sv.get(s).copied().unwrap_or(0.0),
            sigma_s_sample: last(singular_values(&sample)?),
            sigma_s_large: last(singular_values(&large)?),
            residual,
            beta,
            gamma,
            s,
            m: m.rows(),
            n: m.cols(),
        })
    }

    fn beta_sq_gamma(&self) -> f64 {
        self.beta * self.beta * self.gamma
    }
}

/// Singular values of the thin factors and of their sampled blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinSpectra {
    pub sigma_s_gs: f64,
    pub sigma_s_g: f64,
    pub sigma_s_s: f64,
    pub sigma_s_g_sample: f64,
    pub sigma_s_s_sample: f64,
}

/// Per-assumption outcome of the non-singularity theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionCheck {
    /// `sigma_s(G S) > 0`.
    pub product_nonsingular: bool,
    /// `sigma_s(G) sigma_s(S) = sigma_s(G S) / gamma`, 1e-9 relative.
    pub multiplicative: bool,
    /// `sigma_s(G_A) >= sigma_s(G) / beta` and the same for `S`, up to 1e-12
    /// relative rounding.
    pub rrqr: bool,
    /// `e_s < (sigma_s - e_s) / (beta^2 gamma)`.
    pub residual_small: bool,
    /// `sigma_s(G S) / (sigma_s(G) sigma_s(S))`.
    pub gamma: f64,
}

impl AssumptionCheck {
    pub fn all(&self) -> bool {
        self.product_nonsingular && self.multiplicative && self.rrqr && self.residual_small
    }
}

pub fn theorem1_assumptions(ss: &SpectralSummary, thin: &ThinSpectra) -> AssumptionCheck {
    let product = thin.sigma_s_g * thin.sigma_s_s;
    let gamma = if product > 0.0 {
        thin.sigma_s_gs / product
    } else {
        f64::INFINITY
    };
    let target = thin.sigma_s_gs / ss.gamma;
    let multiplicative = (product - target).abs() <= 1e-9 * target.abs().max(f64::MIN_POSITIVE);
    // Relative slack for rounding when beta was measured from these very ratios.
    let slack = 1.0 + 1e-12;
    let rrqr = thin.sigma_s_g_sample * ss.beta * slack >= thin.sigma_s_g
        && thin.sigma_s_s_sample * ss.beta * slack >= thin.sigma_s_s;
    AssumptionCheck {
        product_nonsingular: thin.sigma_s_gs > 0.0,
        multiplicative,
        rrqr,
        residual_small: ss.residual < (ss.sigma_s - ss.residual) / ss.beta_sq_gamma(),
        gamma,
    }
}

/// `sigma_{s+1} < (sigma_s - e_s) / (beta^2 gamma) - e_s`, under which `A_lg`
/// is non-singular.
pub fn lemma3_condition(ss: &SpectralSummary) -> bool {
    ss.sigma_next < (ss.sigma_s - ss.residual) / ss.beta_sq_gamma() - ss.residual
}

/// A bound value, `+inf` with `degenerate` set when a denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub degenerate: bool,
}

/// `sigma_{s+1} / sigma_s(A_M) * (sigma_1^2 / sigma_s(A_lg) + 2 sigma_1 + sigma_{s+1})`.
pub fn lemma4_bound(ss: &SpectralSummary) -> BoundValue {
    if ss.sigma_s_sample <= 0.0 || ss.sigma_s_large <= 0.0 {
        return BoundValue {
            value: f64::INFINITY,
            degenerate: true,
        };
    }
    let value = ss.sigma_next / ss.sigma_s_sample
        * (ss.sigma1 * ss.sigma1 / ss.sigma_s_large + 2.0 * ss.sigma1 + ss.sigma_next);
    BoundValue {
        value,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBound {
    pub value: f64,
    /// `sigma_{s+1} beta^2 gamma / (sigma_s - (1 + beta^2 gamma) e_s)`.
    pub eigengap_factor: f64,
}

/// The closed-form bound in terms of `sigma_1`, `sigma_s`, `sigma_{s+1}`,
/// `e_s`, `beta` and `gamma`:
///
/// ```text
///   q = sigma_s - (1 + b) e_s,   b = beta^2 gamma
///   bound = sigma_{s+1} b / q * (sigma_1^2 b / (q - sigma_{s+1} b) + 2 sigma_1 + sigma_{s+1})
/// ```
pub fn theorem2_bound(ss: &SpectralSummary) -> Result<ErrorBound> {
    let b = ss.beta_sq_gamma();
    let q = ss.sigma_s - (1.0 + b) * ss.residual;
    if !(q > 0.0) {
        return Err(Error::BoundNotApplicable(format!(
            "sigma_s - (1 + beta^2 gamma) e_s = {q:e} is not positive"
        )));
    }
    let inner = q - ss.sigma_next * b;
    if !(inner > 0.0) {
        return Err(Error::BoundNotApplicable(format!(
            "inner denominator {inner:e} is not positive"
        )));
    }
    let factor = ss.sigma_next * b / q;
    let value = factor * (ss.sigma1 * ss.sigma1 * b / inner + 2.0 * ss.sigma1 + ss.sigma_next);
    Ok(ErrorBound {
        value,
        eigengap_factor: factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorNorm {
    #[default]
    Spectral,
    Frobenius,
}

/// `||M_hat - M||` in the requested norm.
pub fn observed_error(m: &DenseMatrix, f: &NystromFactorization, norm: ErrorNorm) -> Result<f64> {
    let approx = f.reconstruct();
    if approx.shape() != m.shape() {
        return Err(Error::DimensionMismatch("factorization does not match M".into()));
    }
    let diff = DenseMatrix::wrap(approx.as_nalgebra() - m.as_nalgebra());
    Ok(match norm {
        ErrorNorm::Spectral => spectral_norm(&diff)?,
        ErrorNorm::Frobenius => diff.as_nalgebra().norm(),
    })
}
