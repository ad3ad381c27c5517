use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::matrix::{full_svd, singular_values, DenseMatrix, SvdResult};
use crate::rng;

/// Largest dimension for which `e_s` is computed from a full SVD.
pub const EXACT_RESIDUAL_LIMIT: usize = 2000;
const POWER_ITERATIONS: usize = 50;
const POWER_TOL: f64 = 1e-6;

/// A rank-`s` product `M ~ G S` with `G` `m x s` and `S` `s x n`.
#[derive(Debug, Clone)]
pub struct ThinDecomposition {
    pub g: DenseMatrix,
    pub s: DenseMatrix,
    /// `e_s = ||M - G S||_2`.
    pub residual: f64,
    /// `sigma_s(G S) / (sigma_s(G) sigma_s(S))`.
    pub gamma: f64,
}

impl ThinDecomposition {
    pub fn rank(&self) -> usize {
        self.g.cols()
    }

    pub fn product(&self) -> DenseMatrix {
        DenseMatrix::wrap(self.g.as_nalgebra() * self.s.as_nalgebra())
    }
}

/// Truncated SVD: `G = U_s Sigma_s`, `S = V_s^T`, `e_s = sigma_{s+1}`.
pub fn thin_svd(m: &DenseMatrix, s: usize) -> Result<ThinDecomposition> {
    check_rank_request(m, s)?;
    thin_from_svd(&full_svd(m)?, s)
}

/// [`thin_svd`] from an already computed SVD of `M`.
pub fn thin_from_svd(svd: &SvdResult, s: usize) -> Result<ThinDecomposition> {
    let k = svd.singular_values.len();
    if s == 0 || s > k {
        return Err(Error::InvalidInput(format!("rank {s} outside 1..={k}")));
    }
    let cols: Vec<usize> = (0..s).collect();
    let mut g = svd.u.as_nalgebra().select_columns(&cols);
    for j in 0..s {
        g.column_mut(j).scale_mut(svd.singular_values[j]);
    }
    let s_mat = svd.v.as_nalgebra().select_columns(&cols).transpose();
    Ok(ThinDecomposition {
        g: DenseMatrix::wrap(g),
        s: DenseMatrix::wrap(s_mat),
        residual: svd.singular_values.get(s).copied().unwrap_or(0.0),
        gamma: 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnWeights {
    /// Probability proportional to the squared column norm.
    #[default]
    SquaredNorm,
    Uniform,
}

pub fn default_column_count(s: usize, n: usize) -> usize {
    n.min(10 * s)
}

/// Sampled-column SVD front end.
///
/// Draws `c` columns with replacement, rescales column `j` by
/// `1 / sqrt(c p_j)`, and takes the top `s` left singular vectors `U_s` of
/// the sample: `G = U_s`, `S = U_s^T M`.
pub fn linear_time_svd(
    m: &DenseMatrix,
    s: usize,
    c: usize,
    weights: ColumnWeights,
    seed: u64,
) -> Result<ThinDecomposition> {
    check_rank_request(m, s)?;
    let (rows, n) = m.shape();
    if c < s || c > n {
        return Err(Error::InvalidInput(format!(
            "column count {c} outside {s}..={n}"
        )));
    }
    let mat = m.as_nalgebra();
    let col_sq: Vec<f64> = (0..n).map(|j| mat.column(j).norm_squared()).collect();
    let total: f64 = col_sq.iter().sum();
    if total == 0.0 {
        return Err(Error::DegenerateSampling("all columns are zero".into()));
    }
    let probs: Vec<f64> = match weights {
        ColumnWeights::SquaredNorm => col_sq.iter().map(|v| v / total).collect(),
        ColumnWeights::Uniform => vec![1.0 / n as f64; n],
    };
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::DegenerateSampling(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    let mut sample = DMatrix::zeros(rows, c);
    for t in 0..c {
        let j = dist.sample(&mut rng);
        let scale = 1.0 / (c as f64 * probs[j]).sqrt();
        sample.set_column(t, &(mat.column(j) * scale));
    }
    let sample_svd = full_svd(&DenseMatrix::new(sample)?)?;
    if sample_svd.singular_values.len() < s {
        return Err(Error::DegenerateSampling(format!(
            "sample of {c} columns cannot span rank {s}"
        )));
    }
    let g = sample_svd
        .u
        .as_nalgebra()
        .select_columns(&(0..s).collect::<Vec<_>>());
    let s_mat = g.transpose() * mat;
    let g = DenseMatrix::wrap(g);
    let s_mat = DenseMatrix::wrap(s_mat);
    let residual = residual_norm(m, &g, &s_mat)?;
    let gamma = measured_gamma(&g, &s_mat)?;
    Ok(ThinDecomposition {
        g,
        s: s_mat,
        residual,
        gamma,
    })
}

/// `sigma_s(G S) / (sigma_s(G) sigma_s(S))`, with `sigma_s(G S)` taken from
/// `R S` where `G = Q R`. Returns `+inf` when either factor is rank deficient.
pub fn measured_gamma(g: &DenseMatrix, s: &DenseMatrix) -> Result<f64> {
    let k = g.cols();
    let sg = singular_values(g)?.get(k - 1).copied().unwrap_or(0.0);
    let ss = singular_values(s)?.get(k - 1).copied().unwrap_or(0.0);
    if sg == 0.0 || ss == 0.0 {
        return Ok(f64::INFINITY);
    }
    let r = g.as_nalgebra().clone().qr().r();
    let rs = DenseMatrix::wrap(r * s.as_nalgebra());
    let sgs = singular_values(&rs)?.get(k - 1).copied().unwrap_or(0.0);
    let gamma = sgs / (sg * ss);
    Ok(if (gamma - 1.0).abs() <= 1e-9 { 1.0 } else { gamma })
}

/// `||M - G S||_2`: exact up to [`EXACT_RESIDUAL_LIMIT`], otherwise by power
/// iteration on `(M - GS)^T (M - GS)`.
pub fn residual_norm(m: &DenseMatrix, g: &DenseMatrix, s: &DenseMatrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows.max(cols) <= EXACT_RESIDUAL_LIMIT {
        let diff = DenseMatrix::wrap(m.as_nalgebra() - g.as_nalgebra() * s.as_nalgebra());
        return Ok(singular_values(&diff)?.first().copied().unwrap_or(0.0));
    }
    let (mat, gm, sm) = (m.as_nalgebra(), g.as_nalgebra(), s.as_nalgebra());
    let apply = |x: &DVector<f64>| mat * x - gm * (sm * x);
    let apply_t = |y: &DVector<f64>| mat.tr_mul(y) - sm.tr_mul(&gm.tr_mul(y));
    Ok(power_norm(cols, apply, apply_t))
}

/// Largest singular value of an implicit operator, from
/// [`POWER_ITERATIONS`] steps of power iteration started at the ones vector.
pub(crate) fn power_norm(
    cols: usize,
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    apply_t: impl Fn(&DVector<f64>) -> DVector<f64>,
) -> f64 {
    let mut x = DVector::from_element(cols, 1.0 / (cols as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let y = apply(&x);
        let z = apply_t(&y);
        let norm = z.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        x = z / norm;
        if (next - estimate).abs() <= POWER_TOL * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

fn check_rank_request(m: &DenseMatrix, s: usize) -> Result<()> {
    let k = m.rows().min(m.cols());
    if s == 0 || s > k {
        return Err(Error::InvalidInput(format!(
            "rank {s} outside 1..={k} for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn thin_svd_of_diagonal() {
        let m = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]).unwrap();
        let t = thin_svd(&m, 2).unwrap();
        let expect = DenseMatrix::from_diagonal(&[3.0, 2.0, 0.0]).unwrap();
        assert!(t.product().max_abs_diff(&expect) < 1e-14);
        assert!((t.residual - 1.0).abs() < 1e-14);
        assert_eq!(t.gamma, 1.0);
    }

    #[test]
    fn thin_svd_of_rank_two() {
        let a = random(6, 2, 1);
        let b = random(2, 5, 2);
        let m = DenseMatrix::wrap(a.as_nalgebra() * b.as_nalgebra());
        assert!(thin_svd(&m, 2).unwrap().residual < 1e-14);
    }

    #[test]
    fn thin_svd_residual_is_next_singular_value() {
        let m = random(40, 30, 3);
        let t = thin_svd(&m, 5).unwrap();
        let sv = singular_values(&m).unwrap();
        assert!((t.residual - sv[5]).abs() <= 1e-12);
        let exact = residual_norm(&m, &t.g, &t.s).unwrap();
        assert!((exact - sv[5]).abs() <= 1e-12);
    }

    #[test]
    fn linear_time_recovers_single_column() {
        let m = DenseMatrix::from_fn(5, 4, |i, j| if j == 2 { i as f64 + 1.0 } else { 0.0 })
            .unwrap();
        let t = linear_time_svd(&m, 1, 3, ColumnWeights::SquaredNorm, 11).unwrap();
        assert!(t.product().max_abs_diff(&m) < 1e-14);
    }

    #[test]
    fn linear_time_exact_on_rank_one() {
        let u = random(30, 1, 4);
        let v = random(1, 20, 5);
        let m = DenseMatrix::wrap(u.as_nalgebra() * v.as_nalgebra());
        let norm = singular_values(&m).unwrap()[0];
        for (seed, c) in [(1, 1), (2, 5), (3, 20)] {
            let t = linear_time_svd(&m, 1, c, ColumnWeights::SquaredNorm, seed).unwrap();
            assert!(t.residual <= 1e-10 * norm);
            assert_eq!(t.gamma, 1.0);
        }
    }

    #[test]
    fn linear_time_rejects_zero_matrix() {
        let m = DenseMatrix::zeros(4, 4);
        assert!(matches!(
            linear_time_svd(&m, 1, 2, ColumnWeights::Uniform, 0),
            Err(Error::DegenerateSampling(_))
        ));
    }

    #[test]
    fn linear_time_is_seed_deterministic() {
        let m = random(20, 30, 9);
        let a = linear_time_svd(&m, 3, 10, ColumnWeights::SquaredNorm, 5).unwrap();
        let b = linear_time_svd(&m, 3, 10, ColumnWeights::SquaredNorm, 5).unwrap();
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn power_iteration_matches_exact_norm() {
        let m = random(30, 25, 6);
        let exact = singular_values(&m).unwrap()[0];
        let mat = m.as_nalgebra();
        let est = power_norm(25, |x| mat * x, |y| mat.tr_mul(y));
        assert!((est - exact).abs() <= 1e-3 * exact);
    }
}
