use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// A swap is taken only if it grows `|det|` of the selected block by more
/// than this factor.
pub const SWAP_FACTOR: f64 = 1.0 + 1e-12;

/// Columns chosen by [`rrqr_select`], in pivot order.
#[derive(Debug, Clone, PartialEq)]
pub struct RrqrPivots {
    pub indices: Vec<usize>,
    /// The greedy pass ran out of residual before `s` pivots, or the
    /// selected block was singular.
    pub rank_deficient: bool,
    /// The swap phase reached a local maximum of `|det|` within its budget.
    pub converged: bool,
    pub swaps: usize,
}

pub fn default_swap_budget(s: usize) -> usize {
    4 * s
}

/// Picks `s` columns of the wide `s x k` matrix `a` whose block has large
/// volume.
///
/// Greedy column-pivoted QR (largest residual norm first) followed by
/// pairwise swaps. With `W = A_sel^{-1} A`, replacing selected column `i` by
/// column `j` scales `|det|` by `|W[i, j]|`; the largest such entry is
/// swapped in while it exceeds [`SWAP_FACTOR`]. At a local maximum every
/// `|W[i, j]| <= SWAP_FACTOR`, hence
/// `sigma_s(A_sel) >= sigma_s(A) / sqrt(s (k - s) SWAP_FACTOR^2 + 1)`.
pub fn rrqr_select(a: &DenseMatrix, swap_budget: usize) -> Result<RrqrPivots> {
    let (s, k) = a.shape();
    if s == 0 {
        return Err(Error::InvalidInput("rrqr_select needs at least one row".into()));
    }
    if s > k {
        return Err(Error::DimensionMismatch(format!(
            "rrqr_select expects a wide matrix, got {s}x{k}"
        )));
    }
    let (mut indices, mut rank_deficient) = greedy_pivots(a.as_nalgebra(), s);
    let mut swaps = 0;
    let mut converged = false;
    let mut selected = vec![false; k];
    for &j in &indices {
        selected[j] = true;
    }
    loop {
        let block = a.as_nalgebra().select_columns(&indices);
        let Some(lu_inv) = block.clone().lu().try_inverse() else {
            rank_deficient = true;
            break;
        };
        let w = lu_inv * a.as_nalgebra();
        let mut best = (SWAP_FACTOR, usize::MAX, usize::MAX);
        for j in (0..k).filter(|&j| !selected[j]) {
            for i in 0..s {
                let v = w[(i, j)].abs();
                if v > best.0 {
                    best = (v, i, j);
                }
            }
        }
        if best.1 == usize::MAX {
            converged = true;
            break;
        }
        if swaps == swap_budget {
            break;
        }
        let (_, i, j) = best;
        selected[indices[i]] = false;
        selected[j] = true;
        indices[i] = j;
        swaps += 1;
    }
    Ok(RrqrPivots {
        indices,
        rank_deficient,
        converged,
        swaps,
    })
}

/// Column-pivoted modified Gram-Schmidt for `s` steps.
fn greedy_pivots(a: &DMatrix<f64>, s: usize) -> (Vec<usize>, bool) {
    let k = a.ncols();
    let mut resid = a.clone();
    let mut norms: Vec<f64> = (0..k).map(|j| resid.column(j).norm_squared()).collect();
    let scale = norms.iter().cloned().fold(0.0_f64, f64::max).sqrt();
    let tol = (s.max(k) as f64) * f64::EPSILON * scale;
    let mut taken = vec![false; k];
    let mut pivots = Vec::with_capacity(s);
    let mut deficient = false;
    for _ in 0..s {
        let p = (0..k)
            .filter(|&j| !taken[j])
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if norms[b] >= norms[j] => Some(b),
                _ => Some(j),
            })
            .expect("k >= s leaves a candidate");
        taken[p] = true;
        pivots.push(p);
        let norm = resid.column(p).norm();
        if norm <= tol {
            deficient = true;
            continue;
        }
        let q = resid.column(p) / norm;
        for j in (0..k).filter(|&j| !taken[j]) {
            let proj = q.dot(&resid.column(j));
            resid.column_mut(j).axpy(-proj, &q, 1.0);
            norms[j] = resid.column(j).norm_squared();
        }
    }
    (pivots, deficient)
}
