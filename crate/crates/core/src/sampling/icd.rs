use nalgebra::DMatrix;

use super::{SampleSelection, SamplerMethod};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, IndexSet};
use crate::sampling::thin::power_norm;

/// Pivoted incomplete Cholesky for `s` steps; the pivot at each step is the
/// largest remaining diagonal residual (lowest index on ties).
///
/// With `trace_tol`, stops early once the residual trace drops to that
/// value, returning fewer than `s` pivots.
pub fn icd_sample(m: &DenseMatrix, s: usize, trace_tol: Option<f64>) -> Result<SampleSelection> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::NotSymmetric(format!("{}x{} is not square", n, m.cols())));
    }
    if s == 0 || s > n {
        return Err(Error::InvalidInput(format!("sample size {s} outside 1..={n}")));
    }
    let mat = m.as_nalgebra();
    let norm = power_norm(n, |x| mat * x, |y| mat.tr_mul(y));
    if (mat - mat.transpose()).amax() > 1e-10 * norm {
        return Err(Error::NotSymmetric("input to incomplete Cholesky".into()));
    }
    let floor = -1e-10 * norm;
    let mut diag: Vec<f64> = (0..n).map(|i| mat[(i, i)]).collect();
    let mut factor = DMatrix::<f64>::zeros(n, s);
    let mut taken = vec![false; n];
    let mut pivots = Vec::with_capacity(s);
    for t in 0..s {
        if let Some((i, &d)) = diag.iter().enumerate().find(|(_, &d)| d < floor) {
            return Err(Error::PsdViolation(format!(
                "diagonal residual {d:e} at index {i} after {t} steps"
            )));
        }
        if let Some(tol) = trace_tol {
            let trace: f64 = (0..n).filter(|&i| !taken[i]).map(|i| diag[i].max(0.0)).sum();
            if trace <= tol {
                break;
            }
        }
        let p = (0..n)
            .filter(|&i| !taken[i])
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if diag[b] >= diag[i] => Some(b),
                _ => Some(i),
            })
            .expect("s <= n leaves a candidate");
        taken[p] = true;
        pivots.push(p);
        let d = diag[p];
        if d <= 0.0 {
            continue;
        }
        let pivot_row = factor.row(p).clone_owned();
        let mut col = mat.column(p).clone_owned();
        for k in 0..t {
            col.axpy(-pivot_row[k], &factor.column(k), 1.0);
        }
        col /= d.sqrt();
        for i in 0..n {
            diag[i] -= col[i] * col[i];
        }
        diag[p] = 0.0;
        factor.set_column(t, &col);
    }
    let set = IndexSet::new(pivots, n)?;
    SampleSelection::from_indices(m, set.clone(), set, SamplerMethod::Icd)
}
