//! Choosing the `s` rows and `s` columns that form the sample block `A_M`.
//!
//! [`select_sample`] is the rank-revealing selection: build a thin
//! decomposition `M ~ G S`, run [`rrqr_select`] on `G^T` for the rows and on
//! `S` for the columns, then confirm that both selected blocks have full
//! numerical rank. The other samplers (uniform random, incomplete Cholesky,
//! k-means) and the Monte-Carlo wrapper serve as baselines.

mod icd;
mod kmeans;
mod rrqr;
mod thin;

pub use icd::icd_sample;
pub use kmeans::kmeans_sample;
pub use rrqr::{default_swap_budget, rrqr_select, RrqrPivots, SWAP_FACTOR};
pub use thin::{
    default_column_count, linear_time_svd, measured_gamma, residual_norm, thin_from_svd, thin_svd,
    ColumnWeights, ThinDecomposition, EXACT_RESIDUAL_LIMIT,
};

use rand::seq::index;

use crate::bounds::beta_default;
use crate::error::{Error, Result};
use crate::matrix::{numerical_rank, singular_values, DenseMatrix, IndexSet};
use crate::rng;

/// Condition threshold for the rank check on `G_A` and `S_A`.
pub const RANK_CHECK_EPS: f64 = 1e12;

pub const FAILURE_MESSAGE: &str = "Algorithm failed. Please pick a different value for s.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMethod {
    Algorithm1,
    Random,
    Icd,
    Kmeans,
}

impl SamplerMethod {
    pub fn name(self) -> &'static str {
        match self {
            SamplerMethod::Algorithm1 => "algorithm1",
            SamplerMethod::Random => "random",
            SamplerMethod::Icd => "icd",
            SamplerMethod::Kmeans => "kmeans",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrontEnd {
    #[default]
    ExactSvd,
    LinearTimeSvd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub front_end: FrontEnd,
    pub seed: u64,
    /// Sampled columns for [`FrontEnd::LinearTimeSvd`]; `None` means
    /// [`default_column_count`].
    pub columns: Option<usize>,
    pub column_weights: ColumnWeights,
    pub kmeans_iters: usize,
    /// `None` means [`default_swap_budget`].
    pub swap_budget: Option<usize>,
    /// Random sampling draws `J = I` when set.
    pub symmetric: bool,
    /// Early stop for incomplete Cholesky on the residual trace.
    pub icd_trace_tol: Option<f64>,
}

impl SamplerConfig {
    pub fn new(method: SamplerMethod, seed: u64) -> Self {
        SamplerConfig {
            method,
            front_end: FrontEnd::ExactSvd,
            seed,
            columns: None,
            column_weights: ColumnWeights::SquaredNorm,
            kmeans_iters: 100,
            swap_budget: None,
            symmetric: false,
            icd_trace_tol: None,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SamplerConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionStatus {
    Ok,
    Failed(String),
}

/// Singular values recorded while running [`select_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionAudit {
    pub sigma_s_g: f64,
    pub sigma_s_s: f64,
    pub sigma_s_g_sample: f64,
    pub sigma_s_s_sample: f64,
    pub sigma_s_gs: f64,
    pub gamma: f64,
    pub rows_converged: bool,
    pub cols_converged: bool,
}

impl SelectionAudit {
    /// The smallest `beta` for which both RRQR guarantees hold on this run,
    /// never below 1.
    pub fn measured_beta(&self) -> f64 {
        let rows = self.sigma_s_g / self.sigma_s_g_sample;
        let cols = self.sigma_s_s / self.sigma_s_s_sample;
        rows.max(cols).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSelection {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub method: SamplerMethod,
    /// `sigma_s(A_M)`.
    pub sigma_s_sample: f64,
    /// `sqrt(s (min(m, n) - s) + 1)`.
    pub beta_bound: f64,
    /// `e_s` of the thin decomposition, when one was built.
    pub residual: Option<f64>,
    pub status: SelectionStatus,
    pub audit: Option<SelectionAudit>,
}

impl SampleSelection {
    /// Wraps externally chosen indices, measuring `sigma_s(A_M)` on `m`.
    pub fn from_indices(
        m: &DenseMatrix,
        rows: IndexSet,
        cols: IndexSet,
        method: SamplerMethod,
    ) -> Result<Self> {
        if rows.bound() != m.rows() || cols.bound() != m.cols() || rows.len() != cols.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}+{} indices over bounds ({}, {}) for a {}x{} matrix",
                rows.len(),
                cols.len(),
                rows.bound(),
                cols.bound(),
                m.rows(),
                m.cols()
            )));
        }
        let s = rows.len();
        let sigma = sample_sigma(m, &rows, &cols)?;
        Ok(SampleSelection {
            beta_bound: beta_default(s, m.rows(), m.cols())?,
            rows,
            cols,
            method,
            sigma_s_sample: sigma,
            residual: None,
            status: SelectionStatus::Ok,
            audit: None,
        })
    }

    pub fn is_ok(&self) -> bool {
        self.status == SelectionStatus::Ok
    }

    pub fn sample_size(&self) -> usize {
        self.rows.len()
    }
}

fn sample_sigma(m: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<f64> {
    let block = m.select(rows.indices(), cols.indices());
    Ok(singular_values(&block)?.last().copied().unwrap_or(0.0))
}

/// Rank-revealing sample selection with the configured thin front end.
pub fn select_sample(m: &DenseMatrix, s: usize, cfg: &SamplerConfig) -> Result<SampleSelection> {
    let thin = match cfg.front_end {
        FrontEnd::ExactSvd => thin_svd(m, s)?,
        FrontEnd::LinearTimeSvd => {
            let c = cfg.columns.unwrap_or_else(|| default_column_count(s, m.cols()));
            linear_time_svd(m, s, c, cfg.column_weights, cfg.seed)?
        }
    };
    select_from_thin(m, &thin, cfg.swap_budget)
}

/// The RRQR passes and rank check on a prebuilt thin decomposition.
///
/// A failed rank check is reported through [`SelectionStatus::Failed`], with
/// the pivots that were found.
pub fn select_from_thin(
    m: &DenseMatrix,
    thin: &ThinDecomposition,
    swap_budget: Option<usize>,
) -> Result<SampleSelection> {
    let s = thin.rank();
    let (rows_n, cols_n) = m.shape();
    if thin.g.rows() != rows_n || thin.s.cols() != cols_n {
        return Err(Error::DimensionMismatch("thin factors do not match M".into()));
    }
    let budget = swap_budget.unwrap_or_else(|| default_swap_budget(s));
    let row_piv = rrqr_select(&thin.g.transpose(), budget)?;
    let col_piv = rrqr_select(&thin.s, budget)?;
    let rows = IndexSet::new(row_piv.indices.clone(), rows_n)?;
    let cols = IndexSet::new(col_piv.indices.clone(), cols_n)?;

    let all: Vec<usize> = (0..s).collect();
    let g_sample = thin.g.select(rows.indices(), &all);
    let s_sample = thin.s.select(&all, cols.indices());
    let full_rank = numerical_rank(&g_sample, RANK_CHECK_EPS)? == s
        && numerical_rank(&s_sample, RANK_CHECK_EPS)? == s;

    let last = |v: Vec<f64>| v.get(s - 1).copied().unwrap_or(0.0);
    let sigma_s_g = last(singular_values(&thin.g)?);
    let sigma_s_s = last(singular_values(&thin.s)?);
    let audit = SelectionAudit {
        sigma_s_g,
        sigma_s_s,
        sigma_s_g_sample: last(singular_values(&g_sample)?),
        sigma_s_s_sample: last(singular_values(&s_sample)?),
        sigma_s_gs: thin.gamma * sigma_s_g * sigma_s_s,
        gamma: thin.gamma,
        rows_converged: row_piv.converged,
        cols_converged: col_piv.converged,
    };
    let mut sel = SampleSelection::from_indices(m, rows, cols, SamplerMethod::Algorithm1)?;
    sel.residual = Some(thin.residual);
    sel.audit = Some(audit);
    if !full_rank {
        sel.status = SelectionStatus::Failed(FAILURE_MESSAGE.into());
    }
    Ok(sel)
}

/// Uniform draw of `s` rows and `s` columns without replacement; `J = I`
/// when `symmetric`.
pub fn random_sample(rows: usize, cols: usize, s: usize, seed: u64, symmetric: bool) -> Result<(IndexSet, IndexSet)> {
    if s == 0 || s > rows.min(cols) {
        return Err(Error::InvalidInput(format!(
            "sample size {s} outside 1..={}",
            rows.min(cols)
        )));
    }
    if symmetric && rows != cols {
        return Err(Error::NotSymmetric(format!("{rows}x{cols} is not square")));
    }
    let mut rng = rng::seeded(seed);
    let i = index::sample(&mut rng, rows, s).into_vec();
    let j = if symmetric {
        i.clone()
    } else {
        index::sample(&mut rng, cols, s).into_vec()
    };
    Ok((IndexSet::new(i, rows)?, IndexSet::new(j, cols)?))
}

/// Runs the sampler named by `cfg.method`. `points` is required for
/// [`SamplerMethod::Kmeans`], whose rows index the rows and columns of `m`.
pub fn run_sampler(
    m: &DenseMatrix,
    s: usize,
    cfg: &SamplerConfig,
    points: Option<&DenseMatrix>,
) -> Result<SampleSelection> {
    match cfg.method {
        SamplerMethod::Algorithm1 => select_sample(m, s, cfg),
        SamplerMethod::Random => {
            let (i, j) = random_sample(m.rows(), m.cols(), s, cfg.seed, cfg.symmetric)?;
            SampleSelection::from_indices(m, i, j, SamplerMethod::Random)
        }
        SamplerMethod::Icd => icd_sample(m, s, cfg.icd_trace_tol),
        SamplerMethod::Kmeans => {
            let pts = points.ok_or_else(|| {
                Error::InvalidInput("k-means sampling needs the data points".into())
            })?;
            if pts.rows() != m.rows() || m.rows() != m.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "{} points for a {}x{} matrix",
                    pts.rows(),
                    m.rows(),
                    m.cols()
                )));
            }
            let set = kmeans_sample(pts, s, cfg.kmeans_iters, cfg.seed)?;
            SampleSelection::from_indices(m, set.clone(), set, SamplerMethod::Kmeans)
        }
    }
}

/// Outcome of [`monte_carlo_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSelection {
    pub best: SampleSelection,
    pub best_trial: usize,
    /// `sigma_s(A_M)` per trial, `None` for failed trials.
    pub trial_sigmas: Vec<Option<f64>>,
}

/// Runs the configured sampler `trials` times with seeds derived from
/// `cfg.seed` and keeps the selection with the largest `sigma_s(A_M)`
/// (lowest trial index on ties).
pub fn monte_carlo_select(
    m: &DenseMatrix,
    s: usize,
    cfg: &SamplerConfig,
    trials: usize,
    points: Option<&DenseMatrix>,
) -> Result<MonteCarloSelection> {
    monte_carlo_by(trials, |trial| {
        run_sampler(m, s, &cfg.with_seed(trial_seed(cfg.seed, trial)), points)
    })
}

/// Seed of trial `trial` under `seed`; trial 0 reuses `seed` itself so a
/// single-trial run matches a plain sampler call.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    if trial == 0 {
        seed
    } else {
        rng::derive_seed(seed, trial as u64)
    }
}

/// [`monte_carlo_select`] over an arbitrary per-trial sampler.
pub fn monte_carlo_by(
    trials: usize,
    mut sample: impl FnMut(usize) -> Result<SampleSelection>,
) -> Result<MonteCarloSelection> {
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let mut best: Option<(usize, SampleSelection)> = None;
    let mut sigmas = Vec::with_capacity(trials);
    let mut reasons = Vec::new();
    for trial in 0..trials {
        let outcome = sample(trial).and_then(|sel| match &sel.status {
            SelectionStatus::Ok => Ok(sel),
            SelectionStatus::Failed(why) => Err(Error::DegenerateSampling(why.clone())),
        });
        match outcome {
            Ok(sel) => {
                sigmas.push(Some(sel.sigma_s_sample));
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| sel.sigma_s_sample > b.sigma_s_sample);
                if better {
                    best = Some((trial, sel));
                }
            }
            Err(e) => {
                sigmas.push(None);
                reasons.push(format!("trial {trial}: {e}"));
            }
        }
    }
    let (best_trial, best) = best.ok_or(Error::AllTrialsFailed(reasons))?;
    Ok(MonteCarloSelection {
        best,
        best_trial,
        trial_sigmas: sigmas,
    })
}
