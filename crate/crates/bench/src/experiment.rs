//! The three experiments: samplers on kernel matrices, on synthetic
//! matrices with prescribed spectra, and error against `sigma_s(A_M)`.

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use nystromite::bounds::{
    lemma3_condition, observed_error, theorem1_assumptions, theorem2_bound, ErrorNorm,
    SpectralSummary, ThinSpectra,
};
use nystromite::data::{
    gaussian_blobs, gaussian_kernel, parse_libsvm, synthetic_matrix, Dataset, KernelWidth,
    SyntheticSpec, DEFAULT_DECAY_RATE,
};
use nystromite::matrix::{full_svd, partition, SvdResult};
use nystromite::nystrom::factorize;
use nystromite::sampling::{
    default_column_count, icd_sample, kmeans_sample, linear_time_svd, random_sample,
    select_from_thin, thin_from_svd, trial_seed, ColumnWeights, FrontEnd, SampleSelection,
    SamplerMethod, ThinDecomposition,
};
use nystromite::{DenseMatrix, IndexSet};
use rayon::prelude::*;

use crate::output::ResultRow;
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Kernel,
    Synthetic,
    Singularity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Kernel => "kernel",
            ExperimentKind::Synthetic => "synthetic",
            ExperimentKind::Singularity => "singularity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    Random,
    LinearTime,
    Algorithm1,
    Icd,
    Kmeans,
    /// Optimal rank-`s` truncation, the reference every sampler is held to.
    Svd,
}

impl Sampler {
    pub const ALL: [Sampler; 6] = [
        Sampler::Random,
        Sampler::LinearTime,
        Sampler::Algorithm1,
        Sampler::Icd,
        Sampler::Kmeans,
        Sampler::Svd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sampler::Random => "random",
            Sampler::LinearTime => "lineartime",
            Sampler::Algorithm1 => "algorithm1",
            Sampler::Icd => "icd",
            Sampler::Kmeans => "kmeans",
            Sampler::Svd => "svd",
        }
    }
}

impl FromStr for Sampler {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sampler::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| BenchError::Spec(format!("unknown sampler {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Libsvm(PathBuf),
    Blobs { n: usize, d: usize, k: usize },
}

impl MatrixSource {
    pub fn slug(&self) -> String {
        match self {
            MatrixSource::Libsvm(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
            MatrixSource::Blobs { n, d, k } => format!("blobs-{n}-{d}-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Data for the kernel experiment.
    pub source: MatrixSource,
    pub samplers: Vec<Sampler>,
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub norm: ErrorNorm,
    /// Thin front end used by the algorithm1 sampler.
    pub front_end: FrontEnd,
    /// Side of the synthetic and singularity matrices.
    pub size: usize,
    pub decay_rate: f64,
    /// Truncates the synthetic spectrum to this many non-zero values.
    pub rank: Option<usize>,
    pub kernel_width: KernelWidth,
}

impl ExperimentSpec {
    /// Defaults for `kind`, mirroring the experimental setup of each study.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let ratios = ratio_range(0.01, 0.10, 0.01);
        let base = ExperimentSpec {
            kind,
            source: MatrixSource::Blobs { n: 300, d: 5, k: 3 },
            samplers: Sampler::ALL.to_vec(),
            ratios,
            trials: 20,
            seed: 0,
            norm: ErrorNorm::Frobenius,
            front_end: FrontEnd::ExactSvd,
            size: 500,
            decay_rate: DEFAULT_DECAY_RATE,
            rank: None,
            kernel_width: KernelWidth::DistanceToMean,
        };
        match kind {
            ExperimentKind::Kernel => base,
            ExperimentKind::Synthetic => ExperimentSpec {
                samplers: vec![Sampler::Random, Sampler::LinearTime, Sampler::Algorithm1, Sampler::Svd],
                norm: ErrorNorm::Spectral,
                ..base
            },
            ExperimentKind::Singularity => ExperimentSpec {
                samplers: vec![Sampler::Random, Sampler::Algorithm1],
                ratios: vec![0.05],
                trials: 100,
                norm: ErrorNorm::Spectral,
                front_end: FrontEnd::LinearTimeSvd,
                size: 300,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.samplers.is_empty() {
            return Err(BenchError::Spec("no samplers requested".into()));
        }
        if self.ratios.is_empty() || self.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(BenchError::Spec(format!("ratios must lie in (0, 1]: {:?}", self.ratios)));
        }
        if self.trials == 0 {
            return Err(BenchError::Spec("at least one trial is required".into()));
        }
        Ok(())
    }

    /// File stem `{experiment}-{slug}` without any timestamp.
    pub fn file_stem(&self) -> String {
        match self.kind {
            ExperimentKind::Kernel => format!("kernel-{}", self.source.slug()),
            ExperimentKind::Synthetic => format!("synthetic-n{}{}", self.size, self.rank_suffix()),
            ExperimentKind::Singularity => format!("singularity-n{}{}", self.size, self.rank_suffix()),
        }
    }

    fn rank_suffix(&self) -> String {
        self.rank.map(|r| format!("-r{r}")).unwrap_or_default()
    }
}

/// `start, start + step, ..., stop` (inclusive, rounded to 1e-9).
pub fn ratio_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

/// Parses `a:b:step` or a comma-separated list.
pub fn parse_ratios(text: &str) -> Result<Vec<f64>, BenchError> {
    let bad = || BenchError::Spec(format!("cannot parse ratios {text:?}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        if !v[2].is_finite() || v[2] <= 0.0 || v[1] < v[0] {
            return Err(bad());
        }
        return Ok(ratio_range(v[0], v[1], v[2]));
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

/// `s = round(ratio * min(m, n))`, at least 1.
pub fn sample_size(ratio: f64, m: usize, n: usize) -> usize {
    ((ratio * m.min(n) as f64).round() as usize).clamp(1, m.min(n))
}

/// Everything a cell needs about its matrix, computed once.
pub struct Workload<'a> {
    pub id: String,
    pub matrix: &'a DenseMatrix,
    pub svd: SvdResult,
    pub points: Option<&'a DenseMatrix>,
    /// Random samples take `J = I`.
    pub symmetric: bool,
}

impl<'a> Workload<'a> {
    pub fn new(
        id: impl Into<String>,
        matrix: &'a DenseMatrix,
        points: Option<&'a DenseMatrix>,
        symmetric: bool,
    ) -> Result<Self, BenchError> {
        Ok(Workload {
            id: id.into(),
            matrix,
            svd: full_svd(matrix)?,
            points,
            symmetric,
        })
    }
}

fn deterministic(sampler: Sampler, spec: &ExperimentSpec) -> bool {
    match sampler {
        Sampler::Svd | Sampler::Icd => true,
        Sampler::Algorithm1 => spec.front_end == FrontEnd::ExactSvd,
        _ => false,
    }
}

/// Runs every (ratio, sampler, trial) cell on one matrix. Deterministic
/// samplers get a single trial. Rows come back in cell order whatever the
/// thread schedule.
pub fn run_workload(work: &Workload<'_>, spec: &ExperimentSpec) -> Vec<ResultRow> {
    let mut cells = Vec::new();
    for &ratio in &spec.ratios {
        for &sampler in &spec.samplers {
            let trials = if deterministic(sampler, spec) { 1 } else { spec.trials };
            for trial in 0..trials {
                cells.push((ratio, sampler, trial));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(ratio, sampler, trial)| run_cell(work, spec, sampler, ratio, trial))
        .collect()
}

pub fn run_cell(
    work: &Workload<'_>,
    spec: &ExperimentSpec,
    sampler: Sampler,
    ratio: f64,
    trial: usize,
) -> ResultRow {
    let (m, n) = work.matrix.shape();
    let s = sample_size(ratio, m, n);
    let seed = trial_seed(spec.seed, trial);
    let mut row = ResultRow {
        experiment: work.id.clone(),
        sampler: sampler.name().into(),
        ratio,
        trial,
        error: None,
        sigma_s_am: None,
        bound: None,
        ms: 0.0,
        seed,
    };
    let start = Instant::now();
    let outcome = evaluate(work, spec, sampler, s, seed);
    row.ms = start.elapsed().as_secs_f64() * 1e3;
    if let Ok(eval) = outcome {
        row.error = eval.error;
        row.sigma_s_am = eval.sigma_s_am;
        row.bound = eval.bound;
    }
    row
}

#[derive(Debug, Default)]
struct Evaluation {
    error: Option<f64>,
    sigma_s_am: Option<f64>,
    bound: Option<f64>,
}

fn evaluate(
    work: &Workload<'_>,
    spec: &ExperimentSpec,
    sampler: Sampler,
    s: usize,
    seed: u64,
) -> Result<Evaluation, BenchError> {
    let m = work.matrix;
    match sampler {
        Sampler::Svd => Ok(Evaluation {
            error: Some(truncation_error(&work.svd.singular_values, s, spec.norm)),
            ..Default::default()
        }),
        Sampler::LinearTime => {
            let c = default_column_count(s, m.cols());
            let thin = linear_time_svd(m, s, c, ColumnWeights::SquaredNorm, seed)?;
            let error = match spec.norm {
                ErrorNorm::Spectral => thin.residual,
                ErrorNorm::Frobenius => (m.as_nalgebra() - thin.product().as_nalgebra()).norm(),
            };
            Ok(Evaluation {
                error: Some(error),
                ..Default::default()
            })
        }
        Sampler::Algorithm1 => {
            let thin = front_end(work, spec.front_end, s, seed)?;
            let sel = select_from_thin(m, &thin, None)?;
            if !sel.is_ok() {
                return Ok(Evaluation {
                    sigma_s_am: Some(sel.sigma_s_sample),
                    ..Default::default()
                });
            }
            nystrom_evaluation(work, spec, &sel)
        }
        Sampler::Random => {
            let (i, j) = random_sample(m.rows(), m.cols(), s, seed, work.symmetric)?;
            let sel = SampleSelection::from_indices(m, i, j, SamplerMethod::Random)?;
            nystrom_evaluation(work, spec, &sel)
        }
        Sampler::Icd => nystrom_evaluation(work, spec, &icd_sample(m, s, None)?),
        Sampler::Kmeans => {
            let pts = work
                .points
                .ok_or_else(|| BenchError::Spec("k-means needs data points".into()))?;
            let set = kmeans_sample(pts, s, 100, seed)?;
            let sel = SampleSelection::from_indices(m, set.clone(), set, SamplerMethod::Kmeans)?;
            nystrom_evaluation(work, spec, &sel)
        }
    }
}

fn front_end(
    work: &Workload<'_>,
    front: FrontEnd,
    s: usize,
    seed: u64,
) -> Result<ThinDecomposition, BenchError> {
    Ok(match front {
        FrontEnd::ExactSvd => thin_from_svd(&work.svd, s)?,
        FrontEnd::LinearTimeSvd => {
            let c = default_column_count(s, work.matrix.cols());
            linear_time_svd(work.matrix, s, c, ColumnWeights::SquaredNorm, seed)?
        }
    })
}

fn nystrom_evaluation(
    work: &Workload<'_>,
    spec: &ExperimentSpec,
    sel: &SampleSelection,
) -> Result<Evaluation, BenchError> {
    let p = partition(work.matrix, sel.rows.clone(), sel.cols.clone())?;
    let f = factorize(&p)?;
    let error = observed_error(work.matrix, &f, spec.norm)?;
    let bound = match spec.norm {
        ErrorNorm::Spectral => spectral_bound(work, &sel.rows, &sel.cols),
        ErrorNorm::Frobenius => None,
    };
    Ok(Evaluation {
        error: Some(error),
        sigma_s_am: Some(sel.sigma_s_sample),
        bound,
    })
}

/// The closed-form spectral bound for a sample, measured against the exact
/// rank-`s` SVD factors `G = U_s Sigma_s`, `S = V_s^T`; `None` unless every
/// assumption holds.
pub fn spectral_bound(work: &Workload<'_>, rows: &IndexSet, cols: &IndexSet) -> Option<f64> {
    let s = rows.len();
    let thin = thin_from_svd(&work.svd, s).ok()?;
    let spectra = thin_spectra(&thin, rows, cols).ok()?;
    let beta = (spectra.sigma_s_g / spectra.sigma_s_g_sample)
        .max(spectra.sigma_s_s / spectra.sigma_s_s_sample)
        .max(1.0);
    if !beta.is_finite() {
        return None;
    }
    let ss = SpectralSummary::measure(work.matrix, &work.svd, rows, cols, thin.residual, beta, 1.0)
        .ok()?;
    if !(theorem1_assumptions(&ss, &spectra).all() && lemma3_condition(&ss)) {
        return None;
    }
    theorem2_bound(&ss).ok().map(|b| b.value)
}

pub fn thin_spectra(
    thin: &ThinDecomposition,
    rows: &IndexSet,
    cols: &IndexSet,
) -> Result<ThinSpectra, BenchError> {
    use nystromite::matrix::singular_values;
    let s = thin.rank();
    let all: Vec<usize> = (0..s).collect();
    let last = |m: &DenseMatrix| -> Result<f64, BenchError> {
        Ok(singular_values(m)?.get(s - 1).copied().unwrap_or(0.0))
    };
    let sigma_s_g = last(&thin.g)?;
    let sigma_s_s = last(&thin.s)?;
    Ok(ThinSpectra {
        sigma_s_gs: thin.gamma * sigma_s_g * sigma_s_s,
        sigma_s_g,
        sigma_s_s,
        sigma_s_g_sample: last(&thin.g.select(rows.indices(), &all))?,
        sigma_s_s_sample: last(&thin.s.select(&all, cols.indices()))?,
    })
}

/// Error of the best rank-`s` approximation.
pub fn truncation_error(sigma: &[f64], s: usize, norm: ErrorNorm) -> f64 {
    let tail = sigma.get(s..).unwrap_or(&[]);
    match norm {
        ErrorNorm::Spectral => tail.first().copied().unwrap_or(0.0),
        ErrorNorm::Frobenius => tail.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

pub fn load_dataset(source: &MatrixSource, seed: u64) -> Result<Dataset, BenchError> {
    Ok(match source {
        MatrixSource::Libsvm(path) => parse_libsvm(path)?,
        MatrixSource::Blobs { n, d, k } => gaussian_blobs(*n, *d, *k, seed)?,
    })
}

pub fn run_kernel_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, BenchError> {
    spec.validate()?;
    let ds = load_dataset(&spec.source, spec.seed)?;
    let k = gaussian_kernel(&ds, spec.kernel_width)?;
    let work = Workload::new(spec.kind.name(), &k, Some(&ds.values), true)?;
    Ok(run_workload(&work, spec))
}

/// Both decay profiles on `size x size` matrices, experiment ids
/// `synthetic-linear` and `synthetic-exponential`.
pub fn run_synthetic_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, BenchError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (label, mspec) in [
        ("linear", SyntheticSpec::linear(spec.size, spec.seed)),
        ("exponential", SyntheticSpec::exponential(spec.size, spec.decay_rate, spec.seed)),
    ] {
        let m = synthetic_matrix(&SyntheticSpec { rank: spec.rank, ..mspec })?;
        let work = Workload::new(format!("synthetic-{label}"), &m, None, false)?;
        rows.extend(run_workload(&work, spec));
    }
    Ok(rows)
}

/// Error against `sigma_s(A_M)` on one exponential-decay matrix: `trials`
/// runs per sampler at each ratio.
pub fn run_singularity_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, BenchError> {
    spec.validate()?;
    let m = synthetic_matrix(&SyntheticSpec {
        rank: spec.rank,
        ..SyntheticSpec::exponential(spec.size, spec.decay_rate, spec.seed)
    })?;
    let work = Workload::new(spec.kind.name(), &m, None, false)?;
    let mut cells = Vec::new();
    for &ratio in &spec.ratios {
        for &sampler in &spec.samplers {
            for trial in 0..spec.trials {
                cells.push((ratio, sampler, trial));
            }
        }
    }
    Ok(cells
        .into_par_iter()
        .map(|(ratio, sampler, trial)| run_cell(&work, spec, sampler, ratio, trial))
        .collect())
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, BenchError> {
    match spec.kind {
        ExperimentKind::Kernel => run_kernel_experiment(spec),
        ExperimentKind::Synthetic => run_synthetic_experiment(spec),
        ExperimentKind::Singularity => run_singularity_experiment(spec),
    }
}
