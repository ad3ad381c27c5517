//! Datasets, Gaussian kernel matrices and synthetic test matrices.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng;

/// Environment variable naming a directory of LIBSVM dataset files.
pub const DATA_DIR_ENV: &str = "NYSTROMITE_DATA_DIR";

/// `n` points of dimension `d`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: DenseMatrix,
    pub labels: Option<Vec<f64>>,
    pub name: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }
}

/// The dataset directory from [`DATA_DIR_ENV`], if set.
pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// `name` resolved inside [`data_dir`], if that file exists.
pub fn find_dataset(name: &str) -> Option<PathBuf> {
    data_dir().map(|d| d.join(name)).filter(|p| p.is_file())
}

pub fn parse_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_libsvm_str(&text, &name, None)
}

/// Parses sparse `label idx:val ...` lines with 1-based indices. Missing
/// features are zero. The dimension is the largest index seen unless `dim`
/// is given. Blank lines and `#` comments are skipped.
pub fn parse_libsvm_str(text: &str, name: &str, dim: Option<usize>) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: lineno + 1,
            message,
        };
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("bad label {label_tok:?}")))?;
        let mut feats = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad feature value {val:?}")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value {val}")));
            }
            max_index = max_index.max(idx);
            feats.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(feats);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data lines".into(),
        });
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(Error::InvalidInput(format!(
                "dimension {d} is below the largest feature index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    let mut values = DMatrix::zeros(rows.len(), d);
    for (i, feats) in rows.iter().enumerate() {
        for &(j, v) in feats {
            values[(i, j)] = v;
        }
    }
    Ok(Dataset {
        values: DenseMatrix::new(values)?,
        labels: Some(labels),
        name: name.to_string(),
    })
}

/// Sparse LIBSVM text; zero features are omitted, labels default to 0.
pub fn format_libsvm(ds: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..ds.len() {
        let label = ds.labels.as_ref().map_or(0.0, |l| l[i]);
        write!(out, "{label}").expect("string write");
        for j in 0..ds.dim() {
            let v = ds.values.get(i, j);
            if v != 0.0 {
                write!(out, " {}:{v:e}", j + 1).expect("string write");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_libsvm(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_libsvm(ds))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelWidth {
    /// `(1/n) sum_i ||x_i - mean||^2`.
    #[default]
    DistanceToMean,
    /// Mean of `||x_i - x_j||^2` over unordered pairs `i < j`.
    MeanPairwise,
}

/// Width `eps` of the Gaussian kernel for `ds`.
pub fn kernel_width(ds: &Dataset, width: KernelWidth) -> Result<f64> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::DegenerateDataset(format!("{n} points")));
    }
    let x = ds.values.as_nalgebra();
    let mean = x.row_mean();
    let to_mean: f64 = (0..n).map(|i| (x.row(i) - &mean).norm_squared()).sum::<f64>() / n as f64;
    let eps = match width {
        KernelWidth::DistanceToMean => to_mean,
        // sum_{i<j} ||x_i - x_j||^2 = n sum_i ||x_i - mean||^2
        KernelWidth::MeanPairwise => to_mean * n as f64 * n as f64 / (n * (n - 1) / 2) as f64,
    };
    if !(eps > 0.0) {
        return Err(Error::DegenerateDataset("all points coincide".into()));
    }
    Ok(eps)
}

/// `K[i, j] = exp(-||x_i - x_j||^2 / eps)`, each unordered pair computed
/// once so the result is exactly symmetric.
pub fn gaussian_kernel(ds: &Dataset, width: KernelWidth) -> Result<DenseMatrix> {
    let eps = kernel_width(ds, width)?;
    let n = ds.len();
    let xt = ds.values.as_nalgebra().transpose();
    let mut k = DMatrix::from_element(n, n, 1.0);
    for j in 0..n {
        for i in 0..j {
            let d2 = (xt.column(i) - xt.column(j)).norm_squared();
            let v = (-d2 / eps).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    DenseMatrix::new(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay {
    /// `L_ii = 1 - (i - 1) / n`.
    Linear,
    /// `L_ii = rate^(i - 1)`, `rate` in `(0, 1)`.
    Exponential { rate: f64 },
}

pub const DEFAULT_DECAY_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub decay: Decay,
    /// Keep only the first `rank` diagonal entries of `L`.
    pub rank: Option<usize>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn exponential(n: usize, rate: f64, seed: u64) -> Self {
        SyntheticSpec {
            n,
            decay: Decay::Exponential { rate },
            rank: None,
            seed,
        }
    }

    pub fn linear(n: usize, seed: u64) -> Self {
        SyntheticSpec {
            n,
            decay: Decay::Linear,
            rank: None,
            seed,
        }
    }

    /// The diagonal of `L`, non-increasing.
    pub fn spectrum(&self) -> Vec<f64> {
        let keep = self.rank.unwrap_or(self.n);
        (0..self.n)
            .map(|i| {
                if i >= keep {
                    return 0.0;
                }
                match self.decay {
                    Decay::Linear => 1.0 - i as f64 / self.n as f64,
                    Decay::Exponential { rate } => rate.powi(i as i32),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("n = {} < 2", self.n)));
        }
        if let Decay::Exponential { rate } = self.decay {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(Error::InvalidInput(format!("decay rate {rate} outside (0, 1)")));
            }
        }
        if self.rank.is_some_and(|r| r == 0 || r > self.n) {
            return Err(Error::InvalidInput("rank outside 1..=n".into()));
        }
        Ok(())
    }
}

/// `U L V^T` with independent Haar-distributed orthogonal `U`, `V`.
pub fn synthetic_matrix(spec: &SyntheticSpec) -> Result<DenseMatrix> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let u = random_orthogonal(spec.n, &mut rng);
    let v = random_orthogonal(spec.n, &mut rng);
    let mut ul = u;
    for (j, l) in spec.spectrum().into_iter().enumerate() {
        ul.column_mut(j).scale_mut(l);
    }
    DenseMatrix::new(ul * v.transpose())
}

/// Q factor of a standard normal matrix, columns signed so that `R` has a
/// positive diagonal.
pub fn random_orthogonal(n: usize, rng: &mut rng::Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Minimum distance between blob centers.
pub const BLOB_SEPARATION: f64 = 6.0;

/// `n` points in `k` equal-size unit-variance Gaussian clusters in `d`
/// dimensions (the first `n mod k` clusters get one extra point). Labels are
/// cluster ids; points are stored cluster by cluster.
pub fn gaussian_blobs(n: usize, d: usize, k: usize, seed: u64) -> Result<Dataset> {
    if k == 0 || k > n || d == 0 {
        return Err(Error::InvalidInput(format!(
            "blobs need 1 <= k <= n and d >= 1, got n={n} d={d} k={k}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let centers = blob_centers(k, d, &mut rng);
    let mut values = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, center) in centers.iter().enumerate() {
        let size = n / k + usize::from(c < n % k);
        for _ in 0..size {
            for j in 0..d {
                values[(row, j)] = center[j] + rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(c as f64);
            row += 1;
        }
    }
    Ok(Dataset {
        values: DenseMatrix::new(values)?,
        labels: Some(labels),
        name: format!("blobs-{n}-{d}-{k}"),
    })
}

/// Rejection sampling in a cube whose side grows whenever a candidate keeps
/// landing too close to the existing centers.
fn blob_centers(k: usize, d: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let mut side = 2.0 * BLOB_SEPARATION * (k as f64).powf(1.0 / d as f64);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut misses = 0;
    while centers.len() < k {
        let cand: Vec<f64> = (0..d).map(|_| rng.random_range(-side..side)).collect();
        let clear = centers.iter().all(|c| {
            c.iter().zip(&cand).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                >= BLOB_SEPARATION * BLOB_SEPARATION
        });
        if clear {
            centers.push(cand);
            misses = 0;
        } else {
            misses += 1;
            if misses == 100 {
                side *= 1.5;
                misses = 0;
            }
        }
    }
    centers
}
