//! Nystrom compression of general (non-symmetric, rectangular) matrices.
//!
//! A matrix is split around an `s x s` sample block `A` of rows `I` and
//! columns `J`,
//!
//! ```text
//!     M = [A B]      M_hat = [A; F] A^+ [A B]
//!         [F C]
//! ```
//!
//! and only `A`, `B` and `F` are kept. [`sampling`] chooses `I` and `J`,
//! [`nystrom`] builds the approximation and its canonical SVD/EVD forms,
//! [`bounds`] evaluates the error guarantees and [`data`] supplies kernel
//! and synthetic inputs.
//!
//! ```
//! use nystromite::data::{synthetic_matrix, SyntheticSpec};
//! use nystromite::matrix::partition;
//! use nystromite::nystrom::{factorize, svd_general};
//! use nystromite::sampling::{select_sample, SamplerConfig, SamplerMethod};
//!
//! let m = synthetic_matrix(&SyntheticSpec::exponential(300, 0.5, 7))?;
//! let sel = select_sample(&m, 15, &SamplerConfig::new(SamplerMethod::Algorithm1, 7))?;
//! assert!(sel.is_ok());
//! let p = partition(&m, sel.rows, sel.cols)?;
//! let approx = factorize(&p)?.reconstruct();
//! let svd = svd_general(&p)?;
//! assert_eq!(svd.rank(), 15);
//! assert_eq!(approx.shape(), (300, 300));
//! # Ok::<(), nystromite::Error>(())
//! ```

pub mod bounds;
pub mod data;
pub mod error;
pub mod matrix;
pub mod nystrom;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use matrix::{BlockPartition, DenseMatrix, IndexSet};
