//! Experiment harness for the Nyström samplers: runs sampler comparisons on
//! kernel and synthetic matrices and writes CSV tables and plot specs.

pub mod experiment;
pub mod output;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] nystromite::Error),
    #[error("invalid experiment: {0}")]
    Spec(String),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
