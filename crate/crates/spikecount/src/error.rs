//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the library API.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid population spectrum specification.
    #[error("invalid spike specification: {0}")]
    InvalidSpikes(String),

    /// Argument outside the mathematical domain of a spectral function.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    /// Eigenvalue sequence too short for the requested operation.
    #[error("spectrum too short: need at least {needed} eigenvalues, got {got}")]
    ShortSpectrum { needed: usize, got: usize },

    /// Sample size below the minimum the operation supports.
    #[error("sample size too small: {what} requires {detail}")]
    SampleSize { what: &'static str, detail: String },

    /// Quantile request outside the coverage of the distribution table.
    #[error("quantile outside table coverage: gamma = {gamma} not in [{min_gamma}, {max_gamma}]")]
    TableRange {
        gamma: f64,
        min_gamma: f64,
        max_gamma: f64,
    },

    /// Malformed distribution table file.
    #[error("bad table data: {0}")]
    BadTable(String),

    /// Input data matrix contains an unusable cell.
    #[error("bad data cell at row {row}, column {col}: {detail}")]
    BadCell {
        row: usize,
        col: usize,
        detail: String,
    },

    /// Input data matrix is structurally unusable.
    #[error("bad data matrix: {0}")]
    BadMatrix(String),

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Numerical routine failed to produce a usable result.
    #[error("numerical failure in {what}: {detail}")]
    Numerical { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
