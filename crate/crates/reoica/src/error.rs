//! Error types shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: unknown source kind, bad dimensions, empty
    /// seed list, unrecognized sweep key, and similar pre-run failures.
    #[error("configuration error: {0}")]
    Config(String),

    /// A signal has zero (or non-finite) variance and cannot be standardized.
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Operation called on a component in the wrong mode.
    #[error("mode error: {0}")]
    Mode(String),

    /// Numerical failure: eigensolver breakdown, rank deficiency,
    /// non-finite values produced mid-run.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A whitening basis (or other derived state) was requested before it
    /// has been computed.
    #[error("not ready: {0}")]
    NotReady(String),

    /// Non-finite data was fed to a streaming update.
    #[error("data error: {0}")]
    Data(String),

    /// A metric is undefined for the given inputs (e.g. zero target).
    #[error("metric error: {0}")]
    Metric(String),

    /// Per-seed rows could not be aggregated (mismatched grouping keys).
    #[error("aggregation error: {0}")]
    Aggregation(String),

    /// Filesystem failure while writing experiment outputs.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Tag an error with the pipeline step at which it occurred.
    pub fn at_step(self, step: usize) -> Error {
        match self {
            Error::Numerical(msg) => Error::Numerical(format!("step {step}: {msg}")),
            Error::Data(msg) => Error::Data(format!("step {step}: {msg}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
