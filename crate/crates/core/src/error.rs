use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Variants are split into data problems (bad input files, invalid panels or
/// dummy specifications) and numerical problems (singular moment matrices,
/// insufficient degrees of freedom, non-convergence). [`Error::is_data_error`]
/// exposes that split for callers that map errors onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("missing column `{0}` in input")]
    MissingColumn(String),

    #[error("non-contiguous or duplicated dates: {0}")]
    NonContiguousDates(String),

    #[error("non-positive value {value} for region {region} at {date}")]
    NonPositive {
        value: f64,
        region: String,
        date: String,
    },

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("dummy specification: {0}")]
    InvalidDummy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient observations: need more than {needed}, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("restriction: {0}")]
    Restriction(String),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("rank selection: {0}")]
    RankSelection(String),
}

impl Error {
    /// True for failures caused by the input data or its description rather
    /// than by the numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::MissingColumn(_)
                | Error::NonContiguousDates(_)
                | Error::NonPositive { .. }
                | Error::InvalidPanel(_)
                | Error::InvalidDummy(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
