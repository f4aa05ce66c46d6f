use thiserror::Error;

/// Errors raised by estimation, evaluation and training.
///
/// Class labels carried by variants are 1-based, matching the labels found in
/// datasets and CSV files.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("SingularCovariance: covariance matrix is not positive definite")]
    SingularCovariance,
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("EmptyClass: class {0} has no observations")]
    EmptyClass(usize),
    #[error("InsufficientData: class {class} has {got} observations, need at least {needed}")]
    InsufficientData {
        class: usize,
        needed: usize,
        got: usize,
    },
    #[error("ZeroVariance: all values of class {0} are identical")]
    ZeroVariance(usize),
    #[error("ZeroWidth: class {0} has min = max")]
    ZeroWidth(usize),
    #[error("UndefinedPosterior: every class density vanishes at this point")]
    UndefinedPosterior,
    #[error("InvalidOverlap: uniform classes must satisfy a < b < c < d, got [{a}, {c}] and [{b}, {d}]")]
    InvalidOverlap { a: f64, b: f64, c: f64, d: f64 },
    #[error("NonFiniteLikelihood: training diverged at iteration {0}")]
    NonFiniteLikelihood(usize),
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("InvalidDataset: {0}")]
    InvalidDataset(String),
}

impl Error {
    /// Short variant name, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularCovariance => "SingularCovariance",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::EmptyClass(_) => "EmptyClass",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::ZeroVariance(_) => "ZeroVariance",
            Error::ZeroWidth(_) => "ZeroWidth",
            Error::UndefinedPosterior => "UndefinedPosterior",
            Error::InvalidOverlap { .. } => "InvalidOverlap",
            Error::NonFiniteLikelihood(_) => "NonFiniteLikelihood",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::InvalidDataset(_) => "InvalidDataset",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
