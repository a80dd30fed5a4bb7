use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("instrument arm {arm} has no observations")]
    ZeroArm { arm: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("{what} has size {size}, above the cap of {cap}")]
    SizeOverflow {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDims(_) => "invalid_dims",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ZeroArm { .. } => "zero_arm",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::SizeOverflow { .. } => "size_overflow",
            Error::LpFailure(_) => "lp_failure",
            Error::DomainError(_) => "domain_error",
            Error::NoConvergence(_) => "no_convergence",
            Error::Parse(_) => "parse_error",
            Error::Io(_) => "io_error",
            Error::Json(_) => "json_error",
            Error::Csv(_) => "csv_error",
        }
    }
}
