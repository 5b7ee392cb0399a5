use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sparseness is undefined for the all-zero vector")]
    UndefinedSparseness,

    #[error("sparseness needs at least two taps (N = sqrt(N) for N = 1)")]
    SingleTapSparseness,

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("estimator diverged at iteration {iteration}")]
    Divergence { iteration: u64 },

    #[error("every run diverged for algorithm `{label}`")]
    AllRunsDiverged { label: String },

    #[error("trace too short: need at least {min} values, got {len}")]
    TraceTooShort { min: usize, len: usize },

    #[error("unknown sweep parameter `{0}` (expected phi, K or snr_db)")]
    UnknownSweepParameter(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
