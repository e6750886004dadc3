use thiserror::Error;

/// Errors raised by constructions and checks in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("singular value decomposition did not converge")]
    SvdNonConvergence,

    #[error("linear map is not invertible (smallest singular value {0:.3e})")]
    NotInvertible(f64),

    #[error("matrix is not an isometry: residual {0:.3e}")]
    NotIsometry(f64),

    #[error("operator-Schmidt rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("operators cannot be chosen Hermitian for this decomposition")]
    NotHermitisable,

    #[error("operator does not lie in the Schmidt span: projection residual {0:.3e}")]
    OutsideSchmidtSpan(f64),

    #[error("decomposition carries no coefficient vectors")]
    MissingCoefficients,

    #[error("solver exceeded its iteration cap of {0}")]
    IterationCap(usize),

    #[error("condition {condition} does not hold: {detail}")]
    ConditionFailed { condition: char, detail: String },

    #[error("reconstruction residual {0:.3e} exceeds tolerance")]
    Reconstruction(f64),

    #[error("term {term}: response for effect {effect} is {value:.3e} (< 0)")]
    Positivity { term: usize, effect: usize, value: f64 },

    #[error("hidden variable model disagrees with Born statistics by {0:.3e}")]
    BornMismatch(f64),

    #[error("index out of range: {0}")]
    OutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument { field: field.to_string(), reason: reason.into() }
}
