use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Fock dimension {0}: every mode needs at least 2 levels")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coefficient singularity at t = {time}")]
    Singular { time: f64 },

    #[error("{what} = {value:e} exceeds tolerance {tol:e} at t = {time}")]
    InvariantViolation {
        what: &'static str,
        value: f64,
        tol: f64,
        time: f64,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{aborted} of {total} trajectories aborted (limit 1%)")]
    TooManyAborted { aborted: usize, total: usize },

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("eigen-decomposition failed to produce finite eigenvalues")]
    Eigen,
}
