use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian: |h[{row},{col}] - conj(h[{col},{row}])| = {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConvergence { sweeps: usize, off_norm: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("size cap exceeded: {what} = {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no consistent solution within enumeration caps")]
    NoConsistentSolution,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
