use thiserror::Error;

pub type Result<T> = std::result::Result<T, DassError>;

#[derive(Debug, Error)]
pub enum DassError {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for block length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid sampling pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("underdetermined system: {measurements} measurements for dimension {dimension}")]
    Underdetermined { measurements: usize, dimension: usize },

    #[error("ill-conditioned pattern [{pattern}]: selected rows do not span the model")]
    IllConditioned { pattern: String },

    #[error("model not ready: {absorbed} block(s) absorbed, at least {required} needed")]
    ModelNotReady { absorbed: usize, required: usize },

    #[error("basis columns are not orthonormal (deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("enumeration guard exceeded: C({n}, {m}) > {limit}; shrink the instance")]
    GuardExceeded { n: usize, m: usize, limit: u64 },

    #[error("target rmse {target} unreachable; best achieved {best}")]
    TargetUnreachable { target: f64, best: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
