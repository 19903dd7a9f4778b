use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ancilla space: {0}")]
    InvalidSpace(String),

    #[error("size guard: {what} = {value} exceeds the limit {limit}")]
    SizeGuard {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("input state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("generator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("symbol `{symbol}` cannot be evaluated on a {space} space")]
    Symbol { symbol: String, space: &'static str },

    #[error("qubit label {0} is not part of the data register")]
    UnknownQubit(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("flatness system is ill-conditioned (condition number {0:.3e}); use a smaller flatness order")]
    IllConditioned(f64),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("malformed document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
