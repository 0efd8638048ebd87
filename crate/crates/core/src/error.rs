use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("coordinate {0} is contained in no set")]
    EmptyLocalView(u32),

    #[error("closed form not applicable: {0}")]
    FormulaNotApplicable(String),

    #[error("eigensolver did not converge (residual {residual:e})")]
    NumericFailure { residual: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("random generation gave up after {0} attempts")]
    RetryExhausted(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
