use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical domain error: {0}")]
    Numerical(String),

    #[error("frequency grid does not cover {0}")]
    GridCoverage(String),

    #[error("time aliasing: {fraction:.3e} of the impulse-response energy falls in the guard window")]
    TimeAliasing { fraction: f64 },

    #[error("channel memory of {symbols} symbols exceeds the {limit}-symbol analysis window")]
    ChannelTooLong { symbols: usize, limit: usize },

    #[error("mode {mode} is degenerate: error variance {variance} is not below 1")]
    DegenerateMode { mode: usize, variance: f64 },

    #[error("LMS diverged with step size {mu:e}")]
    Divergence { mu: f64 },

    #[error("too few symbols: {0}")]
    TooFewSymbols(String),

    #[error("memory limit: {0}")]
    MemoryLimit(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("container format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
