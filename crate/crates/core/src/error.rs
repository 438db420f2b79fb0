use thiserror::Error;

/// Errors produced across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("duplicate rating for user `{user}` on item `{item}`")]
    Duplicate { user: String, item: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("user `{0}` has no ratings, mean is undefined")]
    UndefinedMean(String),

    #[error("prediction undefined for user `{0}`: {1}")]
    UndefinedPrediction(String, String),

    #[error("I - AW singular: {0}")]
    Singular(String),

    #[error("iteration did not converge within {max_iter} steps (residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("no initial opinion for user `{user}` on item `{item}`")]
    Assembly { user: String, item: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: 1 usage/config, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 1,
            Error::Singular(_) | Error::NonConvergence { .. } => 3,
            _ => 2,
        }
    }
}
