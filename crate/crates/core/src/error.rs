use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("angular sampling too coarse: {n_angles} directions cannot resolve truncation {order}")]
    Aliasing { n_angles: usize, order: usize },

    #[error("truncation mismatch: expected {expected} entries, found {found}")]
    Truncation { expected: usize, found: usize },

    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Wraps a lower-level failure with the label of the pipeline stage.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage { stage, message: other.to_string() },
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { .. } => 3,
            _ => 2,
        }
    }
}
