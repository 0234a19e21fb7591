use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not unimodular (det = {det})")]
    NotUnimodular { det: f64 },

    #[error("degenerate matrix (det = {det})")]
    Degenerate { det: f64 },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
