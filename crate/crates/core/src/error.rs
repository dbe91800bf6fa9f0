use thiserror::Error;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision failure: {0}")]
    Precision(String),

    #[error("photon number {total} exceeds the oracle capacity {cap}")]
    Capacity { total: usize, cap: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = FockError> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FockError::Domain(msg.into()))
}
