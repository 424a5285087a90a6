use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("sampling failed at node (s index {i_s}, phi index {i_phi}): {msg}")]
    Sampling { i_s: usize, i_phi: usize, msg: String },

    #[error("integration failed at node (s index {i_s}, phi index {i_phi}): non-finite summand")]
    Integration { i_s: usize, i_phi: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("singular resolvent at lambda = {re} + {im}i (distance {dist:e} to eigenvalue n = {n})")]
    Singularity { re: f64, im: f64, n: usize, dist: f64 },

    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),

    #[error("probe failed: {0}")]
    Probe(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: &str, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}
