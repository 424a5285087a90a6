use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error(transparent)]
    Lib(#[from] wedgespace::Error),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("self-test outside tolerance: {0}")]
    Tolerance(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(key: &str, msg: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            msg: msg.into(),
        }
    }

    /// 2 configuration, 3 inadmissible parameters, 4 numerical failure,
    /// 1 for I/O trouble.
    pub fn exit_code(&self) -> u8 {
        use wedgespace::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Lib(E::Config { .. } | E::Parse(_) | E::Json(_)) => 2,
            CliError::Lib(E::Inadmissible(_)) => 3,
            CliError::Lib(E::Io(_)) | CliError::Output { .. } => 1,
            CliError::Lib(_) | CliError::Tolerance(_) => 4,
        }
    }
}
