use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] fdmimo_core::Error),
}

impl CliError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn invalid_owned(key: String, reason: String) -> Self {
        CliError::Invalid { key, reason }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
