use std::path::Path;

use fpt_core::error::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A configuration value violates the schema or a type invariant.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// Valid inputs on which a numerical method cannot run as configured.
    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Schema { .. } => 2,
            Self::Numerical(_) => 3,
            Self::Io { .. } | Self::ChecksFailed { .. } => 1,
        }
    }
}

/// Attributes a core error to the config section it came from.
pub fn core_error(section: &str, err: Error) -> CliError {
    match err {
        Error::InvalidParameter { field, reason } => CliError::Schema {
            path: if section.is_empty() {
                field.to_owned()
            } else {
                format!("{section}.{field}")
            },
            message: reason,
        },
        Error::Config(message) => CliError::Numerical(message),
        other => CliError::Schema {
            path: if section.is_empty() {
                "config"
            } else {
                section
            }
            .to_owned(),
            message: other.to_string(),
        },
    }
}
