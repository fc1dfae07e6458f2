use thiserror::Error;

/// Driver failures, each with a fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unknown study, missing or malformed configuration field.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid system or potential parameters, or a failed numerical precondition.
    #[error("{0}")]
    Compute(#[from] thermolab::Error),

    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("CSV error on {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io { .. } | CliError::Csv { .. } => 4,
        }
    }
}
