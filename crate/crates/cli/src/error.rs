use coincidia_core::Error as CoreError;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CERTIFICATE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    /// A checked hypothesis, certificate or oracle comparison failed.
    #[error("{0}")]
    Hypothesis(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Hypothesis(_) => EXIT_CERTIFICATE,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::Domain(_) => EXIT_CONFIG,
                CoreError::Certificate { .. } => EXIT_CERTIFICATE,
                CoreError::Bracket { .. }
                | CoreError::Range(_)
                | CoreError::Numeric(_)
                | CoreError::InnerConvergence { .. } => EXIT_NUMERIC,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Hypothesis(_) => "hypothesis",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                CoreError::Config(_) => "config",
                CoreError::Domain(_) => "domain",
                CoreError::Bracket { .. } => "bracket",
                CoreError::Range(_) => "range",
                CoreError::Numeric(_) => "numeric",
                CoreError::InnerConvergence { .. } => "inner_convergence",
                CoreError::Certificate { .. } => "certificate",
            },
        }
    }

    pub fn block(&self) -> ErrorBlock {
        ErrorBlock {
            kind: self.kind().to_string(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

/// The `error` member of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBlock {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}
