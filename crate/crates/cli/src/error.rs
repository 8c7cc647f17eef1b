use std::fmt;

use crate::config::Diagnostic;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration is invalid:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error(transparent)]
    Core(#[from] cs_certify_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
    #[error("experiment stopped after writing partial artifacts: {0}")]
    Partial(String),
}

impl CliError {
    /// 2 for configuration and usage errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_string(), source }
    }
}

fn format_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

pub type Result<T> = std::result::Result<T, CliError>;
