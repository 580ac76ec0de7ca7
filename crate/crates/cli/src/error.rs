use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("malformed config {path}: {source}")]
    ParseConfig { path: PathBuf, source: serde_json::Error },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invariant-measure index must satisfy q < p; got p = {p}, q = {q}")]
    IndexHypothesis { p: f64, q: f64 },

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Solver(hermspde::Error),

    #[error("invariant violated: {0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::ReadConfig { .. } | Self::ParseConfig { .. } | Self::Config(_) | Self::IndexHypothesis { .. } => 2,
            Self::Output { .. } => 2,
            Self::Solver(hermspde::Error::BlowUp { .. }) => 4,
            Self::Solver(hermspde::Error::IndexOrder { .. }) => 2,
            Self::Solver(_) => 3,
            Self::Violation(_) => 5,
        }
    }
}

impl From<hermspde::Error> for CliError {
    fn from(e: hermspde::Error) -> Self {
        match e {
            hermspde::Error::IndexOrder { p, q } => Self::IndexHypothesis { p, q },
            other => Self::Solver(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
