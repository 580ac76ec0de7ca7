//! Batch front-end for `hermspde`: experiment configs, one command per
//! analysis, CSV and JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use config::{ExperimentConfig, LoadedConfig, Overrides};
pub use error::{CliError, CliResult};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "HERMSPDE_THREADS";

/// Sizes the global rayon pool from `HERMSPDE_THREADS`, if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))
}
