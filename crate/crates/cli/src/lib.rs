//! Command-line pipelines over `g4v-core`: single-spin coherence decay,
//! Bell-pair hashing-bound decay, link-length sweeps and standalone fits.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration, unreadable input, unwritable output.
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<g4v_core::Error> for CliError {
    fn from(e: g4v_core::Error) -> Self {
        use g4v_core::Error as E;
        match e {
            E::Domain(_) | E::Unsupported(_) | E::InvalidShape(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

pub use commands::{run, Command, FitOptions};
