//! Library surface of the pipeline CLI: configuration handling and the
//! five batch stages. The binary in `main.rs` is a thin argument-parsing
//! wrapper around these.

pub mod config;
pub mod stages;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("config field {field}: {message}")]
    Config { field: String, message: String },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::MissingFile(_) | CliError::Config { .. } => 2,
            CliError::Internal(_) => 1,
        }
    }
}
