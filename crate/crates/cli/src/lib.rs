//! Command-line orchestration for the compressed-sensing certificate toolkit:
//! modality presets, experiment configs, reproducible artifacts.

pub mod cache;
pub mod commands;
pub mod config;
mod error;
pub mod experiment;
pub mod matrix_io;
pub mod presets;

pub use error::{CliError, Result};
