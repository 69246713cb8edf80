//! Command-line harness: configuration table, commands and output handling.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{ConfigTable, RunConfig};
pub use error::{CliError, Result};
