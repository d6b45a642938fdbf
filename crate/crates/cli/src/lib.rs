//! Command-line driver: configuration, commands and report files.

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod log;

pub use args::Cli;
pub use commands::{run, Outcome};
pub use error::{CliError, CliResult};
