//! Command-line front end: argument and config-file resolution, the `run`,
//! `sweep` and `penalty-curve` commands, and the CSV/JSON writers.

pub mod app;
pub mod config;
pub mod error;
pub mod output;

pub use app::{execute, Cli, Command};
pub use config::{ExperimentArgs, Settings};
pub use error::{CliError, Result};
