//! Library half of the `kappa` command-line tool.

pub mod commands;
pub mod dataset;
pub mod error;

pub use error::{CliError, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};
