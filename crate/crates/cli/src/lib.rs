//! File formats, configuration and commands of the `memimprint` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use error::{exit, CliError, CliResult};
