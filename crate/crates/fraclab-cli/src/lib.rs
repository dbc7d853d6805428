//! Command-line front end and verification suite for the fractional
//! ground-state toolkit.

pub mod commands;
pub mod output;
pub mod verify;

pub use commands::{run, Cli, CliError};
