//! Command-line front end: config files, subcommands and SVG plots.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use error::{CliError, Result};
