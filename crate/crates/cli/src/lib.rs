//! Command-line front end for `spps-core`: scenario files, measured-data
//! ingestion, the five batch workflows and their CSV, text and SVG output.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
pub mod emit;
pub mod error;
pub mod manifest;
pub mod svg;

pub use cli::Cli;
pub use commands::{run, Outcome};
pub use error::{CliError, Result};
