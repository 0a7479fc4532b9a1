//! Command-line front end for `pphm-core`: file formats, configuration,
//! report shapes and the command bodies behind the `pphm` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, Result};
