//! Command-line front end, file formats and parallel ensembles for
//! [`qtraj_core`].

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod parallel;

pub use error::{CliError, CliResult};
