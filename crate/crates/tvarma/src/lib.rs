//! File formats, parallel Monte Carlo and the command-line front end for
//! `tvarma-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod parallel;
pub mod spec;
pub mod verify;

pub use error::{CliError, Result};
