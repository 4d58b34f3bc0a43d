//! Command-line front end for the `csdmd` library: data generation, the DMD
//! pathways, comparison and artifact export.

pub mod commands;
pub mod io;

pub use commands::{run, Cli};
