//! Command-line front end: CSV ingestion, the `explain`, `direction`, `path`,
//! `simulate` and `weights` commands, and JSON / CSV / SVG output.

pub mod args;
pub mod commands;
pub mod document;
pub mod error;
pub mod input;
pub mod svg;

pub use commands::{run, Outcome};
pub use error::{CliError, Result};
