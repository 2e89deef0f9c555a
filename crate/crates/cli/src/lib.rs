//! File formats, reports and subcommands for the `belldist` binary.

pub mod canonical;
pub mod certificate;
pub mod commands;
mod error;
pub mod instances;
pub mod opspec;
pub mod report;
pub mod statefile;

pub use error::{CliError, EXIT_FAILED, EXIT_INPUT, EXIT_OK};
pub use report::{Report, Status};
