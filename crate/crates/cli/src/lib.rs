//! Workflow layer over `magnon-core`: run configuration, manifests, the
//! backend pipeline and the `magnon` subcommands.
//!
//! Output files (CSV and JSON) each carry the hash of the run manifest that
//! produced them; see [`output`] for the stamping format.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod pipeline;

pub use config::{Backend, Overrides, RunConfig};
pub use error::{CliError, CliResult};
