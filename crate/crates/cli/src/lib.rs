//! Config-driven runner for the tsbench evaluation pipeline.
//!
//! The five verbs (`synth`, `build`, `characterize`, `run`, `report`) are
//! exposed as functions in [`commands`] so they can be driven from tests
//! and scripts as well as from the `tsbench` binary.

pub mod archive;
pub mod commands;
pub mod config;
mod error;
pub mod pipeline;

pub use commands::{cmd_build, cmd_characterize, cmd_report, cmd_run, cmd_synth, load_config, RunArchive};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
