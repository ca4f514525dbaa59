//! Batch harness around `speckle-core`: dataset generation, training,
//! evaluation, sweeps and frame rendering.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod pipeline;

pub use error::{CliError, CliResult};
