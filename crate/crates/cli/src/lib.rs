//! Batch entry points: dataset generation, simulated studies, model scoring,
//! density summaries and the HTTP server. `main.rs` is a thin clap wrapper.

pub mod commands;
pub mod error;
pub mod fleet;
pub mod kde;
pub mod manifest;

pub use error::{CliError, Result};
