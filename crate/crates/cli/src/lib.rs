//! Command-line front end: experiment configs, sweeps over runs and seeds,
//! per-cycle results, multi-seed summaries and SVG learning curves.

pub mod config;
mod error;
pub mod list;
pub mod plot;
pub mod report;
pub mod results;
pub mod run;
pub mod synth;

pub use error::{CliError, Result};
