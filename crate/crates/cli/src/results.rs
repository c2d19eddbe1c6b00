//! The per-cycle results table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub acquisition: String,
    pub model: String,
    pub batch_size: usize,
    pub seed: u64,
    pub cycle: usize,
    pub n_acquired: usize,
    pub test_mse: f64,
    pub hit_ratio: f64,
    pub wall_time_s: f64,
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let rows = reader
        .deserialize()
        .collect::<std::result::Result<Vec<ResultRow>, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no result rows", path.display())));
    }
    Ok(rows)
}
