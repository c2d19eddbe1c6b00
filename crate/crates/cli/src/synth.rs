//! `disco synth`: write a synthetic dataset as TSV files.

use std::fs;
use std::path::{Path, PathBuf};

use disco_core::data::{generate_synthetic, write_dataset, write_truth_table, SyntheticSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub descriptors: PathBuf,
    pub outcomes: PathBuf,
    pub truth: PathBuf,
}

/// Writes `NAME.descriptors.tsv`, `NAME.outcomes.tsv` and `NAME.truth.tsv`.
pub fn cmd_synth(spec: &SyntheticSpec, name: &str, dir: &Path) -> Result<SynthFiles> {
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(CliError::Config(format!("invalid dataset name {name:?}")));
    }
    let s = generate_synthetic(spec)?;
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let files = SynthFiles {
        descriptors: dir.join(format!("{name}.descriptors.tsv")),
        outcomes: dir.join(format!("{name}.outcomes.tsv")),
        truth: dir.join(format!("{name}.truth.tsv")),
    };
    let io = |e: disco_core::Error| CliError::Runtime(e.to_string());
    write_dataset(&s.dataset, &files.descriptors, &files.outcomes).map_err(io)?;
    write_truth_table(&files.truth, &s.dataset.units, &s.truth.is_hit, &s.truth.y_clean).map_err(io)?;
    Ok(files)
}
