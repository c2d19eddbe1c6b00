//! Loading, aligning and generating datasets.

mod io;
mod synthetic;

pub use io::{
    load_descriptor_table, load_outcome_table, write_dataset, write_descriptor_table, write_outcome_table,
    write_truth_table, LoadReport,
};
pub use synthetic::{generate_synthetic, SyntheticDataset, SyntheticKind, SyntheticSpec, SyntheticTruth};

use std::collections::HashMap;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::pool::{AlignedDataset, DescriptorTable, OutcomeTable};

/// Units dropped from each side by [`align`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlignReport {
    pub dropped_descriptors: usize,
    pub dropped_outcomes: usize,
}

/// Inner join on exact unit identifier, ordered by identifier.
pub fn align(desc: &DescriptorTable, out: &OutcomeTable) -> Result<(AlignedDataset, AlignReport)> {
    let outcome_of: HashMap<&str, f64> = out
        .units()
        .iter()
        .map(String::as_str)
        .zip(out.outcomes().iter().copied())
        .collect();
    let mut shared: Vec<(usize, f64)> = desc
        .units()
        .iter()
        .enumerate()
        .filter_map(|(i, u)| outcome_of.get(u.as_str()).map(|&y| (i, y)))
        .collect();
    if shared.is_empty() {
        return Err(Error::Data(
            "descriptor and outcome tables share no unit identifiers".into(),
        ));
    }
    shared.sort_by(|a, b| desc.units()[a.0].cmp(&desc.units()[b.0]));

    let q = desc.dim();
    let mut features = Array2::zeros((shared.len(), q));
    for (row, &(i, _)) in shared.iter().enumerate() {
        features.row_mut(row).assign(&desc.features().row(i));
    }
    let units = shared.iter().map(|&(i, _)| desc.units()[i].clone()).collect();
    let outcomes = Array1::from_iter(shared.iter().map(|&(_, y)| y));
    let provenance = desc.source().into_iter().chain(out.source()).map(Into::into).collect();
    let report = AlignReport {
        dropped_descriptors: desc.len() - shared.len(),
        dropped_outcomes: out.len() - shared.len(),
    };
    Ok((
        AlignedDataset::from_parts(units, features, outcomes, provenance),
        report,
    ))
}
