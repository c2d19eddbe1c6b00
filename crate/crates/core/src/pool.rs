//! Shared domain types: descriptor and outcome tables, the pool partition
//! and per-cycle run records.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::seed;

/// Unit identifiers paired with a dense `n_units x q` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorTable {
    units: Vec<String>,
    features: Array2<f64>,
    source: Option<PathBuf>,
}

impl DescriptorTable {
    pub fn new(units: Vec<String>, features: Array2<f64>) -> Result<Self> {
        if units.len() != features.nrows() {
            return Err(Error::Shape(format!(
                "{} unit identifiers for {} feature rows",
                units.len(),
                features.nrows()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Data("descriptor table has no feature columns".into()));
        }
        check_unique(&units)?;
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("descriptor table contains non-finite values".into()));
        }
        Ok(Self {
            units,
            features,
            source: None,
        })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub(crate) fn with_source(mut self, path: &Path) -> Self {
        self.source = Some(path.to_path_buf());
        self
    }
}

/// Unit identifiers paired with scalar outcomes relative to control.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    units: Vec<String>,
    outcomes: Array1<f64>,
    source: Option<PathBuf>,
}

impl OutcomeTable {
    pub fn new(units: Vec<String>, outcomes: Array1<f64>) -> Result<Self> {
        if units.len() != outcomes.len() {
            return Err(Error::Shape(format!(
                "{} unit identifiers for {} outcomes",
                units.len(),
                outcomes.len()
            )));
        }
        check_unique(&units)?;
        if outcomes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("outcome table contains non-finite values".into()));
        }
        Ok(Self {
            units,
            outcomes,
            source: None,
        })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn outcomes(&self) -> &Array1<f64> {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub(crate) fn with_source(mut self, path: &Path) -> Self {
        self.source = Some(path.to_path_buf());
        self
    }
}

fn check_unique(units: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(units.len());
    for u in units {
        if !seen.insert(u.as_str()) {
            return Err(Error::Data(format!("duplicate unit identifier {u:?}")));
        }
    }
    Ok(())
}

/// Features and outcomes over one consistent set of units.
///
/// Produced by [`crate::data::align`] or the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    pub units: Vec<String>,
    pub features: Array2<f64>,
    pub outcomes: Array1<f64>,
    pub provenance: Vec<PathBuf>,
}

impl AlignedDataset {
    pub(crate) fn from_parts(
        units: Vec<String>,
        features: Array2<f64>,
        outcomes: Array1<f64>,
        provenance: Vec<PathBuf>,
    ) -> Self {
        debug_assert_eq!(units.len(), features.nrows());
        debug_assert_eq!(units.len(), outcomes.len());
        Self {
            units,
            features,
            outcomes,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Z-score the outcomes in place (population standard deviation).
    pub fn standardize_outcomes(&mut self) {
        let n = self.outcomes.len() as f64;
        if n == 0.0 {
            return;
        }
        let mean = self.outcomes.sum() / n;
        let var = self.outcomes.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        self.outcomes.mapv_inplace(|y| (y - mean) / sd);
    }
}

/// Partition of `0..n` into held-out test rows, the available pool and the
/// cumulative acquired set. All three are sorted and pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolState {
    test_idx: Vec<usize>,
    avail_idx: Vec<usize>,
    cum_idx: Vec<usize>,
    cycle: usize,
}

impl PoolState {
    pub fn test_idx(&self) -> &[usize] {
        &self.test_idx
    }

    pub fn avail_idx(&self) -> &[usize] {
        &self.avail_idx
    }

    pub fn cum_idx(&self) -> &[usize] {
        &self.cum_idx
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn n(&self) -> usize {
        self.test_idx.len() + self.avail_idx.len() + self.cum_idx.len()
    }

    /// Build a state from explicit index sets, checking the partition.
    pub fn from_parts(
        mut test_idx: Vec<usize>,
        mut avail_idx: Vec<usize>,
        mut cum_idx: Vec<usize>,
        cycle: usize,
    ) -> Result<Self> {
        test_idx.sort_unstable();
        avail_idx.sort_unstable();
        cum_idx.sort_unstable();
        let n = test_idx.len() + avail_idx.len() + cum_idx.len();
        let mut seen = vec![false; n];
        for &i in test_idx.iter().chain(&avail_idx).chain(&cum_idx) {
            if i >= n || seen[i] {
                return Err(Error::Contract(format!(
                    "index sets do not partition 0..{n} (offending index {i})"
                )));
            }
            seen[i] = true;
        }
        Ok(Self {
            test_idx,
            avail_idx,
            cum_idx,
            cycle,
        })
    }
}

/// Split `0..n` into a uniform random test set of `round(test_fraction * n)`
/// rows and an available pool holding the rest.
pub fn make_pool_state(n: usize, test_fraction: f64, rng_seed: u64) -> Result<PoolState> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if n < 5 {
        return Err(Error::Config(format!(
            "pool of {n} units is too small (need at least 5)"
        )));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::Config(format!(
            "test_fraction {test_fraction} on {n} units leaves an empty test set or pool"
        )));
    }
    let mut rng = seed::rng(rng_seed);
    let mut test_idx = index::sample(&mut rng, n, n_test).into_vec();
    test_idx.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let avail_idx = (0..n).filter(|&i| !is_test[i]).collect();
    Ok(PoolState {
        test_idx,
        avail_idx,
        cum_idx: Vec::new(),
        cycle: 0,
    })
}

/// An ordered acquisition batch of pool indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionBatch {
    pub indices: Vec<usize>,
    pub scores: Option<Vec<f64>>,
}

impl AcquisitionBatch {
    pub fn new(indices: Vec<usize>) -> Self {
        Self { indices, scores: None }
    }

    pub fn with_scores(indices: Vec<usize>, scores: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), scores.len());
        Self {
            indices,
            scores: Some(scores),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Move the batch from the available pool into the acquired set and advance
/// the cycle counter.
pub fn commit_batch(state: &PoolState, batch: &AcquisitionBatch) -> Result<PoolState> {
    let mut taken = HashSet::with_capacity(batch.len());
    for &i in &batch.indices {
        if state.avail_idx.binary_search(&i).is_err() {
            return Err(Error::Contract(format!("index {i} is not in the available pool")));
        }
        if !taken.insert(i) {
            return Err(Error::Contract(format!("index {i} appears twice in batch")));
        }
    }
    let avail_idx = state.avail_idx.iter().copied().filter(|i| !taken.contains(i)).collect();
    let mut cum_idx = state.cum_idx.clone();
    cum_idx.extend(&batch.indices);
    cum_idx.sort_unstable();
    Ok(PoolState {
        test_idx: state.test_idx.clone(),
        avail_idx,
        cum_idx,
        cycle: state.cycle + 1,
    })
}

/// Outcome of one active-learning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub seed: u64,
    pub n_acquired_total: usize,
    pub test_mse: f64,
    pub hit_ratio: f64,
    /// Pool indices of the batch that brought the acquired set to its current size.
    pub acquired_indices: Vec<usize>,
    pub acquired_units: Vec<String>,
    pub wall_time_s: f64,
}
