//! Batch active learning over a finite pool of interventions.
//!
//! Each unit in the pool is described by a feature vector and has one scalar
//! outcome that is revealed once the unit is acquired. A campaign repeatedly
//! trains an uncertainty-aware regressor on the acquired units, picks the next
//! batch with one of nine acquisition functions, and tracks test error and the
//! fraction of extreme-outcome "hits" found so far.
//!
//! * [`pool`]: tables, pool partition and cycle records
//! * [`models`]: deep MLP ensemble and random forest
//! * [`acquisition`]: the acquisition functions and their selection utilities
//! * [`engine`]: the cycle loop and its metrics
//! * [`data`]: TSV loading, alignment and synthetic pools

pub mod acquisition;
pub mod data;
pub mod engine;
mod error;
pub mod models;
pub mod pool;
pub mod seed;

pub use acquisition::{compatibility, AcquisitionKind, ModelKind};
pub use engine::{run_active_learning, run_active_learning_with, RunSpec};
pub use error::{Error, Result};
pub use pool::{AcquisitionBatch, AlignedDataset, CycleRecord, PoolState};
