//! Active-learning cycle orchestration and the metrics reported per cycle.

use std::time::Instant;

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};

use crate::acquisition::{
    acquire, compatibility, uniform_without_replacement, AcquisitionInput, AcquisitionKind, Embeddings, ModelKind,
};
use crate::error::{Error, Result};
use crate::models::{
    badge_gradient_embedding, penultimate_embeddings, predict_ensemble, rf_predict, train_mlp_ensemble,
    train_random_forest, EnsembleMlp, EstimatorOutput, ForestConfig, MlpConfig, RandomForestModel,
};
use crate::pool::{commit_batch, make_pool_state, AcquisitionBatch, AlignedDataset, CycleRecord, PoolState};
use crate::seed::{self, role};

/// Member whose hidden layer and gradients feed the embedding-based rules.
pub const REFERENCE_MEMBER: usize = 0;

/// Total acquisition budget of the small-batch schedule (64 x 40).
const CYCLE_BUDGET: usize = 2560;

/// 40 cycles for batches up to 64; larger batches get proportionally fewer
/// cycles so the total number acquired stays at the b = 64 budget.
pub fn cycle_schedule(batch_size: usize) -> usize {
    assert!(batch_size >= 1, "batch size must be >= 1");
    if batch_size <= 64 {
        40
    } else {
        CYCLE_BUDGET.div_ceil(batch_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub model: ModelKind,
    pub acquisition: AcquisitionKind,
    pub batch_size: usize,
    /// `None` follows [`cycle_schedule`].
    pub num_cycles: Option<usize>,
    pub seed: u64,
    pub mlp: MlpConfig,
    pub forest: ForestConfig,
    pub temperature: f64,
    pub gamma: f64,
    pub adv_steps: usize,
    pub hit_quantile: f64,
    pub test_fraction: f64,
}

impl RunSpec {
    pub fn new(model: ModelKind, acquisition: AcquisitionKind, batch_size: usize, seed: u64) -> Self {
        Self {
            model,
            acquisition,
            batch_size,
            num_cycles: None,
            seed,
            mlp: MlpConfig::default(),
            forest: ForestConfig::default(),
            temperature: 1.0,
            gamma: 0.1,
            adv_steps: 15,
            hit_quantile: 0.05,
            test_fraction: 0.2,
        }
    }

    pub fn cycles(&self) -> usize {
        self.num_cycles.unwrap_or_else(|| cycle_schedule(self.batch_size))
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.num_cycles == Some(0) {
            return Err(Error::Config("num_cycles must be >= 1".into()));
        }
        if !(self.hit_quantile > 0.0 && self.hit_quantile <= 0.5) {
            return Err(Error::Config(format!(
                "hit_quantile must lie in (0, 0.5], got {}",
                self.hit_quantile
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be > 0".into()));
        }
        if !(self.gamma > 0.0) || self.adv_steps == 0 {
            return Err(Error::Config("gamma must be > 0 and adv_steps >= 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        match self.model {
            ModelKind::EnsembleMlp => self.mlp.validate()?,
            ModelKind::RandomForest if self.forest.n_trees == 0 || self.forest.max_features == Some(0) => {
                return Err(Error::Config("n_trees and max_features must be >= 1".into()))
            }
            ModelKind::RandomForest => {}
        }
        if !compatibility(self.model, self.acquisition) {
            return Err(Error::Config(format!(
                "acquisition {} is not supported by model {}",
                self.acquisition, self.model
            )));
        }
        Ok(())
    }
}

/// The "interesting" units: the top `quantile` fraction of non-test units
/// ranked by absolute outcome (ties to the lower index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HitSet {
    indices: Vec<usize>,
}

impl HitSet {
    pub fn new(outcomes: ArrayView1<f64>, test_idx: &[usize], quantile: f64) -> Self {
        let mut is_test = vec![false; outcomes.len()];
        for &i in test_idx {
            is_test[i] = true;
        }
        let mut candidates: Vec<usize> = (0..outcomes.len()).filter(|&i| !is_test[i]).collect();
        let size = ((quantile * candidates.len() as f64).round() as usize)
            .max(1)
            .min(candidates.len());
        candidates.sort_by(|&a, &b| outcomes[b].abs().total_cmp(&outcomes[a].abs()).then(a.cmp(&b)));
        candidates.truncate(size);
        candidates.sort_unstable();
        Self { indices: candidates }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Fraction of the hit set contained in the acquired set.
pub fn hit_ratio(hits: &HitSet, cum_idx: &[usize]) -> f64 {
    if hits.is_empty() {
        return 0.0;
    }
    let found = hits.indices.iter().filter(|i| cum_idx.binary_search(i).is_ok()).count();
    found as f64 / hits.len() as f64
}

pub fn evaluate_mse(predictions: ArrayView1<f64>, outcomes: ArrayView1<f64>) -> f64 {
    assert_eq!(predictions.len(), outcomes.len());
    if predictions.is_empty() {
        return 0.0;
    }
    predictions
        .iter()
        .zip(outcomes.iter())
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / predictions.len() as f64
}

/// A model trained for one cycle.
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Mlp(EnsembleMlp),
    Forest(RandomForestModel),
}

impl TrainedModel {
    pub fn fit(spec: &RunSpec, features: ArrayView2<f64>, outcomes: ArrayView1<f64>, rng_seed: u64) -> Result<Self> {
        Ok(match spec.model {
            ModelKind::EnsembleMlp => TrainedModel::Mlp(train_mlp_ensemble(features, outcomes, &spec.mlp, rng_seed)?),
            ModelKind::RandomForest => {
                TrainedModel::Forest(train_random_forest(features, outcomes, &spec.forest, rng_seed)?)
            }
        })
    }

    pub fn predict(&self, features: ArrayView2<f64>) -> Result<EstimatorOutput> {
        match self {
            TrainedModel::Mlp(m) => predict_ensemble(m, features),
            TrainedModel::Forest(f) => rf_predict(f, features),
        }
    }

    fn as_mlp(&self, kind: AcquisitionKind) -> Result<&EnsembleMlp> {
        match self {
            TrainedModel::Mlp(m) => Ok(m),
            TrainedModel::Forest(_) => Err(Error::Capability(format!(
                "{kind} needs a differentiable network, not a random forest"
            ))),
        }
    }
}

/// Derived per-cycle seeds; none depend on the acquisition function, so
/// every acquisition rule starts from the same split and seed batch.
fn cycle_seed(master: u64, label: u64, cycle: usize) -> u64 {
    seed::derive(master, &[label, cycle as u64])
}

fn select_next(
    spec: &RunSpec,
    data: &AlignedDataset,
    state: &PoolState,
    model: &TrainedModel,
    cycle: usize,
) -> Result<AcquisitionBatch> {
    let kind = spec.acquisition;
    let avail = state.avail_idx();
    let avail_x = data.features.select(Axis(0), avail);
    let cum_x = data.features.select(Axis(0), state.cum_idx());
    let output = model.predict(avail_x.view())?;

    let embeddings = if kind.needs_embeddings() {
        let mlp = model.as_mlp(kind)?;
        Some((
            penultimate_embeddings(mlp, avail_x.view(), REFERENCE_MEMBER)?.values,
            penultimate_embeddings(mlp, cum_x.view(), REFERENCE_MEMBER)?.values,
        ))
    } else {
        None
    };
    let gradients = if kind.needs_gradient_embeddings() {
        let mlp = model.as_mlp(kind)?;
        let s = cycle_seed(spec.seed, role::BADGE_TARGETS, cycle);
        Some(badge_gradient_embedding(mlp, avail_x.view(), REFERENCE_MEMBER, s)?)
    } else {
        None
    };
    let network = if kind.needs_differentiable_model() {
        Some(model.as_mlp(kind)?)
    } else {
        None
    };

    let mut input = AcquisitionInput::new(
        avail,
        avail_x.view(),
        &output,
        spec.batch_size,
        cycle_seed(spec.seed, role::ACQUIRE, cycle),
    );
    input.cum_features = cum_x.view();
    input.embeddings = embeddings.as_ref().map(|(a, c)| Embeddings {
        avail: a.view(),
        cum: c.view(),
    });
    input.gradient_embeddings = gradients.as_ref().map(|g| g.view());
    input.model = network;
    input.temperature = spec.temperature;
    input.gamma = spec.gamma;
    input.adv_steps = spec.adv_steps;
    acquire(kind, &input)
}

/// Uniform seed batch acquired before any model exists.
pub fn seed_batch(state: &PoolState, batch_size: usize, master_seed: u64) -> AcquisitionBatch {
    let avail = state.avail_idx();
    let picks = uniform_without_replacement(avail.len(), batch_size, seed::derive(master_seed, &[role::SEED_BATCH]));
    AcquisitionBatch::new(picks.into_iter().map(|p| avail[p]).collect())
}

/// Run a full active-learning campaign and collect one record per cycle.
pub fn run_active_learning(data: &AlignedDataset, spec: &RunSpec) -> Result<Vec<CycleRecord>> {
    let mut records = Vec::new();
    run_active_learning_with(data, spec, |r| records.push(r.clone()))?;
    Ok(records)
}

/// Like [`run_active_learning`], handing each record to `on_record` as soon
/// as its cycle finishes.
///
/// Cycle 0 acquires a uniform seed batch. Cycle `k >= 1` trains a fresh
/// model on the `k * b` acquired rows, scores it on the test split, records
/// the metrics, then acquires the next batch. The run ends after the last
/// scheduled cycle or when the pool is exhausted.
pub fn run_active_learning_with(
    data: &AlignedDataset,
    spec: &RunSpec,
    mut on_record: impl FnMut(&CycleRecord),
) -> Result<()> {
    spec.validate()?;
    let cycles = spec.cycles();
    let mut state = make_pool_state(
        data.len(),
        spec.test_fraction,
        seed::derive(spec.seed, &[role::TEST_SPLIT]),
    )?;
    let hits = HitSet::new(data.outcomes.view(), state.test_idx(), spec.hit_quantile);
    let test_x = data.features.select(Axis(0), state.test_idx());
    let test_y: Array1<f64> = data.outcomes.select(Axis(0), state.test_idx());

    let mut last = seed_batch(&state, spec.batch_size, spec.seed);
    state = commit_batch(&state, &last)?;

    for cycle in 1..=cycles {
        let started = Instant::now();
        let wrap = |e: Error| Error::Cycle {
            cycle,
            source: Box::new(e),
        };
        let cum = state.cum_idx();
        let train_x = data.features.select(Axis(0), cum);
        let train_y = data.outcomes.select(Axis(0), cum);
        let model = TrainedModel::fit(
            spec,
            train_x.view(),
            train_y.view(),
            cycle_seed(spec.seed, role::TRAIN, cycle),
        )
        .map_err(wrap)?;
        let test_pred = model.predict(test_x.view()).map_err(wrap)?;
        let test_mse = evaluate_mse(test_pred.mean().view(), test_y.view());
        let ratio = hit_ratio(&hits, cum);

        let next = if cycle < cycles && !state.avail_idx().is_empty() {
            Some(select_next(spec, data, &state, &model, cycle).map_err(wrap)?)
        } else {
            None
        };

        let record = CycleRecord {
            cycle,
            seed: spec.seed,
            n_acquired_total: cum.len(),
            test_mse,
            hit_ratio: ratio,
            acquired_units: last.indices.iter().map(|&i| data.units[i].clone()).collect(),
            acquired_indices: std::mem::take(&mut last.indices),
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        on_record(&record);

        match next {
            Some(batch) => {
                state = commit_batch(&state, &batch).map_err(wrap)?;
                last = batch;
            }
            None => break,
        }
    }
    Ok(())
}
