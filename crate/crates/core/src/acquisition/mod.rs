//! The nine acquisition functions and the selection machinery they share.
//!
//! Every function maps an [`AcquisitionInput`] to an [`AcquisitionBatch`] of
//! `min(b, |avail|)` distinct pool indices drawn from `avail_idx`. Stochastic
//! rules are pure functions of their inputs and `rng_seed`.

mod advbim;
mod geometry;
mod sampling;
mod scores;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};

pub use advbim::adversarial_perturb;
pub use geometry::{
    covering_radius, farthest_first, kmeanspp_seed, kmeanspp_seed_from, lloyd_kmeans, nearest_unique_mapping,
    KMeansResult,
};
pub use sampling::{tempered_softmax, tempered_softmax_without_replacement, uniform_without_replacement};
pub use scores::{bald_scores, margin_scores, top_b, ScoreKind, ScoreVector};

use crate::error::{Error, Result};
use crate::models::{EnsembleMlp, EstimatorOutput};
use crate::pool::AcquisitionBatch;

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcquisitionKind {
    Random,
    TopUncertain,
    SoftUncertain,
    Margin,
    Coreset,
    Badge,
    AdvBim,
    KMeansData,
    KMeansEmbed,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 9] = [
        AcquisitionKind::Random,
        AcquisitionKind::TopUncertain,
        AcquisitionKind::SoftUncertain,
        AcquisitionKind::Margin,
        AcquisitionKind::Coreset,
        AcquisitionKind::Badge,
        AcquisitionKind::AdvBim,
        AcquisitionKind::KMeansData,
        AcquisitionKind::KMeansEmbed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Random => "random",
            AcquisitionKind::TopUncertain => "topuncertain",
            AcquisitionKind::SoftUncertain => "softuncertain",
            AcquisitionKind::Margin => "margin",
            AcquisitionKind::Coreset => "coreset",
            AcquisitionKind::Badge => "badge",
            AcquisitionKind::AdvBim => "adversarialbim",
            AcquisitionKind::KMeansData => "kmeansdata",
            AcquisitionKind::KMeansEmbed => "kmeansembed",
        }
    }

    pub fn needs_embeddings(self) -> bool {
        matches!(self, AcquisitionKind::Coreset | AcquisitionKind::KMeansEmbed)
    }

    pub fn needs_gradient_embeddings(self) -> bool {
        self == AcquisitionKind::Badge
    }

    pub fn needs_differentiable_model(self) -> bool {
        self == AcquisitionKind::AdvBim
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "advbim" {
            return Ok(AcquisitionKind::AdvBim);
        }
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown acquisition function {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    EnsembleMlp,
    RandomForest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::EnsembleMlp, ModelKind::RandomForest];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::EnsembleMlp => "ensemble_mlp",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ensemble_mlp" | "mlp" | "bnn" => Ok(ModelKind::EnsembleMlp),
            "random_forest" | "forest" | "rf" => Ok(ModelKind::RandomForest),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Whether an acquisition function can run on top of a model class. Forests
/// have no hidden layer or input gradient, so they only support the rules
/// that read predictions or raw features.
pub fn compatibility(model: ModelKind, acquisition: AcquisitionKind) -> bool {
    match model {
        ModelKind::EnsembleMlp => true,
        ModelKind::RandomForest => matches!(
            acquisition,
            AcquisitionKind::Random
                | AcquisitionKind::TopUncertain
                | AcquisitionKind::SoftUncertain
                | AcquisitionKind::Margin
                | AcquisitionKind::KMeansData
        ),
    }
}

/// Hidden-layer embeddings of the available and acquired rows.
#[derive(Debug, Clone, Copy)]
pub struct Embeddings<'a> {
    pub avail: ArrayView2<'a, f64>,
    pub cum: ArrayView2<'a, f64>,
}

/// Everything an acquisition function may read. Row `r` of every
/// avail-aligned matrix describes pool index `avail_idx[r]`.
#[derive(Debug, Clone, Copy)]
pub struct AcquisitionInput<'a> {
    pub avail_idx: &'a [usize],
    pub avail_features: ArrayView2<'a, f64>,
    pub cum_features: ArrayView2<'a, f64>,
    pub estimator_output: &'a EstimatorOutput,
    pub embeddings: Option<Embeddings<'a>>,
    pub gradient_embeddings: Option<ArrayView2<'a, f64>>,
    pub model: Option<&'a EnsembleMlp>,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub temperature: f64,
    pub gamma: f64,
    pub adv_steps: usize,
}

impl<'a> AcquisitionInput<'a> {
    /// Input with default hyperparameters (temperature 1, gamma 0.1,
    /// 15 adversarial steps), no acquired rows and no embeddings.
    pub fn new(
        avail_idx: &'a [usize],
        avail_features: ArrayView2<'a, f64>,
        estimator_output: &'a EstimatorOutput,
        batch_size: usize,
        rng_seed: u64,
    ) -> Self {
        Self {
            avail_idx,
            avail_features,
            cum_features: avail_features.slice_move(ndarray::s![0..0, ..]),
            estimator_output,
            embeddings: None,
            gradient_embeddings: None,
            model: None,
            batch_size,
            rng_seed,
            temperature: 1.0,
            gamma: 0.1,
            adv_steps: 15,
        }
    }

    fn batch_len(&self) -> Result<usize> {
        let n = self.avail_idx.len();
        if n == 0 {
            return Err(Error::Contract("available pool is empty".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be >= 1".into()));
        }
        if self.avail_features.nrows() != n || self.estimator_output.n_rows() != n {
            return Err(Error::Shape(format!(
                "avail_idx has {n} entries but features have {} rows and estimator output {}",
                self.avail_features.nrows(),
                self.estimator_output.n_rows()
            )));
        }
        Ok(self.batch_size.min(n))
    }

    fn to_pool(&self, positions: &[usize]) -> Vec<usize> {
        positions.iter().map(|&p| self.avail_idx[p]).collect()
    }

    fn embeddings(&self, kind: AcquisitionKind) -> Result<Embeddings<'a>> {
        let e = self
            .embeddings
            .ok_or_else(|| Error::Capability(format!("{kind} needs hidden-layer embeddings")))?;
        if e.avail.nrows() != self.avail_idx.len() || e.avail.ncols() != e.cum.ncols() {
            return Err(Error::Shape("embedding matrices are misaligned".into()));
        }
        Ok(e)
    }
}

pub fn acquire_random(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let picks = uniform_without_replacement(input.avail_idx.len(), b, input.rng_seed);
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

fn top_by_scores(input: &AcquisitionInput, scores: &ScoreVector) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let values = scores.values.as_slice().expect("contiguous scores");
    let picks = top_b(values, b);
    let chosen = picks.iter().map(|&p| values[p]).collect();
    Ok(AcquisitionBatch::with_scores(input.to_pool(&picks), chosen))
}

pub fn acquire_topuncertain(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    input.batch_len()?;
    top_by_scores(input, &bald_scores(input.estimator_output))
}

pub fn acquire_margin(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    input.batch_len()?;
    top_by_scores(input, &margin_scores(input.estimator_output))
}

pub fn acquire_softuncertain(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    if !(input.temperature > 0.0) || !input.temperature.is_finite() {
        return Err(Error::Config(format!(
            "temperature must be positive, got {}",
            input.temperature
        )));
    }
    let scores = bald_scores(input.estimator_output);
    let values = scores.values.as_slice().expect("contiguous scores");
    let picks = tempered_softmax_without_replacement(values, input.temperature, b, input.rng_seed);
    let chosen = picks.iter().map(|&p| values[p]).collect();
    Ok(AcquisitionBatch::with_scores(input.to_pool(&picks), chosen))
}

pub fn acquire_coreset(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let e = input.embeddings(AcquisitionKind::Coreset)?;
    let picks = farthest_first(e.avail, e.cum, b);
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

fn kmeans_select(input: &AcquisitionInput, points: ArrayView2<f64>, b: usize) -> Vec<usize> {
    let clusters = lloyd_kmeans(points, b, input.rng_seed, KMEANS_MAX_ITER, KMEANS_TOL);
    nearest_unique_mapping(clusters.centroids.view(), points)
}

pub fn acquire_kmeans_data(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let picks = kmeans_select(input, input.avail_features, b);
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

pub fn acquire_kmeans_embed(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let e = input.embeddings(AcquisitionKind::KMeansEmbed)?;
    let picks = kmeans_select(input, e.avail, b);
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

pub fn acquire_badge(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let g = input
        .gradient_embeddings
        .ok_or_else(|| Error::Capability("badge needs gradient embeddings".into()))?;
    if g.nrows() != input.avail_idx.len() {
        return Err(Error::Shape("gradient embeddings are misaligned".into()));
    }
    let picks = kmeanspp_seed(g, b, input.rng_seed);
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

/// Perturb every available point along the sign of the variance gradient,
/// map the perturbed points back to distinct pool rows, and keep the `b`
/// rows closest to their perturbed source (ties by pool index).
pub fn acquire_advbim(input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    let b = input.batch_len()?;
    let model = input
        .model
        .ok_or_else(|| Error::Capability("adversarialbim needs a differentiable model".into()))?;
    if !(input.gamma > 0.0) || input.adv_steps == 0 {
        return Err(Error::Config(
            "adversarialbim needs gamma > 0 and adv_steps >= 1".into(),
        ));
    }
    let x = input.avail_features;
    let mut perturbed = Array2::zeros(x.raw_dim());
    for (i, t) in x.axis_iter(Axis(0)).enumerate() {
        let p = adversarial_perturb(model, t, input.gamma, input.adv_steps)?;
        perturbed.row_mut(i).assign(&p);
    }
    let mapping = nearest_unique_mapping(perturbed.view(), x);
    let mut ranked: Vec<(f64, usize)> = mapping
        .iter()
        .enumerate()
        .map(|(i, &j)| (geometry::sq_dist(perturbed.row(i), x.row(j)), j))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let picks: Vec<usize> = ranked.into_iter().take(b).map(|(_, j)| j).collect();
    Ok(AcquisitionBatch::new(input.to_pool(&picks)))
}

pub fn acquire(kind: AcquisitionKind, input: &AcquisitionInput) -> Result<AcquisitionBatch> {
    match kind {
        AcquisitionKind::Random => acquire_random(input),
        AcquisitionKind::TopUncertain => acquire_topuncertain(input),
        AcquisitionKind::SoftUncertain => acquire_softuncertain(input),
        AcquisitionKind::Margin => acquire_margin(input),
        AcquisitionKind::Coreset => acquire_coreset(input),
        AcquisitionKind::Badge => acquire_badge(input),
        AcquisitionKind::AdvBim => acquire_advbim(input),
        AcquisitionKind::KMeansData => acquire_kmeans_data(input),
        AcquisitionKind::KMeansEmbed => acquire_kmeans_embed(input),
    }
}
