//! Synthetic pools with known structure, used to check learning curves and
//! hit discovery end to end.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::pool::AlignedDataset;
use crate::seed;

/// Share of units marked as hits in the truth of a linear dataset.
const LINEAR_HIT_QUANTILE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    /// `y = w . t + noise`, standard normal features, `w_k ~ N(0, 1/q)`.
    Linear,
    /// Gaussian blobs; one blob holds the hits, whose absolute outcomes all
    /// exceed every other unit's.
    ClusterHits {
        n_clusters: usize,
        hit_cluster_fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub q: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn linear(n: usize, q: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::Linear,
            n,
            q,
            noise_sd,
            seed,
        }
    }

    pub fn cluster_hits(n: usize, q: usize, noise_sd: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::ClusterHits {
                n_clusters: 8,
                hit_cluster_fraction: 0.05,
            },
            n,
            q,
            noise_sd,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 10 || self.q == 0 {
            return Err(Error::Config("synthetic data needs n >= 10 and q >= 1".into()));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::Config("noise_sd must be finite and >= 0".into()));
        }
        if let SyntheticKind::ClusterHits {
            n_clusters,
            hit_cluster_fraction,
        } = self.kind
        {
            if n_clusters < 2 {
                return Err(Error::Config("cluster_hits needs at least 2 clusters".into()));
            }
            let hits = (hit_cluster_fraction * self.n as f64).round() as usize;
            if hits == 0 || hits + n_clusters - 1 > self.n {
                return Err(Error::Config(format!(
                    "hit_cluster_fraction {hit_cluster_fraction} gives an empty hit cluster or leaves other clusters empty"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    /// Linear coefficients (linear kind only).
    pub weights: Option<Array1<f64>>,
    /// Hit-cluster membership, or the top 5% by |y| for linear data.
    pub is_hit: Vec<bool>,
    /// Noise-free outcomes.
    pub y_clean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub dataset: AlignedDataset,
    pub truth: SyntheticTruth,
}

fn unit_names(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(5);
    (0..n).map(|i| format!("u{i:0width$}")).collect()
}

fn normal(rng: &mut seed::Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    let (features, outcomes, truth) = match spec.kind {
        SyntheticKind::Linear => linear(spec, &mut rng),
        SyntheticKind::ClusterHits {
            n_clusters,
            hit_cluster_fraction,
        } => cluster_hits(spec, n_clusters, hit_cluster_fraction, &mut rng),
    };
    Ok(SyntheticDataset {
        dataset: AlignedDataset::from_parts(unit_names(spec.n), features, outcomes, Vec::new()),
        truth,
    })
}

fn top_abs(values: &Array1<f64>, quantile: f64) -> Vec<bool> {
    let k = ((quantile * values.len() as f64).round() as usize).max(1);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut hit = vec![false; values.len()];
    for &i in &order[..k] {
        hit[i] = true;
    }
    hit
}

fn linear(spec: &SyntheticSpec, rng: &mut seed::Rng) -> (Array2<f64>, Array1<f64>, SyntheticTruth) {
    let (n, q) = (spec.n, spec.q);
    let scale = (1.0 / q as f64).sqrt();
    let weights = Array1::from_shape_fn(q, |_| normal(rng) * scale);
    let features = Array2::from_shape_fn((n, q), |_| normal(rng));
    let clean = features.dot(&weights);
    let outcomes = Array1::from_shape_fn(n, |i| clean[i] + spec.noise_sd * normal(rng));
    let truth = SyntheticTruth {
        weights: Some(weights),
        is_hit: top_abs(&outcomes, LINEAR_HIT_QUANTILE),
        y_clean: clean.to_vec(),
    };
    (features, outcomes, truth)
}

/// Blob centers are drawn with spread 4 around the origin, the hit blob
/// pushed out to twice that distance. Background outcomes are a bounded
/// smooth function of the features; hit outcomes have a large magnitude
/// whose sign flips across a random hyperplane through the hit center, so
/// the hit region is both extreme and hard to fit.
fn cluster_hits(
    spec: &SyntheticSpec,
    n_clusters: usize,
    hit_fraction: f64,
    rng: &mut seed::Rng,
) -> (Array2<f64>, Array1<f64>, SyntheticTruth) {
    const SPREAD: f64 = 4.0;
    const HIT_LEVEL: f64 = 3.0;
    const MARGIN: f64 = 0.5;
    let (n, q) = (spec.n, spec.q);
    let mut centers = Array2::from_shape_fn((n_clusters, q), |_| normal(rng) * SPREAD);
    centers.row_mut(0).mapv_inplace(|v| 2.0 * v);

    let n_hit = (hit_fraction * n as f64).round() as usize;
    let mut membership: Vec<usize> = (0..n)
        .map(|i| {
            if i < n_hit {
                0
            } else {
                1 + (i - n_hit) % (n_clusters - 1)
            }
        })
        .collect();
    membership.shuffle(rng);

    let features = Array2::from_shape_fn((n, q), |(i, k)| centers[[membership[i], k]] + normal(rng));
    let smooth = Array1::from_shape_fn(q, |_| normal(rng) / (q as f64).sqrt());
    let slope = Array1::from_shape_fn(q, |_| normal(rng) / (q as f64).sqrt());
    let split = Array1::from_shape_fn(q, |_| normal(rng));

    let mut clean = vec![0.0; n];
    let mut noisy = vec![0.0; n];
    let mut sign = vec![1.0; n];
    for i in 0..n {
        let t = features.row(i);
        let noise = spec.noise_sd * normal(rng);
        if membership[i] == 0 {
            let local = &t - &centers.row(0);
            sign[i] = if local.dot(&split) >= 0.0 { 1.0 } else { -1.0 };
            clean[i] = HIT_LEVEL + local.dot(&slope).abs();
            noisy[i] = clean[i] + noise;
        } else {
            clean[i] = t.dot(&smooth).tanh();
            noisy[i] = clean[i] + noise;
        }
    }
    // lift hit magnitudes so every hit strictly dominates the background
    let background = (0..n)
        .filter(|&i| membership[i] != 0)
        .map(|i| noisy[i].abs())
        .fold(0.0, f64::max);
    let weakest = (0..n)
        .filter(|&i| membership[i] == 0)
        .map(|i| noisy[i])
        .fold(f64::INFINITY, f64::min);
    let lift = (background + MARGIN - weakest).max(0.0);
    let mut outcomes = Array1::zeros(n);
    for i in 0..n {
        if membership[i] == 0 {
            clean[i] = sign[i] * (clean[i] + lift);
            outcomes[i] = sign[i] * (noisy[i] + lift);
        } else {
            outcomes[i] = noisy[i];
        }
    }
    let truth = SyntheticTruth {
        weights: None,
        is_hit: membership.iter().map(|&c| c == 0).collect(),
        y_clean: clean,
    };
    (features, outcomes, truth)
}
