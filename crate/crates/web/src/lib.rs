//! Browser bindings for three small interactive views of the library:
//!
//! * tempered-softmax batch sampling over a score vector
//! * batch selection on a 2-D point cloud
//! * a 1-D ensemble fit with its uncertainty band and BALD scores
//!
//! Each operation is a plain Rust function (unit tested natively) with a
//! thin `wasm_bindgen` wrapper that turns errors into JS exceptions.

mod band;
mod select;
mod softmax;

pub use band::{ensemble_band, BandConfig};
pub use select::{select_2d, Method};
pub use softmax::{inclusion_frequencies, sample_batch};

use wasm_bindgen::prelude::*;

/// First-draw probabilities for `scores` at `temperature`.
#[wasm_bindgen(js_name = softmaxProbabilities)]
pub fn softmax_probabilities(scores: Vec<f64>, temperature: f64) -> Result<Vec<f64>, JsError> {
    softmax::probabilities(&scores, temperature).map_err(|e| JsError::new(&e))
}

/// One batch of `b` positions drawn without replacement.
#[wasm_bindgen(js_name = sampleBatch)]
pub fn sample_batch_js(scores: Vec<f64>, temperature: f64, b: usize, seed: u64) -> Result<Vec<u32>, JsError> {
    sample_batch(&scores, temperature, b, seed)
        .map(to_u32)
        .map_err(|e| JsError::new(&e))
}

/// Per-position inclusion rates over `trials` seeded batches.
#[wasm_bindgen(js_name = inclusionFrequencies)]
pub fn inclusion_frequencies_js(
    scores: Vec<f64>,
    temperature: f64,
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    inclusion_frequencies(&scores, temperature, b, trials, seed).map_err(|e| JsError::new(&e))
}

/// Batch of `b` point indices chosen by `method` (coreset, kmeanspp,
/// kmeansdata or random). Points and anchors are interleaved `x, y` pairs.
#[wasm_bindgen(js_name = selectBatch)]
pub fn select_batch_js(
    points: Vec<f64>,
    anchors: Vec<f64>,
    method: &str,
    b: usize,
    seed: u64,
) -> Result<Vec<u32>, JsError> {
    let method: Method = method.parse().map_err(|e: String| JsError::new(&e))?;
    select_2d(&points, &anchors, method, b, seed)
        .map(to_u32)
        .map_err(|e| JsError::new(&e))
}

/// Fit an ensemble to `(xs, ys)` and evaluate it on `grid`. Returns
/// `[mean, sd, bald]` per grid point, flattened.
#[wasm_bindgen(js_name = ensembleBand)]
pub fn ensemble_band_js(
    xs: Vec<f64>,
    ys: Vec<f64>,
    grid: Vec<f64>,
    ensemble_size: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let cfg = BandConfig {
        ensemble_size,
        ..BandConfig::default()
    };
    ensemble_band(&xs, &ys, &grid, &cfg, seed)
        .map(|rows| rows.into_iter().flatten().collect())
        .map_err(|e| JsError::new(&e))
}

fn to_u32(v: Vec<usize>) -> Vec<u32> {
    v.into_iter().map(|i| i as u32).collect()
}
