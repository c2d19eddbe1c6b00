use rand::seq::index;
use rand::Rng as _;

use crate::seed;

/// `b` distinct positions out of `n`, uniformly without replacement.
pub fn uniform_without_replacement(n: usize, b: usize, rng_seed: u64) -> Vec<usize> {
    let b = b.min(n);
    index::sample(&mut seed::rng(rng_seed), n, b).into_vec()
}

/// Draw `b` distinct positions one at a time, each with probability
/// proportional to `exp(score / temperature)` over the positions still
/// remaining. Each draw subtracts the remaining maximum before
/// exponentiating, so tiny temperatures degrade to exact argmax picks.
pub fn tempered_softmax_without_replacement(scores: &[f64], temperature: f64, b: usize, rng_seed: u64) -> Vec<usize> {
    debug_assert!(temperature > 0.0);
    let mut rng = seed::rng(rng_seed);
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let b = b.min(scores.len());
    let mut picks = Vec::with_capacity(b);
    let mut weights = Vec::with_capacity(scores.len());
    while picks.len() < b {
        let max = remaining.iter().map(|&i| scores[i]).fold(f64::NEG_INFINITY, f64::max);
        weights.clear();
        weights.extend(remaining.iter().map(|&i| ((scores[i] - max) / temperature).exp()));
        let total: f64 = weights.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut slot = 0;
        for (k, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            slot = k;
            if acc > target {
                break;
            }
        }
        picks.push(remaining.remove(slot));
    }
    picks
}

/// Selection probabilities of a single tempered-softmax draw.
pub fn tempered_softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| ((s - max) / temperature).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}
