use ndarray::{Array1, Axis};

use crate::models::EstimatorOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    Bald,
    Margin,
}

/// Per-row acquisition scores over the available pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub values: Array1<f64>,
    pub kind: ScoreKind,
}

/// Mutual information between outcome and parameters under a Gaussian
/// likelihood with unit noise: `0.5 * ln(1 + variance)`.
pub fn bald_scores(out: &EstimatorOutput) -> ScoreVector {
    ScoreVector {
        values: out.variance().mapv(|v| 0.5 * v.ln_1p()),
        kind: ScoreKind::Bald,
    }
}

/// Spread of member predictions: `max_j g_j - min_j g_j`.
pub fn margin_scores(out: &EstimatorOutput) -> ScoreVector {
    let values = out
        .per_member()
        .axis_iter(Axis(0))
        .map(|row| {
            let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            hi - lo
        })
        .collect();
    ScoreVector {
        values,
        kind: ScoreKind::Margin,
    }
}

/// Positions of the `b` largest scores, highest first; equal scores keep
/// ascending position order.
pub fn top_b(scores: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(b);
    order
}
