//! Uncertainty-aware regressors: a deep ensemble of one-hidden-layer MLPs
//! and a random forest. Both expose per-member predictions so acquisition
//! functions can read epistemic spread directly.

mod forest;
mod mlp;

pub use forest::{rf_predict, train_random_forest, ForestConfig, RandomForestModel};
pub use mlp::{
    badge_gradient_embedding, badge_gradient_with_targets, penultimate_embeddings, predict_ensemble,
    train_mlp_ensemble, variance_gradient_wrt_input, EnsembleMlp, MlpConfig, MlpMember, TrainMeta,
};

use ndarray::{Array1, Array2, Axis};

/// Predictions of every ensemble member on a set of rows, with the row-wise
/// mean and population variance across members.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    per_member: Array2<f64>,
    mean: Array1<f64>,
    variance: Array1<f64>,
}

impl EstimatorOutput {
    /// `per_member` has one row per point and one column per member.
    pub fn from_members(per_member: Array2<f64>) -> Self {
        assert!(per_member.ncols() >= 1, "estimator output needs at least one member");
        let m = per_member.ncols() as f64;
        let mut mean = Array1::zeros(per_member.nrows());
        let mut variance = Array1::zeros(per_member.nrows());
        for (i, row) in per_member.axis_iter(Axis(0)).enumerate() {
            let first = row[0];
            if row.iter().all(|&v| v == first) {
                // exact for constant rows; the summed form can round
                mean[i] = first;
                continue;
            }
            // summing in sorted order makes both moments independent of member order
            let mut sorted = row.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mu = sorted.iter().sum::<f64>() / m;
            mean[i] = mu;
            let mut dev: Vec<f64> = sorted.iter().map(|v| (v - mu).powi(2)).collect();
            dev.sort_by(f64::total_cmp);
            variance[i] = dev.iter().sum::<f64>() / m;
        }
        Self {
            per_member,
            mean,
            variance,
        }
    }

    pub fn per_member(&self) -> &Array2<f64> {
        &self.per_member
    }

    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn variance(&self) -> &Array1<f64> {
        &self.variance
    }

    pub fn n_rows(&self) -> usize {
        self.per_member.nrows()
    }

    pub fn n_members(&self) -> usize {
        self.per_member.ncols()
    }

    /// Restrict to a subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            per_member: self.per_member.select(Axis(0), rows),
            mean: self.mean.select(Axis(0), rows),
            variance: self.variance.select(Axis(0), rows),
        }
    }
}

/// Post-activation hidden vectors of one ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub values: Array2<f64>,
    pub member: usize,
}
