//! Deep ensemble of one-hidden-layer ReLU networks.
//!
//! Members are trained on z-scored inputs and targets; once training ends the
//! scaling is folded into the first and last layers, so a trained member maps
//! raw features straight to raw outcomes. Gradients and embeddings are then
//! all taken in the caller's coordinates.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{EmbeddingMatrix, EstimatorOutput};
use crate::error::{Error, Result};
use crate::seed::{self, role};

/// One network: `g(t) = w2 . relu(W1 t + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpMember {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array1<f64>,
    b2: f64,
}

impl MlpMember {
    /// `w1` is `hidden_size x q`.
    pub fn new(w1: Array2<f64>, b1: Array1<f64>, w2: Array1<f64>, b2: f64) -> Result<Self> {
        let h = w1.nrows();
        if h == 0 || w1.ncols() == 0 {
            return Err(Error::Shape("hidden size and input dim must be >= 1".into()));
        }
        if b1.len() != h || w2.len() != h {
            return Err(Error::Shape(format!(
                "hidden size {h} but b1 has {} and w2 has {} entries",
                b1.len(),
                w2.len()
            )));
        }
        let finite = w1.iter().chain(&b1).chain(&w2).all(|v| v.is_finite()) && b2.is_finite();
        if !finite {
            return Err(Error::Contract("network parameters must be finite".into()));
        }
        Ok(Self { w1, b1, w2, b2 })
    }

    pub fn hidden_size(&self) -> usize {
        self.w1.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn b1(&self) -> &Array1<f64> {
        &self.b1
    }

    pub fn w2(&self) -> &Array1<f64> {
        &self.w2
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    /// Post-activation hidden vector.
    pub fn hidden(&self, t: ArrayView1<f64>) -> Array1<f64> {
        let mut z = self.w1.dot(&t) + &self.b1;
        z.mapv_inplace(|v| v.max(0.0));
        z
    }

    pub fn predict_one(&self, t: ArrayView1<f64>) -> f64 {
        self.w2.dot(&self.hidden(t)) + self.b2
    }

    /// Gradient of the network output with respect to its input.
    pub fn input_gradient(&self, t: ArrayView1<f64>) -> Array1<f64> {
        let z = self.w1.dot(&t) + &self.b1;
        let upstream = Array1::from_shape_fn(z.len(), |j| if z[j] > 0.0 { self.w2[j] } else { 0.0 });
        self.w1.t().dot(&upstream)
    }
}

/// Training hyperparameters for [`train_mlp_ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub ensemble_size: usize,
    pub hidden_grid: Vec<usize>,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 10,
            hidden_grid: vec![16, 32, 64, 128],
            max_epochs: 100,
            patience: 5,
            learning_rate: 1e-2,
            momentum: 0.9,
            batch_size: 32,
            validation_fraction: 0.2,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be >= 1".into()));
        }
        if self.hidden_grid.is_empty() || self.hidden_grid.contains(&0) {
            return Err(Error::Config("hidden_grid must be non-empty with sizes >= 1".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("max_epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("learning_rate must be > 0 and momentum in [0, 1)".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::Config("validation_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub hidden_size: usize,
    /// Validation MSE of the grid-search candidate for each hidden size.
    pub grid_validation_mse: Vec<(usize, f64)>,
    pub epochs: Vec<usize>,
    pub early_stopped: Vec<bool>,
    /// Validation MSE of the ensemble mean, in outcome units.
    pub validation_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMlp {
    members: Vec<MlpMember>,
    meta: Option<TrainMeta>,
}

impl EnsembleMlp {
    pub fn from_members(members: Vec<MlpMember>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Contract("ensemble needs at least one member".into()))?;
        let (h, q) = (first.hidden_size(), first.input_dim());
        if members.iter().any(|m| m.hidden_size() != h || m.input_dim() != q) {
            return Err(Error::Shape("ensemble members disagree on shape".into()));
        }
        Ok(Self { members, meta: None })
    }

    pub fn members(&self) -> &[MlpMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn hidden_size(&self) -> usize {
        self.members[0].hidden_size()
    }

    pub fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    pub fn train_meta(&self) -> Option<&TrainMeta> {
        self.meta.as_ref()
    }

    fn check_features(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::Shape(format!(
                "model expects {} features, got {cols}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn member(&self, index: usize) -> Result<&MlpMember> {
        self.members.get(index).ok_or_else(|| {
            Error::Contract(format!(
                "member index {index} out of range for ensemble of {}",
                self.len()
            ))
        })
    }
}

/// Flat parameter buffer used during training, in standardized units.
#[derive(Clone)]
struct Params {
    q: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl Params {
    fn zeros(h: usize, q: usize) -> Self {
        Self {
            q,
            w1: vec![0.0; h * q],
            b1: vec![0.0; h],
            w2: vec![0.0; h],
            b2: 0.0,
        }
    }

    fn init(h: usize, q: usize, rng: &mut seed::Rng) -> Self {
        let mut p = Self::zeros(h, q);
        let a1 = (6.0 / q as f64).sqrt();
        let a2 = (6.0 / (h + 1) as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
        p.w2.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
        p
    }

    fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    fn forward(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let q = self.q;
        let mut out = self.b2;
        for (j, hj) in hidden.iter_mut().enumerate() {
            let row = &self.w1[j * q..(j + 1) * q];
            let z = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            *hj = z.max(0.0);
            out += self.w2[j] * *hj;
        }
        out
    }

    fn mse(&self, x: &[f64], y: &[f64], rows: &[usize], hidden: &mut [f64]) -> f64 {
        let q = self.q;
        let sse: f64 = rows
            .iter()
            .map(|&r| (self.forward(&x[r * q..(r + 1) * q], hidden) - y[r]).powi(2))
            .sum();
        sse / rows.len() as f64
    }

    /// Fold input and target standardization into the weights.
    fn into_member(self, x_scale: &Standardizer, y_mean: f64, y_sd: f64) -> MlpMember {
        let (h, q) = (self.hidden_size(), self.q);
        let mut w1 = Array2::zeros((h, q));
        let mut b1 = Array1::from(self.b1);
        for j in 0..h {
            let mut shift = 0.0;
            for k in 0..q {
                let w = self.w1[j * q + k] / x_scale.sd[k];
                w1[[j, k]] = w;
                shift += w * x_scale.mean[k];
            }
            b1[j] -= shift;
        }
        let w2 = Array1::from(self.w2) * y_sd;
        let b2 = self.b2 * y_sd + y_mean;
        MlpMember { w1, b1, w2, b2 }
    }
}

struct Standardizer {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Standardizer {
    fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut sd = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n;
            mean.push(mu);
            sd.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
        }
        Self { mean, sd }
    }

    fn apply(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let q = x.ncols();
        let mut out = Vec::with_capacity(x.len());
        for row in x.axis_iter(Axis(0)) {
            for k in 0..q {
                out.push((row[k] - self.mean[k]) / self.sd[k]);
            }
        }
        out
    }
}

struct MemberFit {
    params: Params,
    epochs: usize,
    early_stopped: bool,
    best_val: f64,
}

struct TrainingData<'a> {
    x: &'a [f64],
    y: &'a [f64],
    q: usize,
    train: &'a [usize],
    val: &'a [usize],
}

fn fit_member(
    data: &TrainingData,
    hidden: usize,
    cfg: &MlpConfig,
    member_seed: u64,
    member_index: usize,
) -> Result<MemberFit> {
    let q = data.q;
    let mut rng = seed::rng(member_seed);
    let mut params = Params::init(hidden, q, &mut rng);
    let mut velocity = Params::zeros(hidden, q);
    let mut grad = Params::zeros(hidden, q);
    let mut h_buf = vec![0.0; hidden];

    let mut order = data.train.to_vec();
    let mut best = params.clone();
    let mut best_val = params.mse(data.x, data.y, data.val, &mut h_buf);
    let mut since_best = 0;
    let mut epochs = 0;
    let mut early_stopped = false;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.w1.fill(0.0);
            grad.b1.fill(0.0);
            grad.w2.fill(0.0);
            grad.b2 = 0.0;
            for &r in batch {
                let xr = &data.x[r * q..(r + 1) * q];
                let residual = params.forward(xr, &mut h_buf) - data.y[r];
                epoch_loss += residual * residual;
                grad.b2 += residual;
                for j in 0..hidden {
                    let hj = h_buf[j];
                    grad.w2[j] += residual * hj;
                    if hj > 0.0 {
                        let d = residual * params.w2[j];
                        grad.b1[j] += d;
                        for (g, v) in grad.w1[j * q..(j + 1) * q].iter_mut().zip(xr) {
                            *g += d * v;
                        }
                    }
                }
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            let mom = cfg.momentum;
            for (v, (p, g)) in velocity.w1.iter_mut().zip(params.w1.iter_mut().zip(&grad.w1)) {
                *v = mom * *v - scale * g;
                *p += *v;
            }
            for (v, (p, g)) in velocity.b1.iter_mut().zip(params.b1.iter_mut().zip(&grad.b1)) {
                *v = mom * *v - scale * g;
                *p += *v;
            }
            for (v, (p, g)) in velocity.w2.iter_mut().zip(params.w2.iter_mut().zip(&grad.w2)) {
                *v = mom * *v - scale * g;
                *p += *v;
            }
            velocity.b2 = mom * velocity.b2 - scale * grad.b2;
            params.b2 += velocity.b2;
        }
        epochs = epoch + 1;
        let val = params.mse(data.x, data.y, data.val, &mut h_buf);
        if !epoch_loss.is_finite() || !val.is_finite() {
            return Err(Error::Numerical {
                member: member_index,
                epoch,
            });
        }
        if val < best_val {
            best_val = val;
            best.clone_from(&params);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                early_stopped = true;
                break;
            }
        }
    }
    Ok(MemberFit {
        params: best,
        epochs,
        early_stopped,
        best_val,
    })
}

/// Train an ensemble of independently initialized networks.
///
/// A fixed 20% holdout of the rows (drawn from the seed) picks the hidden
/// size from `cfg.hidden_grid` and drives early stopping; the best-validation
/// parameters of each member are kept.
pub fn train_mlp_ensemble(
    features: ArrayView2<f64>,
    outcomes: ArrayView1<f64>,
    cfg: &MlpConfig,
    rng_seed: u64,
) -> Result<EnsembleMlp> {
    cfg.validate()?;
    let n = features.nrows();
    if n != outcomes.len() {
        return Err(Error::Shape(format!(
            "{n} feature rows but {} outcomes",
            outcomes.len()
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, found: n });
    }
    if features.ncols() == 0 {
        return Err(Error::Shape("no feature columns".into()));
    }
    if outcomes.iter().chain(features.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Data("training data contains non-finite values".into()));
    }

    let q = features.ncols();
    let x_scale = Standardizer::fit(features);
    let x = x_scale.apply(features);
    let y_mean = outcomes.sum() / n as f64;
    let y_var = outcomes.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64;
    let y_sd = if y_var > 1e-24 { y_var.sqrt() } else { 1.0 };
    let y: Vec<f64> = outcomes.iter().map(|v| (v - y_mean) / y_sd).collect();
    // a constant target leaves nothing to fit: fold the output layer to the mean
    let out_scale = if y_var > 1e-24 { y_sd } else { 0.0 };

    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut seed::derived_rng(rng_seed, &[role::VALIDATION_SPLIT]));
    let n_val = ((cfg.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let (val, train) = rows.split_at(n_val);
    let (mut val, mut train) = (val.to_vec(), train.to_vec());
    val.sort_unstable();
    train.sort_unstable();
    let data = TrainingData {
        x: &x,
        y: &y,
        q,
        train: &train,
        val: &val,
    };
    let member_seed = |j: usize, h: usize| seed::derive(rng_seed, &[role::MEMBER, j as u64, h as u64]);

    // Grid search reuses the member-0 candidate of the winning size.
    let mut grid_scores = Vec::with_capacity(cfg.hidden_grid.len());
    let mut best: Option<(usize, MemberFit)> = None;
    for &h in &cfg.hidden_grid {
        let fit = fit_member(&data, h, cfg, member_seed(0, h), 0)?;
        grid_scores.push((h, fit.best_val * out_scale * out_scale));
        if best.as_ref().map_or(true, |(_, b)| fit.best_val < b.best_val) {
            best = Some((h, fit));
        }
    }
    let (hidden, first) = best.expect("hidden grid is non-empty");

    let mut fits = Vec::with_capacity(cfg.ensemble_size);
    fits.push(first);
    for j in 1..cfg.ensemble_size {
        fits.push(fit_member(&data, hidden, cfg, member_seed(j, hidden), j)?);
    }

    let epochs = fits.iter().map(|f| f.epochs).collect();
    let early_stopped = fits.iter().map(|f| f.early_stopped).collect();
    let members: Vec<MlpMember> = fits
        .into_iter()
        .map(|f| f.params.into_member(&x_scale, y_mean, out_scale))
        .collect();
    let mut model = EnsembleMlp::from_members(members)?;

    let val_x = features.select(Axis(0), &val);
    let val_pred = predict_ensemble(&model, val_x.view())?;
    let validation_mse = val
        .iter()
        .zip(val_pred.mean())
        .map(|(&r, p)| (p - outcomes[r]).powi(2))
        .sum::<f64>()
        / val.len() as f64;
    model.meta = Some(TrainMeta {
        hidden_size: hidden,
        grid_validation_mse: grid_scores,
        epochs,
        early_stopped,
        validation_mse,
    });
    Ok(model)
}

/// Per-member predictions on every row of `features`.
pub fn predict_ensemble(model: &EnsembleMlp, features: ArrayView2<f64>) -> Result<EstimatorOutput> {
    model.check_features(features.ncols())?;
    let mut per_member = Array2::zeros((features.nrows(), model.len()));
    for (j, member) in model.members.iter().enumerate() {
        let hidden = features.dot(&member.w1.t()) + &member.b1;
        let hidden = hidden.mapv(|v| v.max(0.0));
        let out = hidden.dot(&member.w2) + member.b2;
        per_member.column_mut(j).assign(&out);
    }
    Ok(EstimatorOutput::from_members(per_member))
}

/// Hidden-layer activations of member `member_index` for every row.
pub fn penultimate_embeddings(
    model: &EnsembleMlp,
    features: ArrayView2<f64>,
    member_index: usize,
) -> Result<EmbeddingMatrix> {
    model.check_features(features.ncols())?;
    let member = model.member(member_index)?;
    let values = (features.dot(&member.w1.t()) + &member.b1).mapv(|v| v.max(0.0));
    Ok(EmbeddingMatrix {
        values,
        member: member_index,
    })
}

/// Final-layer loss gradients `(g - y_hat) * [h(t); 1]` with pseudo-labels
/// `y_hat ~ N(g(t), 1)` drawn row by row from `rng_seed`.
pub fn badge_gradient_embedding(
    model: &EnsembleMlp,
    features: ArrayView2<f64>,
    member_index: usize,
    rng_seed: u64,
) -> Result<Array2<f64>> {
    let member = model.member(member_index)?;
    model.check_features(features.ncols())?;
    let mut rng = seed::rng(rng_seed);
    let targets: Array1<f64> = features
        .axis_iter(Axis(0))
        .map(|t| {
            let noise: f64 = rng.sample(StandardNormal);
            member.predict_one(t) + noise
        })
        .collect();
    badge_gradient_with_targets(model, features, member_index, targets.view())
}

/// Same as [`badge_gradient_embedding`] with explicit pseudo-labels.
pub fn badge_gradient_with_targets(
    model: &EnsembleMlp,
    features: ArrayView2<f64>,
    member_index: usize,
    targets: ArrayView1<f64>,
) -> Result<Array2<f64>> {
    model.check_features(features.ncols())?;
    let member = model.member(member_index)?;
    if targets.len() != features.nrows() {
        return Err(Error::Shape(format!(
            "{} targets for {} rows",
            targets.len(),
            features.nrows()
        )));
    }
    let h = member.hidden_size();
    let mut out = Array2::zeros((features.nrows(), h + 1));
    for (i, t) in features.axis_iter(Axis(0)).enumerate() {
        let hidden = member.hidden(t);
        let residual = member.w2.dot(&hidden) + member.b2 - targets[i];
        let mut row = out.row_mut(i);
        for j in 0..h {
            row[j] = residual * hidden[j];
        }
        row[h] = residual;
    }
    Ok(out)
}

/// Gradient of the across-member population variance of predictions with
/// respect to the input point.
pub fn variance_gradient_wrt_input(model: &EnsembleMlp, t: ArrayView1<f64>) -> Result<Array1<f64>> {
    model.check_features(t.len())?;
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("input point must be finite".into()));
    }
    let m = model.len() as f64;
    let preds: Vec<f64> = model.members.iter().map(|mb| mb.predict_one(t)).collect();
    let mean = preds.iter().sum::<f64>() / m;
    let mut grad = Array1::zeros(t.len());
    for (member, g) in model.members.iter().zip(&preds) {
        let dev = g - mean;
        if dev != 0.0 {
            grad.scaled_add(2.0 * dev / m, &member.input_gradient(t));
        }
    }
    Ok(grad)
}
