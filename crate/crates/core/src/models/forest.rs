//! Random forest regressor with per-tree predictions.
//!
//! Trees are grown on bootstrap resamples with variance-reduction splits
//! until leaves are pure or hold fewer than `min_samples_split` rows.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::EstimatorOutput;
use crate::error::{Error, Result};
use crate::seed::{self, role};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` means `max(1, q / 3)`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub min_samples_split: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    fn predict(&self, t: ArrayView1<f64>) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if t[feature] <= threshold { left } else { right },
            }
        }
    }

    fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { value, count } => Some((value, count)),
            Node::Split { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForestModel {
    trees: Vec<RegressionTree>,
    max_features: usize,
    bootstrap: bool,
    input_dim: usize,
}

impl RandomForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn bootstrap(&self) -> bool {
        self.bootstrap
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// (mean, sample count) of every leaf across all trees.
    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.trees.iter().flat_map(RegressionTree::leaves)
    }
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    max_features: usize,
    min_samples_split: usize,
    nodes: Vec<Node>,
    // scratch: (feature value, target) pairs of the node being split
    pairs: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
}

impl Builder<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let value = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        Node::Leaf {
            value,
            count: rows.len(),
        }
    }

    fn best_split_on(&mut self, rows: &[usize], feature: usize) -> Option<BestSplit> {
        self.pairs.clear();
        self.pairs
            .extend(rows.iter().map(|&r| (self.x[[r, feature]], self.y[r])));
        self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.pairs.len();
        let (total, total_sq) = self
            .pairs
            .iter()
            .fold((0.0, 0.0), |(s, s2), &(_, y)| (s + y, s2 + y * y));
        let mut left = 0.0;
        let mut left_sq = 0.0;
        let mut best: Option<BestSplit> = None;
        for i in 0..n - 1 {
            let (v, y) = self.pairs[i];
            left += y;
            left_sq += y * y;
            let next = self.pairs[i + 1].0;
            if next <= v {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            let right = total - left;
            let sse = (left_sq - left * left / nl) + ((total_sq - left_sq) - right * right / nr);
            if best.as_ref().map_or(true, |b| sse < b.sse) {
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                best = Some(BestSplit {
                    feature,
                    threshold,
                    sse,
                });
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut seed::Rng) -> usize {
        let id = self.nodes.len();
        let first = self.y[rows[0]];
        let pure = rows.iter().all(|&r| self.y[r] == first);
        if pure || rows.len() < self.min_samples_split {
            let leaf = self.leaf(&rows);
            self.nodes.push(leaf);
            return id;
        }

        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(rng);
        let mut best: Option<BestSplit> = None;
        for (visited, &f) in features.iter().enumerate() {
            // keep drawing past max_features only while no valid split exists
            if visited >= self.max_features && best.is_some() {
                break;
            }
            if let Some(s) = self.best_split_on(&rows, f) {
                if best.as_ref().map_or(true, |b| s.sse < b.sse) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            let leaf = self.leaf(&rows);
            self.nodes.push(leaf);
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.x[[r, split.feature]] <= split.threshold);
        // placeholder, patched once both children exist
        self.nodes.push(Node::Leaf { value: 0.0, count: 0 });
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Fit `cfg.n_trees` regression trees, each on its own seed-derived stream.
pub fn train_random_forest(
    features: ArrayView2<f64>,
    outcomes: ArrayView1<f64>,
    cfg: &ForestConfig,
    rng_seed: u64,
) -> Result<RandomForestModel> {
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
    if cfg.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree".into()));
    }
    let q = features.ncols();
    if q == 0 {
        return Err(Error::Shape("no feature columns".into()));
    }
    if outcomes.iter().chain(features.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Data("training data contains non-finite values".into()));
    }
    let max_features = cfg.max_features.unwrap_or((q / 3).max(1)).clamp(1, q);
    let mut builder = Builder {
        x: features,
        y: outcomes,
        max_features,
        min_samples_split: cfg.min_samples_split.max(2),
        nodes: Vec::new(),
        pairs: Vec::with_capacity(n),
    };
    let trees = (0..cfg.n_trees)
        .map(|j| {
            let mut rng = seed::derived_rng(rng_seed, &[role::TREE, j as u64]);
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            builder.nodes = Vec::new();
            builder.grow(rows, &mut rng);
            RegressionTree {
                nodes: std::mem::take(&mut builder.nodes),
            }
        })
        .collect();
    Ok(RandomForestModel {
        trees,
        max_features,
        bootstrap: cfg.bootstrap,
        input_dim: q,
    })
}

/// Per-tree predictions on every row of `features`.
pub fn rf_predict(model: &RandomForestModel, features: ArrayView2<f64>) -> Result<EstimatorOutput> {
    if features.ncols() != model.input_dim {
        return Err(Error::Shape(format!(
            "forest expects {} features, got {}",
            model.input_dim,
            features.ncols()
        )));
    }
    let mut per_member = Array2::zeros((features.nrows(), model.trees.len()));
    for (i, t) in features.axis_iter(Axis(0)).enumerate() {
        for (j, tree) in model.trees.iter().enumerate() {
            per_member[[i, j]] = tree.predict(t);
        }
    }
    Ok(EstimatorOutput::from_members(per_member))
}
