//! Random-forest regression built from CART trees.
//!
//! Each tree is grown on a bootstrap resample (optional) by greedily choosing
//! the axis-aligned split that minimizes the summed squared error of the two
//! children. Thresholds sit halfway between consecutive distinct values and
//! rows with `x <= threshold` go left. Leaves store the mean target of their
//! rows. Equal-gain candidates resolve to the lowest feature index, then the
//! lowest threshold.

use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

pub const MODEL_FORMAT_VERSION: u32 = 1;

const PURE_VARIANCE: f64 = 1e-12;
const GAIN_TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Fraction of features considered at each split.
    pub max_features: f64,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: 1.0,
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be positive".into()));
        }
        if !(self.max_features > 0.0 && self.max_features <= 1.0) {
            return Err(Error::Config(format!(
                "max_features must lie in (0, 1], got {}",
                self.max_features
            )));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be positive".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be at least 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be positive".into()));
        }
        Ok(())
    }

    fn features_per_split(&self, n: usize) -> usize {
        ((self.max_features * n as f64).ceil() as usize).clamp(1, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

/// Flat binary tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub n_features: usize,
    pub config: ForestConfig,
    /// `(min, max)` of the training targets.
    pub train_target_range: (f64, f64),
    pub trees: Vec<RegressionTree>,
}

struct TreeBuilder<'a, R: Rng> {
    x: &'a Matrix,
    y: &'a [f64],
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: R,
    nodes: Vec<Node>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &r in rows {
            let v = self.y[r];
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let value = (sum / rows.len() as f64).clamp(lo, hi);
        self.nodes.push(Node::Leaf {
            value,
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let n = self.x.ncols();
        if self.mtry >= n {
            return (0..n).collect();
        }
        let mut f = sample_indices(&mut self.rng, n, self.mtry).into_vec();
        f.sort_unstable();
        f
    }

    /// Gains within `tol` of the incumbent count as ties, so the lowest
    /// feature and threshold win regardless of summation rounding.
    fn best_split(&mut self, rows: &[usize], mean: f64, tol: f64) -> Option<BestSplit> {
        let min_leaf = self.cfg.min_samples_leaf;
        let count = rows.len();
        let total: f64 = rows.iter().map(|&r| self.y[r] - mean).sum();
        let base = total * total / count as f64;
        let mut best: Option<BestSplit> = None;
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(count);

        for feature in self.candidate_features() {
            order.clear();
            order.extend(rows.iter().map(|&r| (self.x.get(r, feature), self.y[r] - mean)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if order[0].0 == order[count - 1].0 {
                continue;
            }
            let mut left_sum = 0.0;
            for i in 0..count - 1 {
                left_sum += order[i].1;
                let n_left = i + 1;
                let n_right = count - n_left;
                if order[i].0 == order[i + 1].0 || n_left < min_leaf || n_right < min_leaf {
                    continue;
                }
                let right_sum = total - left_sum;
                // Sum of squared errors drops by this amount relative to the parent.
                let gain = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / n_right as f64
                    - base;
                if gain > tol && best.as_ref().is_none_or(|b| gain > b.gain + tol) {
                    let (a, b) = (order[i].0, order[i + 1].0);
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let count = rows.len();
        let depth_reached = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if count < self.cfg.min_samples_split || count < 2 * self.cfg.min_samples_leaf || depth_reached
        {
            return self.leaf(rows);
        }
        let mean = rows.iter().map(|&r| self.y[r]).sum::<f64>() / count as f64;
        let sse = rows
            .iter()
            .map(|&r| (self.y[r] - mean) * (self.y[r] - mean))
            .sum::<f64>();
        if sse / (count as f64) < PURE_VARIANCE {
            return self.leaf(rows);
        }
        let Some(split) = self.best_split(rows, mean, GAIN_TIE_TOLERANCE * sse) else {
            return self.leaf(rows);
        };

        let x = self.x;
        let mut mid = 0;
        for i in 0..count {
            if x.get(rows[i], split.feature) <= split.threshold {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        // Keep row order canonical inside each child.
        rows[..mid].sort_unstable();
        rows[mid..].sort_unstable();

        let at = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: f64::NAN,
            samples: 0,
        });
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

fn check_design(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} feature rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() < 2 {
        return Err(Error::InsufficientData(format!(
            "forest needs at least 2 training rows, got {}",
            x.nrows()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::Shape("forest needs at least one feature".into()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("training data contains non-finite values".into()));
    }
    Ok(())
}

fn fit_tree(x: &Matrix, y: &[f64], cfg: &ForestConfig, tree_seed: u64) -> RegressionTree {
    let mut rng = seed::rng(tree_seed);
    let k = x.nrows();
    let mut rows: Vec<usize> = if cfg.bootstrap {
        let mut r: Vec<usize> = (0..k).map(|_| rng.gen_range(0..k)).collect();
        r.sort_unstable();
        r
    } else {
        (0..k).collect()
    };
    let mut builder = TreeBuilder {
        x,
        y,
        cfg,
        mtry: cfg.features_per_split(x.ncols()),
        rng,
        nodes: Vec::new(),
    };
    builder.grow(&mut rows, 0);
    RegressionTree {
        nodes: builder.nodes,
    }
}

/// Fits a forest; tree `t` draws from its own RNG stream seeded by
/// `(cfg.seed, t)`, so the result is the same however trees are scheduled.
pub fn fit_forest(x: &Matrix, y: &[f64], cfg: &ForestConfig) -> Result<ForestModel> {
    cfg.validate()?;
    check_design(x, y)?;
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(x, y, cfg, seed::derive(cfg.seed, t as u64)))
        .collect();
    Ok(ForestModel {
        format_version: MODEL_FORMAT_VERSION,
        n_features: x.ncols(),
        config: *cfg,
        train_target_range: (lo, hi),
        trees,
    })
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        let (lo, hi) = self.train_target_range;
        (sum / self.trees.len() as f64).clamp(lo, hi)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Schema(format!(
                "model expects {} features, input has {}",
                self.n_features,
                x.ncols()
            )));
        }
        Ok(x.rows().map(|r| self.predict_row(r)).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("forest model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<model>".into(),
            source: e,
        })?;
        model.check_loaded()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ForestModel = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        model.check_loaded()?;
        Ok(model)
    }

    fn check_loaded(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.trees.is_empty() {
            return Err(Error::Schema("model has no trees".into()));
        }
        for tree in &self.trees {
            let n = tree.nodes.len();
            let ok = n > 0
                && tree.nodes.iter().all(|node| match node {
                    Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } => *feature < self.n_features && *left < n && *right < n,
                    Node::Leaf { value, .. } => value.is_finite(),
                });
            if !ok {
                return Err(Error::Schema("model tree is malformed".into()));
            }
        }
        Ok(())
    }
}
