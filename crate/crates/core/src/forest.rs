//! Multi-output random-forest regressor mapping feature vectors to
//! d-dimensional measurement distributions.
//!
//! Trees are grown greedily: each split minimizes the summed (unweighted)
//! across-output squared error of the two children, with thresholds taken as
//! midpoints between consecutive distinct sorted feature values. All features
//! are considered at every split and trees grow until a node is pure or
//! smaller than `min_samples_split`. Predictions are plain leaf-mean averages
//! over trees, never renormalized onto the probability simplex.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Node impurities at or below this are treated as zero (pure node). Well
/// under any real difference between shot frequencies, but above the float
/// rounding left over when all targets in a node are identical.
const ZERO_IMPURITY: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ForestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("model format: {0}")]
    Format(String),
}

/// Tunable training parameters. Tree depth is unlimited and every feature is
/// a split candidate at every node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub num_trees: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { num_trees: 100, min_samples_split: 2, min_samples_leaf: 1, bootstrap: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Internal { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
    Leaf { mean: Vec<f64> },
}

impl TreeNode {
    fn evaluate<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        match self {
            TreeNode::Leaf { mean } => mean,
            TreeNode::Internal { feature, threshold, left, right } => {
                if x[*feature] <= *threshold {
                    left.evaluate(x)
                } else {
                    right.evaluate(x)
                }
            }
        }
    }
}

/// A fitted ensemble of multi-output regression trees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    d: usize,
    m: usize,
    params: ForestParams,
    train_seed: u64,
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format_version: u32,
    model: &'a ForestModel,
}

#[derive(Deserialize)]
struct ModelFile {
    format_version: u32,
    model: ForestModel,
}

struct TrainData<'a> {
    x: &'a [Vec<f64>],
    y: &'a [Vec<f64>],
    m: usize,
    d: usize,
}

fn validate_matrix(rows: &[Vec<f64>], what: &str) -> Result<usize, ForestError> {
    let width = rows.first().ok_or(ForestError::EmptyInput)?.len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(ForestError::DimensionMismatch(format!("ragged {what} rows")));
    }
    Ok(width)
}

/// Fits a forest on feature matrix `x` (N×m) and target matrix `y` (N×d).
///
/// Tree `t` draws its bootstrap resample from the stream seeded with
/// `derive_seed(seed, t)`, so the fitted model does not depend on how the
/// tree-building work is scheduled.
pub fn fit(
    x: &[Vec<f64>],
    y: &[Vec<f64>],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, ForestError> {
    let m = validate_matrix(x, "feature")?;
    let d = validate_matrix(y, "target")?;
    if x.len() != y.len() {
        return Err(ForestError::DimensionMismatch(format!(
            "{} feature rows vs {} target rows",
            x.len(),
            y.len()
        )));
    }
    if params.num_trees == 0 {
        return Err(ForestError::InvalidParams("num_trees must be at least 1".into()));
    }
    if params.min_samples_split < 2 {
        return Err(ForestError::InvalidParams("min_samples_split must be at least 2".into()));
    }
    if params.min_samples_leaf < 1 {
        return Err(ForestError::InvalidParams("min_samples_leaf must be at least 1".into()));
    }

    let data = TrainData { x, y, m, d };
    let n = x.len();
    let trees: Vec<TreeNode> = (0..params.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(rng::derive_seed(seed, t as u64));
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&data, rows, params)
        })
        .collect();

    Ok(ForestModel { trees, d, m, params: *params, train_seed: seed })
}

fn grow(data: &TrainData, rows: Vec<usize>, params: &ForestParams) -> TreeNode {
    let n = rows.len();
    let d = data.d;
    let nf = n as f64;

    let mut sum = vec![0.0; d];
    let mut sumsq = vec![0.0; d];
    for &r in &rows {
        for (j, v) in data.y[r].iter().enumerate() {
            sum[j] += v;
            sumsq[j] += v * v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let node_sse: f64 = (0..d).map(|j| (sumsq[j] - sum[j] * sum[j] / nf).max(0.0)).sum();
    if n < params.min_samples_split || node_sse <= ZERO_IMPURITY {
        return TreeNode::Leaf { mean };
    }

    // best (feature, threshold) by total child SSE; ties resolve to the
    // lowest feature index, then the lowest threshold, by scan order
    let mut best: Option<(usize, f64, f64)> = None;
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut lsum = vec![0.0; d];
    let mut lsumsq = vec![0.0; d];
    for feature in 0..data.m {
        order.clear();
        order.extend_from_slice(&rows);
        order.sort_unstable_by(|a, b| data.x[*a][feature].total_cmp(&data.x[*b][feature]));
        lsum.fill(0.0);
        lsumsq.fill(0.0);
        for i in 1..n {
            let prev = order[i - 1];
            for (j, v) in data.y[prev].iter().enumerate() {
                lsum[j] += v;
                lsumsq[j] += v * v;
            }
            let left_val = data.x[prev][feature];
            let right_val = data.x[order[i]][feature];
            if right_val <= left_val {
                continue;
            }
            if i < params.min_samples_leaf || n - i < params.min_samples_leaf {
                continue;
            }
            let (ln, rn) = (i as f64, (n - i) as f64);
            let mut child_sse = 0.0;
            for j in 0..d {
                let rs = sum[j] - lsum[j];
                let rss = sumsq[j] - lsumsq[j];
                child_sse += (lsumsq[j] - lsum[j] * lsum[j] / ln).max(0.0);
                child_sse += (rss - rs * rs / rn).max(0.0);
            }
            if best.map_or(true, |(_, _, b)| child_sse < b) {
                let mut threshold = 0.5 * (left_val + right_val);
                if threshold >= right_val {
                    // midpoint of adjacent floats can round up; keep the
                    // boundary strictly below the right value
                    threshold = left_val;
                }
                best = Some((feature, threshold, child_sse));
            }
        }
    }

    match best {
        None => TreeNode::Leaf { mean },
        Some((feature, threshold, _)) => {
            let (left_rows, right_rows) =
                rows.into_iter().partition(|&r| data.x[r][feature] <= threshold);
            TreeNode::Internal {
                feature,
                threshold,
                left: Box::new(grow(data, left_rows, params)),
                right: Box::new(grow(data, right_rows, params)),
            }
        }
    }
}

impl ForestModel {
    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn output_dim(&self) -> usize {
        self.d
    }

    pub fn feature_dim(&self) -> usize {
        self.m
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    /// Assembles a model from explicit parts (mainly for tests and tools).
    pub fn from_parts(
        trees: Vec<TreeNode>,
        d: usize,
        m: usize,
        params: ForestParams,
        train_seed: u64,
    ) -> Result<ForestModel, ForestError> {
        if trees.is_empty() {
            return Err(ForestError::InvalidParams("a forest needs at least one tree".into()));
        }
        fn leaf_dims_ok(node: &TreeNode, d: usize) -> bool {
            match node {
                TreeNode::Leaf { mean } => mean.len() == d,
                TreeNode::Internal { left, right, .. } => {
                    leaf_dims_ok(left, d) && leaf_dims_ok(right, d)
                }
            }
        }
        if !trees.iter().all(|t| leaf_dims_ok(t, d)) {
            return Err(ForestError::DimensionMismatch("leaf output width != d".into()));
        }
        Ok(ForestModel { trees, d, m, params, train_seed })
    }

    /// Mean over trees of the leaf mean reached by `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, ForestError> {
        if x.len() != self.m {
            return Err(ForestError::DimensionMismatch(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.m
            )));
        }
        let mut out = vec![0.0; self.d];
        for tree in &self.trees {
            for (o, v) in out.iter_mut().zip(tree.evaluate(x)) {
                *o += v;
            }
        }
        let t = self.trees.len() as f64;
        for o in &mut out {
            *o /= t;
        }
        Ok(out)
    }

    pub fn predict_rows(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ForestError> {
        x.iter().map(|row| self.predict(row)).collect()
    }

    /// Versioned JSON encoding of the whole ensemble.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFileRef { format_version: MODEL_FORMAT_VERSION, model: self })
            .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<ForestModel, ForestError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ForestError::Format(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ForestError::Format(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file.model)
    }
}

/// Mean squared error of the model on `(x, y)`, per output and averaged
/// uniformly across outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mse {
    pub overall: f64,
    pub per_output: Vec<f64>,
}

pub fn mse(model: &ForestModel, x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<Mse, ForestError> {
    if x.is_empty() || y.is_empty() {
        return Err(ForestError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(ForestError::DimensionMismatch(format!(
            "{} feature rows vs {} target rows",
            x.len(),
            y.len()
        )));
    }
    let mut per_output = vec![0.0; model.d];
    for (row, target) in x.iter().zip(y) {
        if target.len() != model.d {
            return Err(ForestError::DimensionMismatch(format!(
                "target width {} vs model output {}",
                target.len(),
                model.d
            )));
        }
        let pred = model.predict(row)?;
        for j in 0..model.d {
            let diff = target[j] - pred[j];
            per_output[j] += diff * diff;
        }
    }
    let n = x.len() as f64;
    for v in &mut per_output {
        *v /= n;
    }
    let overall = per_output.iter().sum::<f64>() / model.d as f64;
    Ok(Mse { overall, per_output })
}
