//! Gradient-boosted regression trees under binomial log-likelihood loss, and
//! the one-hot leaf encoding used as SVM input.

mod tree;

use serde::{Deserialize, Serialize};

pub use tree::{best_split, fit_regression_tree, Node, RegressionTree, SplitChoice, TreeParams};

use crate::error::{Result, SdaError};
use crate::sigmoid;

pub const MODEL_VERSION: &str = "gbdt-v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            n_trees: 10,
            learning_rate: 0.1,
            tree: TreeParams::default(),
        }
    }
}

/// Log-odds of the mean label: the constant minimizing logistic loss.
pub fn gbdt_init(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(SdaError::Numeric("degenerate training set: no samples".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == labels.len() {
        return Err(SdaError::Numeric("degenerate training set: single class".into()));
    }
    let p = pos as f64 / labels.len() as f64;
    Ok((p / (1.0 - p)).ln())
}

/// Negative gradient of logistic loss: `y - sigmoid(F)`.
pub fn residuals(labels: &[u8], scores: &[f64]) -> Vec<f64> {
    assert_eq!(labels.len(), scores.len());
    labels.iter().zip(scores).map(|(&y, &f)| y as f64 - sigmoid(f)).collect()
}

/// Mean binomial negative log-likelihood of raw scores.
pub fn logistic_loss(labels: &[u8], scores: &[f64]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(scores)
        .map(|(&y, &f)| {
            // log(1 + e^f) - y f, computed stably
            let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            softplus - y as f64 * f
        })
        .sum();
    total / labels.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtEnsemble {
    pub version: String,
    pub init_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Mean training loss before the first tree and after each tree.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
}

impl GbdtEnsemble {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn total_leaves(&self) -> usize {
        self.trees.iter().map(|t| t.n_leaves).sum()
    }

    /// Raw additive score `F0 + lr * sum(tree outputs)`.
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.init_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    /// Leaf ordinal of `x` in every tree.
    pub fn leaf_indices(&self, x: &[f64]) -> Vec<usize> {
        self.trees.iter().map(|t| t.leaf_ordinal(x)).collect()
    }

    /// One-hot leaf indicator over all leaves of all trees, tree by tree.
    pub fn leaf_encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(SdaError::Data("leaf encoding requires a fitted ensemble".into()));
        }
        let mut out = vec![0.0; self.total_leaves()];
        let mut offset = 0;
        for t in &self.trees {
            out[offset + t.leaf_ordinal(x)] = 1.0;
            offset += t.n_leaves;
        }
        Ok(out)
    }

    pub fn leaf_encode_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        rows.par_iter().map(|x| self.leaf_encode(x)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let e: GbdtEnsemble = serde_json::from_str(s).map_err(|e| SdaError::Data(format!("bad GBDT model: {e}")))?;
        if e.version != MODEL_VERSION {
            return Err(SdaError::Data(format!("unsupported GBDT model version '{}'", e.version)));
        }
        Ok(e)
    }
}

/// Fits `params.n_trees` trees by gradient boosting on logistic loss.
pub fn gbdt_fit(x: &[Vec<f64>], y: &[u8], params: GbdtParams) -> Result<GbdtEnsemble> {
    if x.len() != y.len() {
        return Err(SdaError::Data(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&v| v > 1) {
        return Err(SdaError::Data(format!("non-binary label {bad}")));
    }
    let init_score = gbdt_init(y)?;
    let mut scores = vec![init_score; y.len()];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut loss_trace = vec![logistic_loss(y, &scores)];
    for _ in 0..params.n_trees {
        let r = residuals(y, &scores);
        let h: Vec<f64> = scores
            .iter()
            .map(|&f| {
                let p = sigmoid(f);
                p * (1.0 - p)
            })
            .collect();
        let tree = fit_regression_tree(x, &r, &h, params.tree);
        for (s, xi) in scores.iter_mut().zip(x) {
            *s += params.learning_rate * tree.predict(xi);
        }
        loss_trace.push(logistic_loss(y, &scores));
        trees.push(tree);
    }
    Ok(GbdtEnsemble {
        version: MODEL_VERSION.to_string(),
        init_score,
        learning_rate: params.learning_rate,
        trees,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_score_cases() {
        assert_eq!(gbdt_init(&[1, 0, 1, 0]).unwrap(), 0.0);
        assert!((gbdt_init(&[1, 1, 1, 0]).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((gbdt_init(&[1, 1, 1, 0]).unwrap() - 1.0986).abs() < 1e-4);
        assert!(gbdt_init(&[1, 1]).is_err());
        assert!(gbdt_init(&[]).is_err());
    }

    #[test]
    fn residual_cases() {
        assert_eq!(residuals(&[1], &[0.0]), vec![0.5]);
        assert!(residuals(&[0], &[50.0])[0] + 1.0 < 1e-15);
        assert_eq!(residuals(&[1, 0], &[f64::INFINITY, f64::NEG_INFINITY]), vec![0.0, 0.0]);
    }

    #[test]
    fn zero_learning_rate_keeps_init() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let m = gbdt_fit(&x, &y, GbdtParams { learning_rate: 0.0, ..Default::default() }).unwrap();
        assert_eq!(m.n_trees(), 10);
        for xi in &x {
            assert_eq!(m.predict_proba(xi), 0.5);
        }
    }

    #[test]
    fn xor_is_learned() {
        let x = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let params = GbdtParams {
            n_trees: 10,
            learning_rate: 0.1,
            tree: TreeParams {
                max_depth: 2,
                min_samples_leaf: 1,
                lambda: 1e-6,
            },
        };
        let m = gbdt_fit(&x, &y, params).unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!((m.predict_proba(xi) > 0.5) as u8, yi);
        }
    }

    #[test]
    fn encoding_has_one_hot_per_tree() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64]).collect();
        let y: Vec<u8> = (0..60).map(|i| ((i * 7 % 13) > 6) as u8).collect();
        let m = gbdt_fit(&x, &y, GbdtParams::default()).unwrap();
        assert!(m.total_leaves() <= 80);
        for xi in &x {
            let e = m.leaf_encode(xi).unwrap();
            assert_eq!(e.len(), m.total_leaves());
            assert_eq!(e.iter().filter(|&&v| v == 1.0).count(), 10);
        }
        let empty = GbdtEnsemble { trees: vec![], ..m.clone() };
        assert!(empty.leaf_encode(&x[0]).is_err());
    }

    #[test]
    fn predict_matches_hand_sum() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i >= 12) as u8).collect();
        let m = gbdt_fit(&x, &y, GbdtParams { n_trees: 3, ..Default::default() }).unwrap();
        for xi in &x {
            let mut f = m.init_score;
            for t in &m.trees {
                // walk the node array by hand
                let mut n = 0;
                let v = loop {
                    match &t.nodes[n] {
                        Node::Split { feature, threshold, left, right } => {
                            n = if xi[*feature] <= *threshold { *left } else { *right }
                        }
                        Node::Leaf { value, .. } => break *value,
                    }
                };
                f += m.learning_rate * v;
            }
            assert!((m.predict_proba(xi) - 1.0 / (1.0 + (-f).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1]).collect();
        let y: Vec<u8> = (0..30).map(|i| (i >= 15) as u8).collect();
        let m = gbdt_fit(&x, &y, GbdtParams::default()).unwrap();
        let back = GbdtEnsemble::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(GbdtEnsemble::from_json(&m.to_json().replace("gbdt-v1", "gbdt-v0")).is_err());
    }
}
