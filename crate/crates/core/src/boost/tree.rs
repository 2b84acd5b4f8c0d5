//! Exact greedy regression trees fitted to logistic-loss residuals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Added to the hessian sum in the leaf Newton step.
    pub lambda: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 3,
            min_samples_leaf: 5,
            lambda: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        ordinal: usize,
    },
}

/// Binary tree stored as a node array with the root at index 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub n_leaves: usize,
}

/// A candidate split: feature, threshold, size of the left part and its score
/// (sum of squared child sums over child counts; larger is better).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

impl RegressionTree {
    pub fn leaf_node(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    /// Ordinal (0..n_leaves) of the leaf that `x` falls into.
    pub fn leaf_ordinal(&self, x: &[f64]) -> usize {
        match self.nodes[self.leaf_node(x)] {
            Node::Leaf { ordinal, .. } => ordinal,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_node(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n_leaves];
        for n in &self.nodes {
            if let Node::Leaf { value, ordinal } = n {
                v[*ordinal] = *value;
            }
        }
        v
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Best split of `idx` on one feature. Ties keep the lowest threshold.
fn best_split_on_feature(x: &[Vec<f64>], residuals: &[f64], idx: &[usize], feature: usize, min_leaf: usize) -> Option<SplitChoice> {
    let mut order: Vec<(f64, f64)> = idx.iter().map(|&i| (x[i][feature], residuals[i])).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = order.len();
    let total: f64 = order.iter().map(|p| p.1).sum();
    let mut left_sum = 0.0;
    let mut best: Option<SplitChoice> = None;
    for k in 1..n {
        left_sum += order[k - 1].1;
        if k < min_leaf || n - k < min_leaf || order[k - 1].0 == order[k].0 {
            continue;
        }
        let right_sum = total - left_sum;
        let score = left_sum * left_sum / k as f64 + right_sum * right_sum / (n - k) as f64;
        if best.map_or(true, |b| score > b.score) {
            best = Some(SplitChoice {
                feature,
                threshold: midpoint(order[k - 1].0, order[k].0),
                score,
            });
        }
    }
    best
}

/// Best split of `idx` over all features; ties go to the lowest feature index,
/// then the lowest threshold.
pub fn best_split(x: &[Vec<f64>], residuals: &[f64], idx: &[usize], min_leaf: usize) -> Option<SplitChoice> {
    let n_features = x.first().map_or(0, Vec::len);
    let per_feature: Vec<Option<SplitChoice>> = (0..n_features)
        .into_par_iter()
        .map(|f| best_split_on_feature(x, residuals, idx, f, min_leaf.max(1)))
        .collect();
    per_feature.into_iter().flatten().fold(None, |best, s| match best {
        Some(b) if b.score >= s.score => Some(b),
        _ => Some(s),
    })
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    residuals: &'a [f64],
    hessians: &'a [f64],
    params: TreeParams,
    nodes: Vec<Node>,
    n_leaves: usize,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let g: f64 = idx.iter().map(|&i| self.residuals[i]).sum();
        let h: f64 = idx.iter().map(|&i| self.hessians[i]).sum();
        self.nodes.push(Node::Leaf {
            value: g / (h + self.params.lambda),
            ordinal: self.n_leaves,
        });
        self.n_leaves += 1;
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let first = self.residuals[idx[0]];
        let constant = idx.iter().all(|&i| self.residuals[i] == first);
        if depth >= self.params.max_depth || constant || idx.len() < 2 * self.params.min_samples_leaf.max(1) {
            return self.leaf(idx);
        }
        let Some(split) = best_split(self.x, self.residuals, idx, self.params.min_samples_leaf) else {
            return self.leaf(idx);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, ordinal: 0 });
        let left = self.build(&left_idx, depth + 1);
        let right = self.build(&right_idx, depth + 1);
        self.nodes[me] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }
}

/// Fits one tree to `residuals` by exhaustive squared-error split search.
/// Leaf values are Newton steps `sum(r) / (sum(h) + lambda)`.
pub fn fit_regression_tree(x: &[Vec<f64>], residuals: &[f64], hessians: &[f64], params: TreeParams) -> RegressionTree {
    assert!(!x.is_empty(), "cannot fit a tree on zero samples");
    assert_eq!(x.len(), residuals.len());
    assert_eq!(x.len(), hessians.len());
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut b = Builder {
        x,
        residuals,
        hessians,
        params,
        nodes: Vec::new(),
        n_leaves: 0,
    };
    b.build(&idx, 0);
    RegressionTree {
        nodes: b.nodes,
        n_leaves: b.n_leaves,
    }
}
