//! Stratified folds, ranking metrics and the cross-validation driver.

use std::borrow::Cow;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{gbdt_fit, GbdtParams};
use crate::error::{Result, SdaError};
use crate::sampling::LabeledPair;
use crate::svm::{grid_search, smo_train, GammaSpec, SmoParams};
use crate::{seed, sigmoid};

/// Assignment of samples to folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub fold_of: Vec<usize>,
}

impl FoldPlan {
    /// (train, test) sample indices for fold `f`, each ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.fold_of.len()).partition(|&i| self.fold_of[i] != f)
    }
}

/// Shuffles each class under `seed` and deals it round-robin across folds.
pub fn stratified_kfold(labels: &[u8], n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(SdaError::Config(format!("need at least 2 folds, got {n_folds}")));
    }
    let mut rng = seed::rng(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut offset = 0;
    for class in [1u8, 0u8] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < n_folds {
            return Err(SdaError::Data(format!(
                "class {class} has {} samples, fewer than {n_folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            fold_of[i] = (offset + pos) % n_folds;
        }
        offset = (offset + members.len()) % n_folds;
    }
    Ok(FoldPlan { n_folds, seed, fold_of })
}

fn class_counts(labels: &[u8]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    (pos, labels.len() - pos)
}

/// Indices sorted by descending score (stable on ties).
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Area under the ROC curve as the tie-aware Mann-Whitney statistic.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(SdaError::Data("ROC-AUC needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of mid-ranks (1-based) of positives, doubled to stay integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let twice_mid = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                twice_rank_sum += twice_mid;
            }
        }
        i = j + 1;
    }
    let twice_u = twice_rank_sum - (n_pos * (n_pos + 1)) as u64;
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Average precision: `sum_k (R_k - R_{k-1}) P_k` over distinct descending thresholds.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let (n_pos, _) = class_counts(labels);
    if n_pos == 0 {
        return Err(SdaError::Data("average precision needs at least one positive".into()));
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (tp, fp) in threshold_counts(scores, labels) {
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Cumulative (TP, FP) at each distinct score, from the highest down.
fn threshold_counts(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let idx = descending(scores);
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (pos, &i) in idx.iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = pos + 1 == idx.len() || scores[idx[pos + 1]] != scores[i];
        if last_of_tie {
            out.push((tp, fp));
        }
    }
    out
}

/// (FAR, TAR) points from (0,0) to (1,1), one per distinct threshold.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Vec<(f64, f64)> {
    let (n_pos, n_neg) = class_counts(labels);
    let mut pts = vec![(0.0, 0.0)];
    for (tp, fp) in threshold_counts(scores, labels) {
        pts.push((fp as f64 / n_neg.max(1) as f64, tp as f64 / n_pos.max(1) as f64));
    }
    pts
}

/// (recall, precision) points, one per distinct threshold.
pub fn pr_points(scores: &[f64], labels: &[u8]) -> Vec<(f64, f64)> {
    let (n_pos, _) = class_counts(labels);
    threshold_counts(scores, labels)
        .into_iter()
        .map(|(tp, fp)| (tp as f64 / n_pos.max(1) as f64, tp as f64 / (tp + fp) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub accuracy: f64,
    pub f1: f64,
    /// False when there were no predicted or no actual positives.
    pub f1_defined: bool,
}

/// Accuracy and F1 with `score >= threshold` predicted positive.
pub fn threshold_metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ThresholdMetrics> {
    if scores.is_empty() {
        return Err(SdaError::Data("no samples to score".into()));
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let accuracy = (tp + tn) as f64 / scores.len() as f64;
    let f1_defined = tp + fp > 0 && tp + fneg > 0;
    let f1 = if f1_defined {
        2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
    } else {
        0.0
    };
    Ok(ThresholdMetrics {
        accuracy,
        f1,
        f1_defined,
    })
}

/// Everything `run_cv` needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub n_folds: usize,
    pub seed: u64,
    pub gbdt: GbdtParams,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<GammaSpec>,
    /// Folds of the inner grid search.
    pub inner_folds: usize,
    pub smo_tol: f64,
    pub smo_max_passes: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            n_folds: 5,
            seed: 42,
            gbdt: GbdtParams::default(),
            svm_c: vec![0.1, 1.0, 10.0, 100.0],
            svm_gamma: vec![GammaSpec::InverseDim, GammaSpec::Value(0.01), GammaSpec::Value(0.1), GammaSpec::Value(1.0)],
            inner_folds: 5,
            smo_tol: 1e-3,
            smo_max_passes: 100,
        }
    }
}

/// Supplies pair feature rows for a fold. `train` holds indices into the
/// sample set; the returned rows cover every sample, in order.
pub trait FoldFeatures: Sync {
    fn rows(&self, train: &[usize]) -> Result<Cow<'_, [Vec<f64>]>>;
}

/// The same precomputed rows for every fold.
pub struct FixedFeatures(pub Vec<Vec<f64>>);

impl FoldFeatures for FixedFeatures {
    fn rows(&self, _train: &[usize]) -> Result<Cow<'_, [Vec<f64>]>> {
        Ok(Cow::Borrowed(&self.0))
    }
}

/// GBDT followed by an SVM grid-searched on the leaf encodings.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub gbdt: crate::boost::GbdtEnsemble,
    pub svm: crate::svm::SvmModel,
    pub grid: crate::svm::GridResult,
}

impl FittedPipeline {
    pub fn decisions(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let enc = self.gbdt.leaf_encode_all(rows)?;
        Ok(self.svm.decisions(&enc))
    }
}

/// Fits the GBDT on `x`, then grid-searches and fits the SVM on its leaf encodings.
pub fn fit_pipeline(x: &[Vec<f64>], y: &[u8], cfg: &CvConfig, seed_value: u64) -> Result<FittedPipeline> {
    let gbdt = gbdt_fit(x, y, cfg.gbdt)?;
    let enc = gbdt.leaf_encode_all(x)?;
    let d = gbdt.total_leaves();
    let grid = crate::svm::ParamGrid::new(
        cfg.svm_c.clone(),
        cfg.svm_gamma.iter().map(|g| g.resolve(d)).collect(),
    )?;
    let base = SmoParams {
        c: 1.0,
        gamma: 1.0,
        tol: cfg.smo_tol,
        max_passes: cfg.smo_max_passes,
        seed: seed::derive(seed_value, seed::GRID),
    };
    let result = grid_search(&enc, y, &grid, cfg.inner_folds, base)?;
    let svm = smo_train(
        &enc,
        y,
        SmoParams {
            c: result.best_c,
            gamma: result.best_gamma,
            tol: cfg.smo_tol,
            max_passes: cfg.smo_max_passes,
            seed: seed::derive(seed_value, seed::SVM),
        },
    )?;
    if !svm.converged {
        log::warn!(
            "SVM (C = {}, gamma = {}) stopped at max_passes without meeting KKT tolerance {}",
            svm.c,
            svm.gamma,
            cfg.smo_tol
        );
    }
    Ok(FittedPipeline { gbdt, svm, grid: result })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub roc_auc: f64,
    pub auprc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub f1_defined: bool,
    /// Mean squared error of the squashed decision values.
    pub mse: f64,
    pub svm_c: f64,
    pub svm_gamma: f64,
    pub total_leaves: usize,
    pub svm_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: String,
    pub n_folds: usize,
    pub seed: u64,
    pub n_samples: usize,
    pub folds: Vec<FoldReport>,
    pub mean_roc_auc: f64,
    pub mean_auprc: f64,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub mean_mse: f64,
    /// Out-of-fold decision value for every sample.
    pub oof_scores: Vec<f64>,
    #[serde(skip)]
    pub roc_points: Vec<(f64, f64)>,
    #[serde(skip)]
    pub pr_points: Vec<(f64, f64)>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn roc_csv(&self) -> String {
        points_csv("far,tar", &self.roc_points)
    }

    pub fn pr_csv(&self) -> String {
        points_csv("recall,precision", &self.pr_points)
    }
}

fn points_csv(header: &str, pts: &[(f64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (a, b) in pts {
        out.push_str(&format!("{a:?},{b:?}\n"));
    }
    out
}

/// Cross-validates the GBDT + SVM pipeline over a balanced sample set.
///
/// Each fold fits the tree ensemble on its training part, encodes training
/// and test samples through the leaves, grid-searches and fits the SVM on the
/// training encodings and scores the test encodings.
pub fn run_cv(set: &[LabeledPair], features: &dyn FoldFeatures, cfg: &CvConfig, mode: &str) -> Result<MetricsReport> {
    let labels: Vec<u8> = set.iter().map(|lp| lp.label).collect();
    let plan = stratified_kfold(&labels, cfg.n_folds, seed::derive(cfg.seed, seed::FOLDS))?;
    let folds: Vec<Result<(FoldReport, Vec<usize>, Vec<f64>)>> = (0..cfg.n_folds)
        .into_par_iter()
        .map(|f| {
            let (train, test) = plan.split(f);
            check_no_leak(set, &train, &test)?;
            let rows = features.rows(&train)?;
            if rows.len() != set.len() {
                return Err(SdaError::Data("feature rows do not cover the sample set".into()));
            }
            let x_train: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
            let y_train: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
            let x_test: Vec<Vec<f64>> = test.iter().map(|&i| rows[i].clone()).collect();
            let y_test: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
            let fitted = fit_pipeline(&x_train, &y_train, cfg, seed::derive(cfg.seed, 100 + f as u64))?;
            let scores = fitted.decisions(&x_test)?;
            let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
            let tm = threshold_metrics(&probs, &y_test, 0.5)?;
            let mse = probs
                .iter()
                .zip(&y_test)
                .map(|(p, &y)| (p - y as f64).powi(2))
                .sum::<f64>()
                / probs.len() as f64;
            let report = FoldReport {
                fold: f,
                n_train: train.len(),
                n_test: test.len(),
                roc_auc: roc_auc(&scores, &y_test)?,
                auprc: pr_auc(&scores, &y_test)?,
                accuracy: tm.accuracy,
                f1: tm.f1,
                f1_defined: tm.f1_defined,
                mse,
                svm_c: fitted.svm.c,
                svm_gamma: fitted.svm.gamma,
                total_leaves: fitted.gbdt.total_leaves(),
                svm_converged: fitted.svm.converged,
            };
            Ok((report, test, scores))
        })
        .collect();

    let mut oof = vec![0.0; set.len()];
    let mut reports = Vec::with_capacity(cfg.n_folds);
    for r in folds {
        let (report, test, scores) = r?;
        for (&i, s) in test.iter().zip(scores) {
            oof[i] = s;
        }
        reports.push(report);
    }
    let mean = |f: fn(&FoldReport) -> f64| reports.iter().map(f).sum::<f64>() / reports.len() as f64;
    Ok(MetricsReport {
        mode: mode.to_string(),
        n_folds: cfg.n_folds,
        seed: cfg.seed,
        n_samples: set.len(),
        mean_roc_auc: mean(|r| r.roc_auc),
        mean_auprc: mean(|r| r.auprc),
        mean_accuracy: mean(|r| r.accuracy),
        mean_f1: mean(|r| r.f1),
        mean_mse: mean(|r| r.mse),
        roc_points: roc_points(&oof, &labels),
        pr_points: pr_points(&oof, &labels),
        oof_scores: oof,
        folds: reports,
    })
}

/// Errors if a test sample (or its pair) also appears in training.
pub fn check_no_leak(set: &[LabeledPair], train: &[usize], test: &[usize]) -> Result<()> {
    let train_pairs: std::collections::HashSet<_> = train.iter().map(|&i| set[i].pair).collect();
    let train_idx: std::collections::HashSet<_> = train.iter().copied().collect();
    for &t in test {
        if train_idx.contains(&t) || train_pairs.contains(&set[t].pair) {
            return Err(SdaError::Data(format!(
                "fold leak: pair ({}, {}) is in both train and test",
                set[t].pair.snorna, set[t].pair.disease
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kfold_ten_samples() {
        let labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let plan = stratified_kfold(&labels, 5, 9).unwrap();
        for f in 0..5 {
            let (_, test) = plan.split(f);
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
        assert_eq!(plan, stratified_kfold(&labels, 5, 9).unwrap());
        assert!(stratified_kfold(&labels, 6, 9).is_err());
        assert!(stratified_kfold(&labels, 1, 9).is_err());
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[1, 1, 0, 0]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.8, 0.1], &[1, 0, 1, 0]).unwrap(), 0.875);
        assert!(roc_auc(&[0.5, 0.4], &[1, 1]).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(pr_auc(&[0.9, 0.8, 0.3, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(pr_auc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.5);
        assert_eq!(pr_auc(&[0.99, 0.5, 0.4, 0.3, 0.2], &[1, 0, 0, 0, 0]).unwrap(), 1.0);
        assert!(pr_auc(&[0.1], &[0]).is_err());
    }

    #[test]
    fn threshold_examples() {
        let all = threshold_metrics(&[0.9, 0.2], &[1, 0], 0.5).unwrap();
        assert_eq!((all.accuracy, all.f1, all.f1_defined), (1.0, 1.0, true));
        let m = threshold_metrics(&[0.9, 0.1, 0.1, 0.1], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        let none = threshold_metrics(&[0.1, 0.2], &[1, 0], 0.5).unwrap();
        assert_eq!(none.f1, 0.0);
        assert!(!none.f1_defined);
    }

    #[test]
    fn curve_endpoints() {
        let pts = roc_points(&[0.3, 0.9, 0.5, 0.5], &[0, 1, 1, 0]);
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert_eq!(pts.len(), 4);
        assert_eq!(pr_points(&[0.3, 0.9, 0.5, 0.5], &[0, 1, 1, 0]).len(), 3);
    }

    #[test]
    fn leak_detection() {
        use crate::corpus::Pair;
        let set = vec![
            LabeledPair { pair: Pair::new(0, 0), label: 1 },
            LabeledPair { pair: Pair::new(0, 0), label: 0 },
        ];
        assert!(check_no_leak(&set, &[0], &[1]).is_err());
        assert!(check_no_leak(&set[..1], &[], &[0]).is_ok());
    }
}
