//! Soft-margin SVM with an RBF kernel, trained by sequential minimal
//! optimization (Platt's two-multiplier updates with an error cache).
//!
//! Labels are `+1` / `-1`; the decision function is
//! `f(x) = sum_i alpha_i y_i K(x_i, x) + b`.

use log::{debug, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdaError};
use crate::eval::{roc_auc, stratified_kfold};
use crate::seed;

pub const MODEL_VERSION: &str = "svm-v1";

pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, y)).exp()
}

/// Dense symmetric matrix of pairwise squared distances, row-major.
pub fn distance_matrix(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| if j < i { 0.0 } else { squared_distance(&x[i], &x[j]) }).collect())
        .collect();
    let mut d: Vec<f64> = rows.into_iter().flatten().collect();
    for i in 0..n {
        for j in 0..i {
            d[i * n + j] = d[j * n + i];
        }
    }
    d
}

/// Maps {0,1} labels to {-1,+1}.
pub fn signed_labels(y: &[u8]) -> Vec<f64> {
    y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub gamma: f64,
    /// KKT tolerance on `y f(x) - 1`.
    pub tol: f64,
    /// Maximum number of sweeps over all samples.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            gamma: 0.1,
            tol: 1e-3,
            max_passes: 100,
            seed: 0,
        }
    }
}

/// Dual solution over all training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// True when every sample satisfies the KKT conditions within `tol`.
    pub converged: bool,
    pub passes: usize,
}

/// Dual objective `sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij`.
pub fn dual_objective(kernel: &[f64], y: &[f64], alphas: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Decision values `f(x_i)` on the training samples.
pub fn training_decisions(kernel: &[f64], y: &[f64], alphas: &[f64], bias: f64) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let mut f = bias;
            for j in 0..n {
                if alphas[j] != 0.0 {
                    f += alphas[j] * y[j] * kernel[j * n + i];
                }
            }
            f
        })
        .collect()
}

/// Whether sample `i` violates the KKT conditions by more than `tol`.
pub fn kkt_violated(alpha: f64, y: f64, f: f64, c: f64, tol: f64) -> bool {
    let r = y * f - 1.0;
    (r < -tol && alpha < c) || (r > tol && alpha > 0.0)
}

struct Smo<'a> {
    k: &'a [f64],
    y: &'a [f64],
    n: usize,
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    b: f64,
    err: Vec<f64>,
    rng: rand_chacha::ChaCha8Rng,
}

const EPS: f64 = 1e-12;

impl Smo<'_> {
    #[inline]
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a1_old + a2_old - self.c).max(0.0), (a1_old + a2_old).min(self.c))
        };
        if hi - lo < EPS {
            return false;
        }
        let (k11, k12, k22) = (self.kij(i1, i1), self.kij(i1, i2), self.kij(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > EPS {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective is linear along the constraint line; pick the better end.
            let f1 = y1 * (e1 - self.b) - a1_old * k11 - s * a2_old * k12;
            let f2 = y2 * (e2 - self.b) - s * a1_old * k12 - a2_old * k22;
            let obj = |a2: f64| {
                let a1 = a1_old + s * (a2_old - a2);
                a1 * f1 + a2 * f2 + 0.5 * a1 * a1 * k11 + 0.5 * a2 * a2 * k22 + s * a1 * a2 * k12
            };
            let (ol, oh) = (obj(lo), obj(hi));
            if ol < oh - EPS {
                lo
            } else if ol > oh + EPS {
                hi
            } else {
                a2_old
            }
        };
        if a2 < EPS {
            a2 = 0.0;
        } else if a2 > self.c - EPS {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < EPS * (a2 + a2_old + EPS) {
            return false;
        }
        let mut a1 = a1_old + s * (a2_old - a2);
        if a1 < EPS {
            a2 += s * a1;
            a1 = 0.0;
        } else if a1 > self.c - EPS {
            a2 += s * (a1 - self.c);
            a1 = self.c;
        }
        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let b_new = if a1 > 0.0 && a1 < self.c {
            b1
        } else if a2 > 0.0 && a2 < self.c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = b_new - self.b;
        let n = self.n;
        let (row1, row2) = (&self.k[i1 * n..(i1 + 1) * n], &self.k[i2 * n..(i2 + 1) * n]);
        for (k, e) in self.err.iter_mut().enumerate() {
            *e += d1 * row1[k] + d2 * row2[k] + db;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        self.b = b_new;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let (y2, a2, e2) = (self.y[i2], self.alpha[i2], self.err[i2]);
        let r2 = e2 * y2;
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        // Second-choice heuristic: free sample maximizing |E1 - E2|.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.n {
            if self.is_free(i) && i != i2 {
                let gap = (self.err[i] - e2).abs();
                if best.map_or(true, |(_, g)| gap > g) {
                    best = Some((i, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.gen_range(0..self.n);
        for off in 0..self.n {
            let i1 = (start + off) % self.n;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.gen_range(0..self.n);
        for off in 0..self.n {
            let i1 = (start + off) % self.n;
            if !self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }
}

/// Solves the soft-margin dual for a precomputed kernel matrix.
pub fn smo_solve(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_passes: usize, seed: u64) -> Result<SmoSolution> {
    let n = y.len();
    if kernel.len() != n * n {
        return Err(SdaError::Data("kernel matrix size does not match labels".into()));
    }
    if !(c > 0.0) {
        return Err(SdaError::Config(format!("C must be positive, got {c}")));
    }
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        return Err(SdaError::Numeric("SVM training needs both classes".into()));
    }
    let mut smo = Smo {
        k: kernel,
        y,
        n,
        c,
        tol,
        alpha: vec![0.0; n],
        b: 0.0,
        err: y.iter().map(|&v| -v).collect(),
        rng: seed::rng(seed),
    };
    let mut passes = 0;
    let mut free_sweeps = 0;
    let free_sweep_cap = max_passes.saturating_mul(n.max(10));
    let mut examine_all = true;
    loop {
        let mut changed = 0usize;
        if examine_all {
            if passes >= max_passes {
                break;
            }
            passes += 1;
            for i in 0..n {
                changed += smo.examine(i) as usize;
            }
        } else {
            free_sweeps += 1;
            for i in 0..n {
                if smo.is_free(i) {
                    changed += smo.examine(i) as usize;
                }
            }
        }
        if examine_all {
            if changed == 0 {
                break;
            }
            examine_all = false;
        } else if changed == 0 || free_sweeps >= free_sweep_cap {
            examine_all = true;
        }
    }
    let f = training_decisions(kernel, y, &smo.alpha, smo.b);
    let converged = (0..n).all(|i| !kkt_violated(smo.alpha[i], y[i], f[i], c, tol));
    if !converged {
        debug!("SMO stopped after {passes} passes without meeting KKT tolerance {tol}");
    }
    Ok(SmoSolution {
        alphas: smo.alpha,
        bias: smo.b,
        converged,
        passes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub alpha: f64,
    pub label: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: String,
    pub c: f64,
    pub gamma: f64,
    pub bias: f64,
    pub support: Vec<SupportVector>,
    pub converged: bool,
}

/// Multipliers at or below this are dropped from the support set.
pub const SUPPORT_TOL: f64 = 1e-12;

impl SvmModel {
    pub fn from_solution(x: &[Vec<f64>], y: &[f64], sol: &SmoSolution, c: f64, gamma: f64) -> Self {
        let support = x
            .iter()
            .zip(y)
            .zip(&sol.alphas)
            .filter(|(_, &a)| a > SUPPORT_TOL)
            .map(|((v, &label), &alpha)| SupportVector {
                alpha,
                label,
                vector: v.clone(),
            })
            .collect();
        SvmModel {
            version: MODEL_VERSION.to_string(),
            c,
            gamma,
            bias: sol.bias,
            support,
            converged: sol.converged,
        }
    }

    /// `sum alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .map(|sv| sv.alpha * sv.label * rbf_kernel(&sv.vector, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn decisions(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.par_iter().map(|x| self.decision(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("svm serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SvmModel = serde_json::from_str(s).map_err(|e| SdaError::Data(format!("bad SVM model: {e}")))?;
        if m.version != MODEL_VERSION {
            return Err(SdaError::Data(format!("unsupported SVM model version '{}'", m.version)));
        }
        Ok(m)
    }
}

/// Trains an RBF SVM on rows `x` with {0,1} labels.
pub fn smo_train(x: &[Vec<f64>], y: &[u8], params: SmoParams) -> Result<SvmModel> {
    if x.len() != y.len() {
        return Err(SdaError::Data(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if !(params.gamma >= 0.0) {
        return Err(SdaError::Config(format!("gamma must be nonnegative, got {}", params.gamma)));
    }
    let ys = signed_labels(y);
    let d = distance_matrix(x);
    let k: Vec<f64> = d.iter().map(|&v| (-params.gamma * v).exp()).collect();
    let sol = smo_solve(&k, &ys, params.c, params.tol, params.max_passes, params.seed)?;
    Ok(SvmModel::from_solution(x, &ys, &sol, params.c, params.gamma))
}

/// A kernel width, either fixed or `1 / d` for encoding length `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaSpec {
    InverseDim,
    Value(f64),
}

impl GammaSpec {
    pub fn resolve(self, dim: usize) -> f64 {
        match self {
            GammaSpec::InverseDim => 1.0 / dim.max(1) as f64,
            GammaSpec::Value(v) => v,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "auto" || s == "1/d" {
            return Ok(GammaSpec::InverseDim);
        }
        s.parse::<f64>()
            .map(GammaSpec::Value)
            .map_err(|_| SdaError::Config(format!("bad gamma value '{s}' (number or 'auto')")))
    }
}

impl std::fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GammaSpec::InverseDim => f.write_str("auto"),
            GammaSpec::Value(v) => write!(f, "{v}"),
        }
    }
}

/// Candidate hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl ParamGrid {
    pub fn new(mut c_values: Vec<f64>, mut gamma_values: Vec<f64>) -> Result<Self> {
        if c_values.is_empty() || gamma_values.is_empty() {
            return Err(SdaError::Config("SVM grid needs at least one C and one gamma".into()));
        }
        if c_values.iter().chain(&gamma_values).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SdaError::Config("SVM grid values must be positive".into()));
        }
        for v in [&mut c_values, &mut gamma_values] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        Ok(ParamGrid { c_values, gamma_values })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_c: f64,
    pub best_gamma: f64,
    pub cells: Vec<GridCell>,
}

/// Cross-validated search over `grid`, scored by mean fold ROC-AUC. Ties go
/// to the smaller C, then the smaller gamma.
pub fn grid_search(x: &[Vec<f64>], y: &[u8], grid: &ParamGrid, n_folds: usize, base: SmoParams) -> Result<GridResult> {
    let plan = stratified_kfold(y, n_folds, seed::derive(base.seed, seed::FOLDS))?;
    let dist = distance_matrix(x);
    let n = x.len();
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..n_folds).map(|f| plan.split(f)).collect();

    let cells: Vec<(f64, f64)> = grid
        .c_values
        .iter()
        .flat_map(|&c| grid.gamma_values.iter().map(move |&g| (c, g)))
        .collect();
    let scored: Vec<Result<GridCell>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &(c, gamma))| {
            let mut fold_aucs = Vec::new();
            for (f, (train, test)) in folds.iter().enumerate() {
                let y_train: Vec<u8> = train.iter().map(|&i| y[i]).collect();
                let y_test: Vec<u8> = test.iter().map(|&i| y[i]).collect();
                let classes = |v: &[u8]| v.contains(&0) && v.contains(&1);
                if !classes(&y_train) || !classes(&y_test) {
                    warn!("grid search: fold {f} lacks a class, skipped");
                    continue;
                }
                let m = train.len();
                let mut k = vec![0.0; m * m];
                for (a, &i) in train.iter().enumerate() {
                    for (b, &j) in train.iter().enumerate() {
                        k[a * m + b] = (-gamma * dist[i * n + j]).exp();
                    }
                }
                let ys = signed_labels(&y_train);
                let cell_seed = seed::derive(base.seed, (cell_idx * n_folds + f) as u64 + 1000);
                let sol = smo_solve(&k, &ys, c, base.tol, base.max_passes, cell_seed)?;
                let scores: Vec<f64> = test
                    .iter()
                    .map(|&t| {
                        train
                            .iter()
                            .enumerate()
                            .filter(|(a, _)| sol.alphas[*a] > 0.0)
                            .map(|(a, &i)| sol.alphas[a] * ys[a] * (-gamma * dist[i * n + t]).exp())
                            .sum::<f64>()
                            + sol.bias
                    })
                    .collect();
                fold_aucs.push(roc_auc(&scores, &y_test)?);
            }
            if fold_aucs.is_empty() {
                return Err(SdaError::Data("grid search: every fold was skipped".into()));
            }
            let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
            Ok(GridCell {
                c,
                gamma,
                fold_aucs,
                mean_auc,
            })
        })
        .collect();
    let cells: Vec<GridCell> = scored.into_iter().collect::<Result<_>>()?;
    let best = cells
        .iter()
        .fold(None::<&GridCell>, |best, cell| match best {
            Some(b) if b.mean_auc >= cell.mean_auc => Some(b),
            _ => Some(cell),
        })
        .expect("nonempty grid");
    Ok(GridResult {
        best_c: best.c,
        best_gamma: best.gamma,
        cells: cells.clone(),
    })
}
