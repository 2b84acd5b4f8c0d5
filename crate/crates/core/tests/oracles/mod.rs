//! Slow, direct reference implementations used to check the library.
#![allow(dead_code)]

use std::collections::HashMap;

/// ROC-AUC by counting every positive-negative pair; ties count one half.
pub fn pair_count_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Average precision: walk the distinct thresholds from high to low and add
/// precision times the recall gained at each.
pub fn step_sum_ap(scores: &[f64], labels: &[u8]) -> f64 {
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l == 1).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l == 0).count() as f64;
        let recall = tp / n_pos;
        ap += (recall - prev_recall) * tp / (tp + fp);
        prev_recall = recall;
    }
    ap
}

/// Semantic contributions by enumerating every upward path from `node`:
/// each ancestor gets `delta^length` of its best path.
pub fn path_contributions(parents: &HashMap<String, Vec<String>>, node: &str, delta: f64) -> HashMap<String, f64> {
    let mut sc = HashMap::new();
    fn walk(parents: &HashMap<String, Vec<String>>, at: &str, weight: f64, delta: f64, sc: &mut HashMap<String, f64>) {
        let e = sc.entry(at.to_string()).or_insert(0.0);
        if weight > *e {
            *e = weight;
        }
        if let Some(ps) = parents.get(at) {
            for p in ps {
                walk(parents, p, weight * delta, delta, sc);
            }
        }
    }
    walk(parents, node, 1.0, delta, &mut sc);
    sc
}

/// Ratio of shared-ancestor contributions to total contributions.
pub fn enumerated_dss(parents: &HashMap<String, Vec<String>>, a: &str, b: &str, delta: f64) -> f64 {
    let sa = path_contributions(parents, a, delta);
    let sb = path_contributions(parents, b, delta);
    let shared: f64 = sa
        .iter()
        .filter_map(|(t, va)| sb.get(t).map(|vb| va + vb))
        .sum();
    let total: f64 = sa.values().sum::<f64>() + sb.values().sum::<f64>();
    shared / total
}

/// Minimum residual sum of squares over every (feature, midpoint) split that
/// leaves at least `min_leaf` samples on each side.
pub fn enumerated_min_sse(x: &[Vec<f64>], r: &[f64], min_leaf: usize) -> Option<f64> {
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (r[i] - m).powi(2)).sum::<f64>()
    };
    let mut best: Option<f64> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|row| row[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (left, right): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| x[i][f] <= t);
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let s = sse(&left) + sse(&right);
            if best.map_or(true, |b| s < b) {
                best = Some(s);
            }
        }
    }
    best
}

/// SSE of splitting on `feature <= threshold`.
pub fn split_sse(x: &[Vec<f64>], r: &[f64], feature: usize, threshold: f64) -> f64 {
    let (left, right): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| x[i][feature] <= threshold);
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| r[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (r[i] - m).powi(2)).sum::<f64>()
    };
    sse(&left) + sse(&right)
}

pub fn dual_value(k: &[f64], y: &[f64], a: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[i * n + j];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                for c in col..n {
                    m[row][c] -= f * m[col][c];
                }
                rhs[row] -= f * rhs[col];
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Exact maximum of the soft-margin dual: every assignment of each
/// multiplier to {0, C, free} is tried, the free block is solved from its
/// stationarity conditions, and the best feasible point wins.
pub fn active_set_dual_max(k: &[f64], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let mut best = f64::NEG_INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut a: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let fixed_sum: f64 = (0..n).filter(|&i| state[i] == 1).map(|i| c * y[i]).sum();
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            // [Q_FF y_F; y_F^T 0] [a_F; nu] = [1 - Q_FU a_U; -fixed_sum]
            let m = free.len();
            let mut mat = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    mat[r][s] = y[i] * y[j] * k[i * n + j];
                }
                mat[r][m] = y[i];
                mat[m][r] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| y[i] * y[j] * k[i * n + j] * c).sum::<f64>();
            }
            rhs[m] = -fixed_sum;
            let Some(sol) = solve_linear(mat, rhs) else { continue };
            if sol[..m].iter().any(|&v| v < -1e-12 || v > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r].clamp(0.0, c);
            }
        }
        best = best.max(dual_value(k, y, &a));
    }
    best
}

/// Best dual value over a grid of `steps + 1` levels per multiplier; the last
/// multiplier is fixed by the equality constraint.
pub fn grid_dual_max(k: &[f64], y: &[f64], c: f64, steps: usize) -> f64 {
    let n = y.len();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut a: Vec<f64> = idx.iter().map(|&s| c * s as f64 / steps as f64).collect();
        let partial: f64 = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        let last = -partial * y[n - 1];
        if (0.0..=c).contains(&last) {
            a.push(last);
            best = best.max(dual_value(k, y, &a));
        }
        let mut d = 0;
        loop {
            if d == n - 1 {
                return best;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
