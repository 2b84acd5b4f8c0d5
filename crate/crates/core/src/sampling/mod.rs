//! Pair features and class balancing.
//!
//! Unknown pairs vastly outnumber known ones. They are clustered with
//! k-means in pair-feature space and an equal number of negatives is drawn
//! from the clusters in proportion to cluster size.

mod kmeans;

use std::collections::HashMap;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeans, Clustering, KMeansParams};

use crate::corpus::{read_labeled_grid, AssociationMatrix, Pair};
use crate::error::{Result, SdaError};
use crate::io::write_atomic;
use crate::seed;
use crate::similarity::SimilarityMatrix;

/// A pair with its class label (1 = known association).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledPair {
    pub pair: Pair,
    pub label: u8,
}

/// A pair instance with its raw feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSample {
    pub snorna_index: usize,
    pub disease_index: usize,
    pub label: u8,
    pub features: Vec<f64>,
}

/// Row `s` of the meshed snoRNA similarity followed by column `d` of the
/// meshed disease similarity.
pub fn pair_features(msfs: &SimilarityMatrix, mdss: &SimilarityMatrix, pair: Pair) -> Result<Vec<f64>> {
    if pair.snorna >= msfs.len() || pair.disease >= mdss.len() {
        return Err(SdaError::Data(format!(
            "pair ({}, {}) out of range for {} snoRNAs x {} diseases",
            pair.snorna,
            pair.disease,
            msfs.len(),
            mdss.len()
        )));
    }
    let n_d = mdss.len();
    let mut v = Vec::with_capacity(msfs.len() + n_d);
    v.extend_from_slice(msfs.row(pair.snorna));
    v.extend((0..n_d).map(|i| mdss.get(i, pair.disease)));
    Ok(v)
}

pub fn assemble_pair_features(msfs: &SimilarityMatrix, mdss: &SimilarityMatrix, lp: LabeledPair) -> Result<PairSample> {
    Ok(PairSample {
        snorna_index: lp.pair.snorna,
        disease_index: lp.pair.disease,
        label: lp.label,
        features: pair_features(msfs, mdss, lp.pair)?,
    })
}

/// Feature rows for many pairs, in input order.
pub fn feature_rows(msfs: &SimilarityMatrix, mdss: &SimilarityMatrix, pairs: &[Pair]) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    pairs.par_iter().map(|&p| pair_features(msfs, mdss, p)).collect()
}

/// Largest-remainder apportionment of `total` across groups of the given
/// sizes. Ties in remainder go to the lower group index.
pub fn apportion(sizes: &[usize], total: usize) -> Result<Vec<usize>> {
    let pop: usize = sizes.iter().sum();
    if total > pop {
        return Err(SdaError::Data(format!("cannot select {total} items from {pop}")));
    }
    if pop == 0 {
        return Ok(vec![0; sizes.len()]);
    }
    let mut counts = Vec::with_capacity(sizes.len());
    let mut rema = Vec::with_capacity(sizes.len());
    for (i, &s) in sizes.iter().enumerate() {
        let num = total as u128 * s as u128;
        counts.push((num / pop as u128) as usize);
        rema.push((num % pop as u128, i));
    }
    let short = total - counts.iter().sum::<usize>();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rema.iter().take(short) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Draws `n_pos` negatives, apportioned across clusters by size and sampled
/// uniformly within each cluster.
pub fn select_negatives(clustering: &Clustering, negatives: &[Pair], n_pos: usize, seed: u64) -> Result<Vec<Pair>> {
    if clustering.assignments.len() != negatives.len() {
        return Err(SdaError::Data("clustering does not cover the negative pairs".into()));
    }
    if n_pos == 0 {
        return Err(SdaError::Data("no positive pairs to balance against".into()));
    }
    if n_pos > negatives.len() {
        return Err(SdaError::Data(format!(
            "cannot select {n_pos} negatives from {} unknown pairs",
            negatives.len()
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clustering.k];
    for (i, &a) in clustering.assignments.iter().enumerate() {
        members[a].push(i);
    }
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let quotas = apportion(&sizes, n_pos)?;
    let mut out = Vec::with_capacity(n_pos);
    for (c, (group, &q)) in members.iter().zip(&quotas).enumerate() {
        if q == 0 {
            continue;
        }
        let mut rng = seed::rng(seed::derive(seed, c as u64));
        let mut picked = index::sample(&mut rng, group.len(), q).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| negatives[group[i]]));
    }
    Ok(out)
}

/// Positives followed by the selected negatives.
pub fn balanced_set(positives: &[Pair], negatives: &[Pair]) -> Vec<LabeledPair> {
    positives
        .iter()
        .map(|&pair| LabeledPair { pair, label: 1 })
        .chain(negatives.iter().map(|&pair| LabeledPair { pair, label: 0 }))
        .collect()
}

/// Cross-validated quality of one candidate cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub mean_auc: f64,
    pub mean_mse: f64,
}

/// Picks the `k` with the highest mean ROC-AUC; ties go to the lower mean
/// squared error, then to the smaller `k`.
pub fn choose_k<F>(k_range: &[usize], mut evaluate: F) -> Result<(usize, Vec<KScore>)>
where
    F: FnMut(usize) -> Result<KScore>,
{
    if k_range.is_empty() {
        return Err(SdaError::Config("empty k range".into()));
    }
    let scores: Vec<KScore> = k_range.iter().map(|&k| evaluate(k)).collect::<Result<_>>()?;
    let best = scores
        .iter()
        .copied()
        .reduce(|best, s| {
            let better = s.mean_auc > best.mean_auc
                || (s.mean_auc == best.mean_auc
                    && (s.mean_mse < best.mean_mse || (s.mean_mse == best.mean_mse && s.k < best.k)));
            if better {
                s
            } else {
                best
            }
        })
        .unwrap();
    Ok((best.k, scores))
}

/// `snorna_id,disease_id,label` rows.
pub fn balanced_csv(am: &AssociationMatrix, set: &[LabeledPair]) -> String {
    let mut out = String::from("snorna_id,disease_id,label\n");
    for lp in set {
        out.push_str(&am.snorna_ids()[lp.pair.snorna]);
        out.push(',');
        out.push_str(&am.disease_ids()[lp.pair.disease]);
        out.push(',');
        out.push(if lp.label == 1 { '1' } else { '0' });
        out.push('\n');
    }
    out
}

pub fn write_balanced_csv(path: &Path, am: &AssociationMatrix, set: &[LabeledPair]) -> Result<()> {
    write_atomic(path, balanced_csv(am, set).as_bytes())
}

/// Reads a balanced-pairs file, resolving ids against `am`.
pub fn load_balanced_csv(path: &Path, am: &AssociationMatrix) -> Result<Vec<LabeledPair>> {
    let grid = read_labeled_grid(path, b',')?;
    if grid.col_ids != ["disease_id", "label"] {
        return Err(SdaError::load(path, "expected header snorna_id,disease_id,label"));
    }
    let s_idx: HashMap<&str, usize> = am.snorna_ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let d_idx: HashMap<&str, usize> = am.disease_ids().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    grid.row_ids
        .iter()
        .zip(&grid.rows)
        .map(|(s, (line, cells))| {
            let snorna = *s_idx
                .get(s.as_str())
                .ok_or_else(|| SdaError::load(path, format!("line {line}: unknown snoRNA '{s}'")))?;
            let disease = *d_idx
                .get(cells[0].as_str())
                .ok_or_else(|| SdaError::load(path, format!("line {line}: unknown disease '{}'", cells[0])))?;
            let label = match cells[1].as_str() {
                "0" => 0,
                "1" => 1,
                other => return Err(SdaError::load(path, format!("line {line}: bad label '{other}'"))),
            };
            Ok(LabeledPair {
                pair: Pair::new(snorna, disease),
                label,
            })
        })
        .collect()
}
