//! Similarity matrices over snoRNAs and diseases, and their fusion.
//!
//! Four matrices feed the pair features: cosine functional similarity of
//! snoRNA feature rows, semantic similarity of diseases over a DAG, and a
//! Gaussian interaction profile (GIP) kernel over the association profiles
//! of each entity set. Each base matrix is meshed with its GIP counterpart:
//! the pair average where the base score exists, the GIP score otherwise.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::corpus::{float_cell, labeled_matrix_csv, read_labeled_grid, AssociationMatrix, DiseaseDag, FeatureTable};
use crate::error::{Result, SdaError};
use crate::io::write_atomic;

/// Square symmetric similarity matrix with an availability mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
    available: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn new(ids: Vec<String>, values: Vec<f64>, available: Vec<bool>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n || available.len() != n * n {
            return Err(SdaError::Data(format!("similarity matrix must be {n} x {n}")));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if values[i * n + j] != values[j * n + i] || available[i * n + j] != available[j * n + i] {
                    return Err(SdaError::Data(format!(
                        "similarity matrix not symmetric at ({}, {})",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        if let Some(k) = (0..n * n).find(|&k| available[k] && !values[k].is_finite()) {
            return Err(SdaError::Data(format!("non-finite similarity at ({}, {})", k / n, k % n)));
        }
        Ok(SimilarityMatrix { ids, values, available })
    }

    /// Builds a matrix by evaluating `f` on the upper triangle and mirroring.
    /// `None` marks the pair unavailable.
    pub fn from_pairwise<F>(ids: Vec<String>, f: F) -> Self
    where
        F: Fn(usize, usize) -> Option<f64> + Sync,
    {
        let n = ids.len();
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| f(i, j)).collect())
            .collect();
        let mut values = vec![0.0; n * n];
        let mut available = vec![false; n * n];
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + off;
                if let Some(v) = v {
                    values[i * n + j] = v;
                    values[j * n + i] = v;
                    available[i * n + j] = true;
                    available[j * n + i] = true;
                }
            }
        }
        SimilarityMatrix { ids, values, available }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ids.len() + j]
    }

    /// Value if available.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.ids.len() + j;
        self.available[k].then_some(self.values[k])
    }

    #[inline]
    pub fn is_available(&self, i: usize, j: usize) -> bool {
        self.available[i * self.ids.len() + j]
    }

    pub fn fully_available(&self) -> bool {
        self.available.iter().all(|&a| a)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Copy with negative entries raised to zero.
    pub fn clamp_negative(&self) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        out
    }

    /// Reorders to `ids`. Ids missing from this matrix get unavailable rows
    /// and columns (value 0).
    pub fn aligned_to(&self, ids: &[String]) -> Self {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let map: Vec<Option<usize>> = ids.iter().map(|id| index.get(id.as_str()).copied()).collect();
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        let mut available = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (map[i], map[j]) {
                    values[i * n + j] = self.get(a, b);
                    available[i * n + j] = self.is_available(a, b);
                }
            }
        }
        SimilarityMatrix {
            ids: ids.to_vec(),
            values,
            available,
        }
    }

    pub fn to_csv(&self) -> String {
        labeled_matrix_csv("id", &self.ids, &self.ids, |i, j| float_cell(self.get(i, j)))
    }

    pub fn mask_csv(&self) -> String {
        labeled_matrix_csv("id", &self.ids, &self.ids, |i, j| {
            if self.is_available(i, j) { "1" } else { "0" }.to_string()
        })
    }

    /// Writes the values to `path` and the mask to the `.mask.csv` sibling.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())?;
        write_atomic(&mask_path(path), self.mask_csv().as_bytes())
    }
}

/// `foo.csv` -> `foo.mask.csv`.
pub fn mask_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    path.with_file_name(format!("{stem}.mask.csv"))
}

/// Loads a similarity matrix and, if present, its `.mask.csv` sibling.
/// Without a mask, off-diagonal zeros are read as missing scores.
pub fn load_similarity_matrix(path: &Path) -> Result<SimilarityMatrix> {
    let grid = read_labeled_grid(path, b',')?;
    if grid.row_ids != grid.col_ids {
        return Err(SdaError::load(path, "row ids and column ids differ"));
    }
    let n = grid.row_ids.len();
    let mut values = Vec::with_capacity(n * n);
    for (line, cells) in &grid.rows {
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| SdaError::load(path, format!("line {line}: non-numeric cell '{cell}' at column {c}")))?;
            values.push(v);
        }
    }
    let mpath = mask_path(path);
    let available = if mpath.exists() {
        let mgrid = read_labeled_grid(&mpath, b',')?;
        if mgrid.row_ids != grid.row_ids || mgrid.col_ids != grid.col_ids {
            return Err(SdaError::load(&mpath, "mask ids differ from matrix ids"));
        }
        let mut mask = Vec::with_capacity(n * n);
        for (line, cells) in &mgrid.rows {
            for cell in cells {
                mask.push(match cell.as_str() {
                    "1" => true,
                    "0" => false,
                    other => return Err(SdaError::load(&mpath, format!("line {line}: non-binary mask cell '{other}'"))),
                });
            }
        }
        mask
    } else {
        (0..n * n).map(|k| k / n == k % n || values[k] != 0.0).collect()
    };
    SimilarityMatrix::new(grid.row_ids, values, available).map_err(|e| SdaError::load(path, e.to_string()))
}

/// Cosine of the angle between `u` and `v`; `None` if either has zero norm.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Option<f64> {
    assert_eq!(u.len(), v.len(), "cosine of vectors with different lengths");
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return None;
    }
    Some((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Functional similarity over feature rows aligned to `ids`. Pairs involving
/// a missing or zero-norm row are unavailable.
pub fn snorna_functional_similarity(ids: &[String], rows: &[Option<Vec<f64>>]) -> SimilarityMatrix {
    assert_eq!(ids.len(), rows.len());
    SimilarityMatrix::from_pairwise(ids.to_vec(), |i, j| match (&rows[i], &rows[j]) {
        (Some(a), Some(b)) => {
            if i == j {
                // identical vectors; avoids 0.9999999999999998
                a.iter().any(|&x| x != 0.0).then_some(1.0)
            } else {
                cosine_similarity(a, b)
            }
        }
        _ => None,
    })
}

/// Functional similarity over the rows of a feature table, in table order.
pub fn functional_similarity_of_table(ft: &FeatureTable) -> SimilarityMatrix {
    let rows: Vec<Option<Vec<f64>>> = ft.features.iter().cloned().map(Some).collect();
    snorna_functional_similarity(&ft.snorna_ids, &rows)
}

/// Semantic contribution of every ancestor of `node` to `node`, indexed by
/// DAG node. Non-ancestors get 0.
///
/// An ancestor's contribution is `delta` times the largest contribution among
/// its children that lie inside `node`'s ancestor closure.
pub fn semantic_contribution_vector(dag: &DiseaseDag, node: usize, delta: f64) -> Vec<f64> {
    let n = dag.len();
    let closure = dag.ancestor_indices(node);
    let mut in_closure = vec![false; n];
    for &a in &closure {
        in_closure[a] = true;
    }
    // Children-first order restricted to the closure.
    let mut pending_children: Vec<usize> = vec![0; n];
    for &a in &closure {
        pending_children[a] = dag.children(a).iter().filter(|&&c| in_closure[c]).count();
    }
    let mut sc = vec![0.0; n];
    let mut best_child = vec![0.0f64; n];
    let mut ready = vec![node];
    while let Some(x) = ready.pop() {
        sc[x] = if x == node { 1.0 } else { delta * best_child[x] };
        for &p in dag.parents(x) {
            if sc[x] > best_child[p] {
                best_child[p] = sc[x];
            }
            pending_children[p] -= 1;
            if pending_children[p] == 0 {
                ready.push(p);
            }
        }
    }
    sc
}

/// Semantic contributions to disease `id` keyed by ancestor id.
pub fn semantic_contribution(dag: &DiseaseDag, id: &str, delta: f64) -> Result<HashMap<String, f64>> {
    check_delta(delta)?;
    let x = dag
        .index_of(id)
        .ok_or_else(|| SdaError::Data(format!("unknown disease id '{id}'")))?;
    let sc = semantic_contribution_vector(dag, x, delta);
    Ok(sc
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (dag.nodes()[i].clone(), v))
        .collect())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(SdaError::Config(format!("semantic decay must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

/// Shared-ancestor ratio for two contribution vectors.
fn semantic_ratio(a: &[f64], b: &[f64]) -> f64 {
    let (mut shared, mut total) = (0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        total += x + y;
        if x > 0.0 && y > 0.0 {
            shared += x + y;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        shared / total
    }
}

/// Semantic similarity of every pair of DAG nodes, in DAG node order.
pub fn disease_semantic_similarity(dag: &DiseaseDag, delta: f64) -> Result<SimilarityMatrix> {
    check_delta(delta)?;
    let sc: Vec<Vec<f64>> = (0..dag.len())
        .into_par_iter()
        .map(|x| semantic_contribution_vector(dag, x, delta))
        .collect();
    Ok(SimilarityMatrix::from_pairwise(dag.nodes().to_vec(), |i, j| {
        Some(if i == j { 1.0 } else { semantic_ratio(&sc[i], &sc[j]) })
    }))
}

/// GIP kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GipBandwidth {
    pub gamma: f64,
    pub gamma_prime: f64,
}

/// `gamma = gamma_prime / mean(|p|^2)` over the profiles.
pub fn gip_bandwidth(profiles: &[Vec<f64>], gamma_prime: f64) -> Result<GipBandwidth> {
    if profiles.is_empty() {
        return Err(SdaError::Data("no interaction profiles".into()));
    }
    if !(gamma_prime > 0.0 && gamma_prime.is_finite()) {
        return Err(SdaError::Config(format!("gamma_prime must be positive, got {gamma_prime}")));
    }
    let mean_sq = profiles.iter().map(|p| p.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / profiles.len() as f64;
    if mean_sq == 0.0 {
        return Err(SdaError::Numeric("degenerate interaction profiles (all zero)".into()));
    }
    Ok(GipBandwidth {
        gamma: gamma_prime / mean_sq,
        gamma_prime,
    })
}

/// `exp(-gamma * |p_i - p_j|^2)` for every pair of profiles.
pub fn gip_similarity(ids: &[String], profiles: &[Vec<f64>], bw: GipBandwidth) -> SimilarityMatrix {
    assert_eq!(ids.len(), profiles.len());
    SimilarityMatrix::from_pairwise(ids.to_vec(), |i, j| {
        if i == j {
            return Some(1.0);
        }
        let d2: f64 = profiles[i]
            .iter()
            .zip(&profiles[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Some((-bw.gamma * d2).exp())
    })
}

/// GIP similarity of snoRNAs (rows of the association matrix).
pub fn snorna_gip(am: &AssociationMatrix, gamma_prime: f64) -> Result<SimilarityMatrix> {
    let profiles = am.snorna_profiles();
    let bw = gip_bandwidth(&profiles, gamma_prime)?;
    Ok(gip_similarity(am.snorna_ids(), &profiles, bw))
}

/// GIP similarity of diseases (columns of the association matrix).
pub fn disease_gip(am: &AssociationMatrix, gamma_prime: f64) -> Result<SimilarityMatrix> {
    let profiles = am.disease_profiles();
    let bw = gip_bandwidth(&profiles, gamma_prime)?;
    Ok(gip_similarity(am.disease_ids(), &profiles, bw))
}

/// Meshes a base similarity with a fully available GIP matrix. Negative base
/// scores are clamped to 0 first.
pub fn mesh_similarity(base: &SimilarityMatrix, gip: &SimilarityMatrix) -> Result<SimilarityMatrix> {
    if base.ids != gip.ids {
        return Err(SdaError::Data("mesh: base and GIP matrices have different id order".into()));
    }
    if !gip.fully_available() {
        return Err(SdaError::Data("mesh: GIP matrix has unavailable entries".into()));
    }
    let values = base
        .values
        .iter()
        .zip(&base.available)
        .zip(&gip.values)
        .map(|((&b, &avail), &g)| if avail { (b.max(0.0) + g) / 2.0 } else { g })
        .collect();
    Ok(SimilarityMatrix {
        ids: base.ids.clone(),
        values,
        available: vec![true; base.available.len()],
    })
}
