//! Input data: association matrix, snoRNA feature table, disease DAG and
//! dataset descriptors.
//!
//! The association matrix is the authority for entity ordering. Feature rows
//! and similarity matrices loaded from other files are permuted to match it.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdaError};
use crate::io::{fmt_f64, write_atomic};

/// Loader behaviour switches.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Promote warnings (e.g. id mismatches) to errors.
    pub strict: bool,
}

/// One (snoRNA, disease) cell of the association matrix, by index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub snorna: usize,
    pub disease: usize,
}

impl Pair {
    pub fn new(snorna: usize, disease: usize) -> Self {
        Pair { snorna, disease }
    }
}

/// Binary snoRNA x disease matrix of known associations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMatrix {
    snorna_ids: Vec<String>,
    disease_ids: Vec<String>,
    entries: Vec<u8>,
}

impl AssociationMatrix {
    /// Builds a matrix from row-major 0/1 entries.
    pub fn new(snorna_ids: Vec<String>, disease_ids: Vec<String>, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != snorna_ids.len() * disease_ids.len() {
            return Err(SdaError::Data(format!(
                "association matrix has {} entries, expected {} x {}",
                entries.len(),
                snorna_ids.len(),
                disease_ids.len()
            )));
        }
        if let Some(pos) = entries.iter().position(|&e| e > 1) {
            let nd = disease_ids.len();
            return Err(SdaError::Data(format!(
                "non-binary entry {} at ({}, {})",
                entries[pos],
                pos / nd,
                pos % nd
            )));
        }
        check_unique(&snorna_ids, "snoRNA")?;
        check_unique(&disease_ids, "disease")?;
        Ok(AssociationMatrix {
            snorna_ids,
            disease_ids,
            entries,
        })
    }

    pub fn from_rows(snorna_ids: Vec<String>, disease_ids: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        let entries = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(snorna_ids, disease_ids, entries)
    }

    pub fn snorna_ids(&self) -> &[String] {
        &self.snorna_ids
    }

    pub fn disease_ids(&self) -> &[String] {
        &self.disease_ids
    }

    pub fn n_snornas(&self) -> usize {
        self.snorna_ids.len()
    }

    pub fn n_diseases(&self) -> usize {
        self.disease_ids.len()
    }

    pub fn n_known(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    #[inline]
    pub fn get(&self, snorna: usize, disease: usize) -> u8 {
        self.entries[snorna * self.disease_ids.len() + disease]
    }

    pub fn is_known(&self, pair: Pair) -> bool {
        self.get(pair.snorna, pair.disease) == 1
    }

    pub fn set(&mut self, snorna: usize, disease: usize, value: bool) {
        let nd = self.disease_ids.len();
        self.entries[snorna * nd + disease] = value as u8;
    }

    /// Interaction profile of a snoRNA (row).
    pub fn snorna_profile(&self, snorna: usize) -> Vec<f64> {
        let nd = self.disease_ids.len();
        self.entries[snorna * nd..(snorna + 1) * nd]
            .iter()
            .map(|&e| e as f64)
            .collect()
    }

    /// Interaction profile of a disease (column).
    pub fn disease_profile(&self, disease: usize) -> Vec<f64> {
        (0..self.n_snornas()).map(|s| self.get(s, disease) as f64).collect()
    }

    pub fn snorna_profiles(&self) -> Vec<Vec<f64>> {
        (0..self.n_snornas()).map(|s| self.snorna_profile(s)).collect()
    }

    pub fn disease_profiles(&self) -> Vec<Vec<f64>> {
        (0..self.n_diseases()).map(|d| self.disease_profile(d)).collect()
    }

    /// Errors when the matrix holds no known association.
    pub fn require_positive(&self) -> Result<()> {
        if self.n_known() == 0 {
            return Err(SdaError::Data("association matrix has no positive entry".into()));
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("snorna_id");
        for d in &self.disease_ids {
            out.push(',');
            out.push_str(d);
        }
        out.push('\n');
        for (s, id) in self.snorna_ids.iter().enumerate() {
            out.push_str(id);
            for d in 0..self.n_diseases() {
                out.push(',');
                out.push(if self.get(s, d) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

fn check_unique(ids: &[String], axis: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(SdaError::Data(format!("duplicate {axis} id '{id}'")));
        }
    }
    Ok(())
}

/// A CSV/TSV grid with a header row and an id column.
pub(crate) struct LabeledGrid {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    /// Body cells with their 1-based file line numbers.
    pub rows: Vec<(usize, Vec<String>)>,
}

pub(crate) fn read_labeled_grid(path: &Path, delimiter: u8) -> Result<LabeledGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| SdaError::load(path, e.to_string()))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| SdaError::load(path, e.to_string()))?,
        None => return Err(SdaError::load(path, "empty file")),
    };
    let col_ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let width = header.len();
    let mut row_ids = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| SdaError::load(path, format!("line {line}: {e}")))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(SdaError::load(
                path,
                format!("line {line}: ragged row with {} cells, header has {width}", rec.len()),
            ));
        }
        row_ids.push(rec[0].trim().to_string());
        rows.push((line, rec.iter().skip(1).map(|s| s.trim().to_string()).collect()));
    }
    Ok(LabeledGrid {
        row_ids,
        col_ids,
        rows,
    })
}

fn dedup_check(path: &Path, ids: &[String], axis: &str) -> Result<()> {
    check_unique(ids, axis).map_err(|e| SdaError::load(path, e.to_string()))
}

/// Loads a comma-separated 0/1 association matrix.
pub fn load_association_matrix(path: &Path) -> Result<AssociationMatrix> {
    let grid = read_labeled_grid(path, b',')?;
    dedup_check(path, &grid.row_ids, "snoRNA")?;
    dedup_check(path, &grid.col_ids, "disease")?;
    let mut entries = Vec::with_capacity(grid.row_ids.len() * grid.col_ids.len());
    for (r, (line, cells)) in grid.rows.iter().enumerate() {
        for (c, cell) in cells.iter().enumerate() {
            let v = match cell.as_str() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(SdaError::load(
                        path,
                        format!(
                            "line {line}: non-binary cell '{other}' at row {} ('{}'), column {} ('{}')",
                            r, grid.row_ids[r], c, grid.col_ids[c]
                        ),
                    ))
                }
            };
            entries.push(v);
        }
    }
    let am = AssociationMatrix::new(grid.row_ids, grid.col_ids, entries)
        .map_err(|e| SdaError::load(path, e.to_string()))?;
    log::info!(
        "loaded {}: {} snoRNAs x {} diseases, {} known associations",
        path.display(),
        am.n_snornas(),
        am.n_diseases(),
        am.n_known()
    );
    Ok(am)
}

/// Real-valued snoRNA feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub snorna_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.snorna_ids.len()
    }

    /// Permutes rows into the association matrix order. SnoRNAs without a
    /// feature row map to `None`; extra rows are dropped. Either kind of
    /// mismatch is reported as a warning, or an error under `strict`.
    pub fn align_to(&self, am: &AssociationMatrix, opts: LoadOptions) -> Result<Vec<Option<Vec<f64>>>> {
        let index: HashMap<&str, usize> = self
            .snorna_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut missing = Vec::new();
        let aligned: Vec<Option<Vec<f64>>> = am
            .snorna_ids()
            .iter()
            .map(|id| match index.get(id.as_str()) {
                Some(&i) => Some(self.features[i].clone()),
                None => {
                    missing.push(id.clone());
                    None
                }
            })
            .collect();
        let known: HashSet<&str> = am.snorna_ids().iter().map(|s| s.as_str()).collect();
        let extra: Vec<&String> = self
            .snorna_ids
            .iter()
            .filter(|s| !known.contains(s.as_str()))
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            let msg = format!(
                "feature table id mismatch: {} snoRNAs without features {:?}; {} feature rows not in association matrix {:?}",
                missing.len(),
                missing,
                extra.len(),
                extra
            );
            if opts.strict {
                return Err(SdaError::Data(msg));
            }
            warn!("{msg}");
        }
        Ok(aligned)
    }
}

/// Loads a feature table; `.tsv` files are tab-separated, anything else comma-separated.
pub fn load_feature_table(path: &Path) -> Result<FeatureTable> {
    let delim = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") => b'\t',
        _ => b',',
    };
    let grid = read_labeled_grid(path, delim)?;
    dedup_check(path, &grid.row_ids, "snoRNA")?;
    let mut features = Vec::with_capacity(grid.rows.len());
    for (r, (line, cells)) in grid.rows.iter().enumerate() {
        let mut row = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                SdaError::load(
                    path,
                    format!("line {line}: non-numeric cell '{cell}' at row {r}, column {c}"),
                )
            })?;
            if !v.is_finite() {
                return Err(SdaError::load(
                    path,
                    format!("line {line}: non-finite value at row {r}, column {c}"),
                ));
            }
            row.push(v);
        }
        features.push(row);
    }
    Ok(FeatureTable {
        snorna_ids: grid.row_ids,
        feature_names: grid.col_ids,
        features,
    })
}

/// Directed acyclic graph of disease terms; edges point child -> parent.
#[derive(Debug, Clone)]
pub struct DiseaseDag {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl DiseaseDag {
    /// Builds a DAG from (child, parent) edges. Nodes are ordered by first
    /// appearance, after any `manifest` nodes. With a manifest, edges naming
    /// unknown ids are rejected.
    pub fn from_edges(edges: &[(String, String)], manifest: Option<&[String]>) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        if let Some(m) = manifest {
            for id in m {
                if index.insert(id.clone(), nodes.len()).is_none() {
                    nodes.push(id.clone());
                }
            }
        }
        let mut intern = |id: &str, nodes: &mut Vec<String>| -> Result<usize> {
            if let Some(&i) = index.get(id) {
                return Ok(i);
            }
            if manifest.is_some() {
                return Err(SdaError::Data(format!("edge names unknown disease id '{id}'")));
            }
            index.insert(id.to_string(), nodes.len());
            nodes.push(id.to_string());
            Ok(nodes.len() - 1)
        };
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (c, p) in edges {
            let ci = intern(c, &mut nodes)?;
            let pi = intern(p, &mut nodes)?;
            idx_edges.push((ci, pi));
        }
        let index: HashMap<String, usize> =
            nodes.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (c, p) in idx_edges {
            if !parents[c].contains(&p) {
                parents[c].push(p);
                children[p].push(c);
            }
        }
        let dag = DiseaseDag {
            nodes,
            index,
            parents,
            children,
        };
        if let Some(cycle) = dag.find_cycle() {
            let names: Vec<&str> = cycle.iter().map(|&i| dag.nodes[i].as_str()).collect();
            return Err(SdaError::Data(format!("disease graph has a cycle: {}", names.join(" -> "))));
        }
        Ok(dag)
    }

    /// Returns one cycle (as a closed node walk) if the graph has any.
    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack_path: Vec<usize> = Vec::new();
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut work: Vec<(usize, usize)> = vec![(start, 0)];
            state[start] = 1;
            stack_path.push(start);
            while let Some(&mut (node, ref mut next)) = work.last_mut() {
                if *next < self.parents[node].len() {
                    let p = self.parents[node][*next];
                    *next += 1;
                    match state[p] {
                        0 => {
                            state[p] = 1;
                            stack_path.push(p);
                            work.push((p, 0));
                        }
                        1 => {
                            let from = stack_path.iter().position(|&x| x == p).unwrap();
                            let mut cycle = stack_path[from..].to_vec();
                            cycle.push(p);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                    stack_path.pop();
                    work.pop();
                }
            }
        }
        None
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Ancestor closure of `node`, including the node itself, in ascending index order.
    pub fn ancestor_indices(&self, node: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![node];
        seen[node] = true;
        while let Some(x) = stack.pop() {
            for &p in &self.parents[x] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        (0..self.nodes.len()).filter(|&i| seen[i]).collect()
    }

    /// Ancestor ids of `id`, including `id`.
    pub fn ancestors(&self, id: &str) -> Result<HashSet<String>> {
        let i = self
            .index_of(id)
            .ok_or_else(|| SdaError::Data(format!("unknown disease id '{id}'")))?;
        Ok(self
            .ancestor_indices(i)
            .into_iter()
            .map(|j| self.nodes[j].clone())
            .collect())
    }
}

/// Loads a headerless `child,parent` edge list.
pub fn load_disease_dag(path: &Path, manifest: Option<&[String]>) -> Result<DiseaseDag> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| SdaError::load(path, e.to_string()))?;
    let mut edges = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| SdaError::load(path, format!("line {}: {e}", i + 1)))?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != 2 {
            return Err(SdaError::load(
                path,
                format!("line {}: expected 'child,parent', got {} cells", i + 1, rec.len()),
            ));
        }
        edges.push((rec[0].trim().to_string(), rec[1].trim().to_string()));
    }
    DiseaseDag::from_edges(&edges, manifest).map_err(|e| SdaError::load(path, e.to_string()))
}

/// Sizes of a loaded dataset, as found in its files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    pub n_snornas: usize,
    pub n_diseases: usize,
    pub n_known: usize,
}

impl DatasetDescriptor {
    pub fn describe(name: impl Into<String>, am: &AssociationMatrix) -> Self {
        DatasetDescriptor {
            name: name.into(),
            n_snornas: am.n_snornas(),
            n_diseases: am.n_diseases(),
            n_known: am.n_known(),
        }
    }
}

/// Splits every cell into known (positive) and unknown (negative) pairs, row-major.
pub fn split_known_unknown(am: &AssociationMatrix) -> (Vec<Pair>, Vec<Pair>) {
    let mut pos = Vec::with_capacity(am.n_known());
    let mut neg = Vec::with_capacity(am.n_snornas() * am.n_diseases() - am.n_known());
    for s in 0..am.n_snornas() {
        for d in 0..am.n_diseases() {
            let p = Pair::new(s, d);
            if am.get(s, d) == 1 {
                pos.push(p);
            } else {
                neg.push(p);
            }
        }
    }
    (pos, neg)
}

/// Writes a labeled real matrix in the association-matrix CSV layout.
pub(crate) fn labeled_matrix_csv(corner: &str, row_ids: &[String], col_ids: &[String], cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from(corner);
    for c in col_ids {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (r, id) in row_ids.iter().enumerate() {
        out.push_str(id);
        for c in 0..col_ids.len() {
            out.push(',');
            out.push_str(&cell(r, c));
        }
        out.push('\n');
    }
    out
}

pub(crate) fn float_cell(v: f64) -> String {
    fmt_f64(v)
}
