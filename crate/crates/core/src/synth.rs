//! Planted block-structure datasets: snoRNAs and diseases fall into blocks,
//! associations are dense inside a block and rare outside it, snoRNA features
//! scatter around a per-block centroid and the disease DAG groups each
//! block's diseases under one shared term.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::corpus::{AssociationMatrix, FeatureTable};
use crate::error::{Result, SdaError};
use crate::io::write_atomic;
use crate::sampling::LabeledPair;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedParams {
    pub n_snornas: usize,
    pub n_diseases: usize,
    pub n_blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub n_features: usize,
    pub centroid_scale: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            n_snornas: 100,
            n_diseases: 30,
            n_blocks: 3,
            p_in: 0.8,
            p_out: 0.02,
            n_features: 16,
            centroid_scale: 2.0,
            noise: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub am: AssociationMatrix,
    pub features: FeatureTable,
    /// `(child, parent)` edges.
    pub dag_edges: Vec<(String, String)>,
    pub snorna_block: Vec<usize>,
    pub disease_block: Vec<usize>,
}

fn block_of(i: usize, n: usize, blocks: usize) -> usize {
    i * blocks / n
}

pub fn planted(p: PlantedParams) -> Result<Planted> {
    if p.n_blocks == 0 || p.n_blocks > p.n_snornas.min(p.n_diseases) {
        return Err(SdaError::Config(format!("n_blocks must lie in 1..={}", p.n_snornas.min(p.n_diseases))));
    }
    let mut rng = seed::rng(p.seed);
    let snorna_ids: Vec<String> = (0..p.n_snornas).map(|i| format!("SNORD{:03}", i + 1)).collect();
    let disease_ids: Vec<String> = (0..p.n_diseases).map(|j| format!("DIS{:03}", j + 1)).collect();
    let snorna_block: Vec<usize> = (0..p.n_snornas).map(|i| block_of(i, p.n_snornas, p.n_blocks)).collect();
    let disease_block: Vec<usize> = (0..p.n_diseases).map(|j| block_of(j, p.n_diseases, p.n_blocks)).collect();

    let mut entries = Vec::with_capacity(p.n_snornas * p.n_diseases);
    for &bs in &snorna_block {
        for &bd in &disease_block {
            let prob = if bs == bd { p.p_in } else { p.p_out };
            entries.push(rng.gen_bool(prob) as u8);
        }
    }
    let am = AssociationMatrix::new(snorna_ids.clone(), disease_ids.clone(), entries)?;

    let centroids: Vec<Vec<f64>> = (0..p.n_blocks)
        .map(|_| {
            (0..p.n_features)
                .map(|_| p.centroid_scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let features: Vec<Vec<f64>> = snorna_block
        .iter()
        .map(|&b| {
            centroids[b]
                .iter()
                .map(|c| c + p.noise * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let features = FeatureTable {
        snorna_ids,
        feature_names: (0..p.n_features).map(|f| format!("f{f}")).collect(),
        features,
    };

    let mut dag_edges = Vec::new();
    for b in 0..p.n_blocks {
        dag_edges.push((format!("BLOCK{b}"), "ROOT".to_string()));
    }
    for (id, &b) in disease_ids.iter().zip(&disease_block) {
        dag_edges.push((id.clone(), format!("BLOCK{b}")));
    }
    Ok(Planted {
        am,
        features,
        dag_edges,
        snorna_block,
        disease_block,
    })
}

fn feature_csv(ft: &FeatureTable) -> String {
    let mut out = String::from("snorna_id");
    for n in &ft.feature_names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (id, row) in ft.snorna_ids.iter().zip(&ft.features) {
        out.push_str(id);
        for v in row {
            out.push(',');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Writes `associations.csv`, `features.csv`, `dag.csv` and a `config.txt`
/// pointing at them; returns the config path.
pub fn write_dataset(dir: &Path, data: &Planted, extra_config: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| SdaError::io(dir, e))?;
    data.am.write_csv(&dir.join("associations.csv"))?;
    write_atomic(&dir.join("features.csv"), feature_csv(&data.features).as_bytes())?;
    let dag: String = data.dag_edges.iter().map(|(c, p)| format!("{c},{p}\n")).collect();
    write_atomic(&dir.join("dag.csv"), dag.as_bytes())?;
    let config = format!(
        "name = planted\nassociations = associations.csv\nfeatures = features.csv\ndisease_dag = dag.csv\noutput_dir = out\n{extra_config}"
    );
    let path = dir.join("config.txt");
    write_atomic(&path, config.as_bytes())?;
    Ok(path)
}

/// Same pairs with the labels shuffled among them.
pub fn permute_labels(set: &[LabeledPair], seed_value: u64) -> Vec<LabeledPair> {
    let mut labels: Vec<u8> = set.iter().map(|lp| lp.label).collect();
    labels.shuffle(&mut seed::rng(seed_value));
    set.iter()
        .zip(labels)
        .map(|(lp, label)| LabeledPair { pair: lp.pair, label })
        .collect()
}
