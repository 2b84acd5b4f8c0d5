//! End-to-end workflows: prepare, evaluate, rank, run-all and the holdout
//! recovery check. Each `cmd_*` function writes its artifacts atomically
//! into the configured output directory.

use std::borrow::Cow;
use std::collections::HashSet;
use std::path::Path;

use log::{info, warn};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::gbdt_fit;
use crate::config::{Mode, PipelineConfig};
use crate::corpus::{
    load_association_matrix, load_disease_dag, load_feature_table, split_known_unknown, AssociationMatrix,
    DatasetDescriptor, LoadOptions, Pair,
};
use crate::error::{Result, SdaError};
use crate::eval::{fit_pipeline, roc_auc, run_cv, stratified_kfold, FittedPipeline, FixedFeatures, FoldFeatures, MetricsReport};
use crate::io::write_atomic;
use crate::sampling::{
    balanced_set, choose_k, feature_rows, kmeans, select_negatives, write_balanced_csv, KMeansParams, KScore, LabeledPair,
};
use crate::seed;
use crate::similarity::{
    disease_gip, disease_semantic_similarity, load_similarity_matrix, mesh_similarity, snorna_functional_similarity,
    snorna_gip, SimilarityMatrix,
};

/// Association matrix plus the two base (non-GIP) similarity matrices, all
/// in association-matrix order.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub am: AssociationMatrix,
    pub base_sfs: SimilarityMatrix,
    pub base_dss: SimilarityMatrix,
}

fn unavailable(ids: &[String]) -> SimilarityMatrix {
    SimilarityMatrix::from_pairwise(ids.to_vec(), |_, _| None)
}

/// Loads every configured input file.
pub fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs> {
    let opts = LoadOptions { strict: cfg.strict };
    let am_path = cfg
        .associations
        .as_ref()
        .ok_or_else(|| SdaError::Config("no association matrix configured (key 'associations')".into()))?;
    let am = load_association_matrix(am_path)?;
    am.require_positive()?;

    let base_sfs = if let Some(p) = &cfg.features {
        let ft = load_feature_table(p)?;
        let rows = ft.align_to(&am, opts)?;
        snorna_functional_similarity(am.snorna_ids(), &rows)
    } else if let Some(p) = &cfg.snorna_similarity {
        aligned(load_similarity_matrix(p)?, am.snorna_ids(), p, opts)?
    } else {
        warn!("no snoRNA features or similarity configured; using GIP similarity alone");
        unavailable(am.snorna_ids())
    };

    let base_dss = if let Some(p) = &cfg.disease_dag {
        let dag = load_disease_dag(p, None)?;
        let dss = disease_semantic_similarity(&dag, cfg.delta)?;
        aligned(dss, am.disease_ids(), p, opts)?
    } else if let Some(p) = &cfg.disease_similarity {
        aligned(load_similarity_matrix(p)?, am.disease_ids(), p, opts)?
    } else {
        warn!("no disease DAG or similarity configured; using GIP similarity alone");
        unavailable(am.disease_ids())
    };
    Ok(Inputs { am, base_sfs, base_dss })
}

fn aligned(m: SimilarityMatrix, ids: &[String], path: &Path, opts: LoadOptions) -> Result<SimilarityMatrix> {
    let have: HashSet<&str> = m.ids().iter().map(|s| s.as_str()).collect();
    let missing: Vec<&String> = ids.iter().filter(|id| !have.contains(id.as_str())).collect();
    if !missing.is_empty() {
        let msg = format!("{}: {} ids absent, scores unavailable: {:?}", path.display(), missing.len(), missing);
        if opts.strict {
            return Err(SdaError::load(path, msg));
        }
        warn!("{msg}");
    }
    Ok(m.aligned_to(ids))
}

/// Meshed similarities for an association matrix.
pub fn meshed(inputs_sfs: &SimilarityMatrix, inputs_dss: &SimilarityMatrix, am: &AssociationMatrix, cfg: &PipelineConfig) -> Result<(SimilarityMatrix, SimilarityMatrix)> {
    let msfs = mesh_similarity(inputs_sfs, &snorna_gip(am, cfg.gamma_prime_snorna)?)?;
    let mdss = mesh_similarity(inputs_dss, &disease_gip(am, cfg.gamma_prime_disease)?)?;
    Ok((msfs, mdss))
}

/// Output of the preparation stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub descriptor: DatasetDescriptor,
    pub am: AssociationMatrix,
    pub base_sfs: SimilarityMatrix,
    pub base_dss: SimilarityMatrix,
    pub msfs: SimilarityMatrix,
    pub mdss: SimilarityMatrix,
    pub balanced: Vec<LabeledPair>,
    pub k: usize,
    pub inertia: f64,
    pub k_scores: Vec<KScore>,
}

impl Prepared {
    pub fn balanced_rows(&self) -> Result<Vec<Vec<f64>>> {
        let pairs: Vec<Pair> = self.balanced.iter().map(|lp| lp.pair).collect();
        feature_rows(&self.msfs, &self.mdss, &pairs)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.balanced.iter().map(|lp| lp.label).collect()
    }
}

/// Cheap GBDT-only cross-validation used to compare cluster counts.
fn gbdt_cv_score(rows: &[Vec<f64>], labels: &[u8], cfg: &PipelineConfig, k: usize) -> Result<KScore> {
    let plan = stratified_kfold(labels, cfg.n_folds, seed::derive(cfg.seed, seed::CHOOSE_K))?;
    let params = cfg.cv_config().gbdt;
    let mut aucs = Vec::new();
    let mut mses = Vec::new();
    for f in 0..cfg.n_folds {
        let (train, test) = plan.split(f);
        let x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
        let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
        let model = gbdt_fit(&x, &y, params)?;
        let probs: Vec<f64> = test.iter().map(|&i| model.predict_proba(&rows[i])).collect();
        let yt: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
        aucs.push(roc_auc(&probs, &yt)?);
        mses.push(probs.iter().zip(&yt).map(|(p, &y)| (p - y as f64).powi(2)).sum::<f64>() / probs.len() as f64);
    }
    Ok(KScore {
        k,
        mean_auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
        mean_mse: mses.iter().sum::<f64>() / mses.len() as f64,
    })
}

/// Similarity fusion and clustered balancing for an association matrix.
pub fn prepare_from(am: &AssociationMatrix, base_sfs: &SimilarityMatrix, base_dss: &SimilarityMatrix, cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    am.require_positive()?;
    let (msfs, mdss) = meshed(base_sfs, base_dss, am, cfg)?;
    let (positives, negatives) = split_known_unknown(am);
    let neg_rows = feature_rows(&msfs, &mdss, &negatives)?;
    let select = |k: usize| -> Result<(Vec<LabeledPair>, f64)> {
        let clustering = kmeans(
            &neg_rows,
            KMeansParams {
                k,
                seed: seed::derive(cfg.seed, seed::KMEANS),
                max_iter: cfg.kmeans_max_iter,
                tol: cfg.kmeans_tol,
            },
        )?;
        if !clustering.converged {
            warn!("k-means (k = {k}) stopped at max_iter without converging");
        }
        let chosen = select_negatives(&clustering, &negatives, positives.len(), seed::derive(cfg.seed, seed::SELECT))?;
        Ok((balanced_set(&positives, &chosen), clustering.inertia))
    };

    let (k, k_scores) = match &cfg.k_range {
        Some(range) => {
            let (best, scores) = choose_k(range, |k| {
                let (set, _) = select(k)?;
                let pairs: Vec<Pair> = set.iter().map(|lp| lp.pair).collect();
                let rows = feature_rows(&msfs, &mdss, &pairs)?;
                let labels: Vec<u8> = set.iter().map(|lp| lp.label).collect();
                let s = gbdt_cv_score(&rows, &labels, cfg, k)?;
                info!("k = {k}: mean AUC {:.4}, mean MSE {:.4}", s.mean_auc, s.mean_mse);
                Ok(s)
            })?;
            (best, scores)
        }
        None => (cfg.effective_k(), Vec::new()),
    };
    let (balanced, inertia) = select(k)?;
    Ok(Prepared {
        descriptor: DatasetDescriptor::describe(cfg.name.clone(), am),
        am: am.clone(),
        base_sfs: base_sfs.clone(),
        base_dss: base_dss.clone(),
        msfs,
        mdss,
        balanced,
        k,
        inertia,
        k_scores,
    })
}

pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    let inputs = load_inputs(cfg)?;
    prepare_from(&inputs.am, &inputs.base_sfs, &inputs.base_dss, cfg)
}

/// Recomputes GIP kernels per fold with the test-fold positives hidden.
pub struct StrictFoldFeatures<'a> {
    pub prepared: &'a Prepared,
    pub cfg: &'a PipelineConfig,
}

impl FoldFeatures for StrictFoldFeatures<'_> {
    fn rows(&self, train: &[usize]) -> Result<Cow<'_, [Vec<f64>]>> {
        let p = self.prepared;
        let in_train: HashSet<usize> = train.iter().copied().collect();
        let mut am = p.am.clone();
        for (i, lp) in p.balanced.iter().enumerate() {
            if lp.label == 1 && !in_train.contains(&i) {
                am.set(lp.pair.snorna, lp.pair.disease, false);
            }
        }
        let (msfs, mdss) = meshed(&p.base_sfs, &p.base_dss, &am, self.cfg)?;
        let pairs: Vec<Pair> = p.balanced.iter().map(|lp| lp.pair).collect();
        Ok(Cow::Owned(feature_rows(&msfs, &mdss, &pairs)?))
    }
}

pub fn evaluate(prepared: &Prepared, cfg: &PipelineConfig) -> Result<MetricsReport> {
    let cv = cfg.cv_config();
    match cfg.mode {
        Mode::PaperFaithful => {
            let rows = FixedFeatures(prepared.balanced_rows()?);
            run_cv(&prepared.balanced, &rows, &cv, cfg.mode.as_str())
        }
        Mode::StrictFolds => {
            let strict = StrictFoldFeatures { prepared, cfg };
            run_cv(&prepared.balanced, &strict, &cv, cfg.mode.as_str())
        }
    }
}

/// One ranked candidate association.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub disease_id: String,
    pub snorna_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct Ranking {
    pub rows: Vec<RankedPrediction>,
    /// Diseases with no unknown pair left to rank.
    pub exhausted_diseases: Vec<String>,
    pub model: FittedPipeline,
}

impl Ranking {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("disease_id,snorna_id,score,rank\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{}\n", r.disease_id, r.snorna_id, r.score, r.rank));
        }
        out
    }
}

/// Fits the final model on the whole balanced set.
pub fn fit_final(prepared: &Prepared, cfg: &PipelineConfig) -> Result<FittedPipeline> {
    let rows = prepared.balanced_rows()?;
    fit_pipeline(&rows, &prepared.labels(), &cfg.cv_config(), seed::derive(cfg.seed, 999))
}

/// Decision values for every unknown pair, row-major.
pub fn score_unknown(prepared: &Prepared, model: &FittedPipeline) -> Result<(Vec<Pair>, Vec<f64>)> {
    let (_, unknown) = split_known_unknown(&prepared.am);
    let scores: Vec<f64> = unknown
        .par_chunks(512)
        .map(|chunk| {
            let rows = feature_rows(&prepared.msfs, &prepared.mdss, chunk)?;
            model.decisions(&rows)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok((unknown, scores))
}

/// Per-disease top-`top_k` unknown pairs by decision value.
pub fn rank(prepared: &Prepared, cfg: &PipelineConfig, top_k: usize) -> Result<Ranking> {
    if top_k < 1 {
        return Err(SdaError::Config("top_k must be >= 1".into()));
    }
    let model = fit_final(prepared, cfg)?;
    let (unknown, scores) = score_unknown(prepared, &model)?;
    let am = &prepared.am;
    let mut per_disease: Vec<Vec<(usize, f64)>> = vec![Vec::new(); am.n_diseases()];
    for (p, s) in unknown.iter().zip(&scores) {
        per_disease[p.disease].push((p.snorna, *s));
    }
    let mut order: Vec<usize> = (0..am.n_diseases()).collect();
    order.sort_by(|&a, &b| am.disease_ids()[a].cmp(&am.disease_ids()[b]));
    let mut rows = Vec::new();
    let mut exhausted = Vec::new();
    for d in order {
        let cands = &mut per_disease[d];
        if cands.is_empty() {
            exhausted.push(am.disease_ids()[d].clone());
            continue;
        }
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (r, &(s, score)) in cands.iter().take(top_k).enumerate() {
            rows.push(RankedPrediction {
                disease_id: am.disease_ids()[d].clone(),
                snorna_id: am.snorna_ids()[s].clone(),
                score,
                rank: r + 1,
            });
        }
    }
    Ok(Ranking {
        rows,
        exhausted_diseases: exhausted,
        model,
    })
}

/// Recovery of held-out known associations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub holdout_fraction: f64,
    pub seed: u64,
    pub top_k: usize,
    pub n_held_out: usize,
    pub n_evaluated: usize,
    pub excluded_diseases: Vec<String>,
    /// Mean over held-out pairs of the percentile of their score among the
    /// unknown pairs of the same disease.
    pub mean_percentile: f64,
    pub fraction_in_top_k: f64,
    pub pairs: Vec<HeldOutPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutPair {
    pub snorna_id: String,
    pub disease_id: String,
    pub score: f64,
    pub rank: usize,
    pub percentile: f64,
}

impl HoldoutReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Picks the held-out positives: `round(fraction * n_known)`, at least one.
pub fn choose_holdout(am: &AssociationMatrix, fraction: f64, seed_value: u64) -> Result<Vec<Pair>> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(SdaError::Config(format!("holdout fraction must lie in (0, 0.5], got {fraction}")));
    }
    let (positives, _) = split_known_unknown(am);
    let n = ((fraction * positives.len() as f64).round() as usize).max(1);
    if n >= positives.len() {
        return Err(SdaError::Data("holdout would remove every known association".into()));
    }
    let mut rng = seed::rng(seed::derive(seed_value, seed::HOLDOUT));
    let mut picked = index::sample(&mut rng, positives.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| positives[i]).collect())
}

/// Hides a fraction of the known associations, re-runs preparation and the
/// final fit, and measures where the hidden pairs land among each disease's
/// unknown pairs.
pub fn holdout_check(inputs: &Inputs, cfg: &PipelineConfig) -> Result<HoldoutReport> {
    let held = choose_holdout(&inputs.am, cfg.holdout_fraction, cfg.seed)?;
    let mut am = inputs.am.clone();
    for p in &held {
        am.set(p.snorna, p.disease, false);
    }
    let mut excluded = Vec::new();
    for d in 0..am.n_diseases() {
        let had = (0..am.n_snornas()).any(|s| inputs.am.get(s, d) == 1);
        let has = (0..am.n_snornas()).any(|s| am.get(s, d) == 1);
        if had && !has {
            warn!("holdout removed every positive of disease '{}'; excluded", am.disease_ids()[d]);
            excluded.push(am.disease_ids()[d].clone());
        }
    }
    let prepared = prepare_from(&am, &inputs.base_sfs, &inputs.base_dss, cfg)?;
    let model = fit_final(&prepared, cfg)?;
    let (unknown, scores) = score_unknown(&prepared, &model)?;
    let mut per_disease: Vec<Vec<f64>> = vec![Vec::new(); am.n_diseases()];
    for (p, &s) in unknown.iter().zip(&scores) {
        per_disease[p.disease].push(s);
    }
    let score_of: std::collections::HashMap<Pair, f64> = unknown.iter().copied().zip(scores.iter().copied()).collect();
    let excluded_set: HashSet<&str> = excluded.iter().map(|s| s.as_str()).collect();
    let mut pairs = Vec::new();
    for p in &held {
        let disease_id = &am.disease_ids()[p.disease];
        if excluded_set.contains(disease_id.as_str()) {
            continue;
        }
        let s = score_of[p];
        let others = &per_disease[p.disease];
        let below = others.iter().filter(|&&o| o < s).count() as f64;
        let ties = others.iter().filter(|&&o| o == s).count() as f64 - 1.0;
        let denom = (others.len() - 1).max(1) as f64;
        let above = others.iter().filter(|&&o| o > s).count();
        pairs.push(HeldOutPair {
            snorna_id: am.snorna_ids()[p.snorna].clone(),
            disease_id: disease_id.clone(),
            score: s,
            rank: above + 1,
            percentile: 100.0 * (below + 0.5 * ties) / denom,
        });
    }
    let n_eval = pairs.len();
    let mean_percentile = if n_eval == 0 {
        0.0
    } else {
        pairs.iter().map(|p| p.percentile).sum::<f64>() / n_eval as f64
    };
    let fraction_in_top_k = if n_eval == 0 {
        0.0
    } else {
        pairs.iter().filter(|p| p.rank <= cfg.top_k).count() as f64 / n_eval as f64
    };
    Ok(HoldoutReport {
        holdout_fraction: cfg.holdout_fraction,
        seed: cfg.seed,
        top_k: cfg.top_k,
        n_held_out: held.len(),
        n_evaluated: n_eval,
        excluded_diseases: excluded,
        mean_percentile,
        fraction_in_top_k,
        pairs,
    })
}

// ---- commands ----

fn out(cfg: &PipelineConfig, name: &str) -> std::path::PathBuf {
    cfg.output_dir.join(name)
}

fn write_effective_config(cfg: &PipelineConfig) -> Result<()> {
    write_atomic(&out(cfg, "effective-config.txt"), cfg.to_text().as_bytes())
}

/// Loads, fuses and balances; writes the meshed matrices, the balanced pair
/// list and the dataset descriptor.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    write_effective_config(cfg)?;
    let prepared = prepare(cfg)?;
    write_prepared(&prepared, cfg)?;
    Ok(prepared)
}

fn write_prepared(p: &Prepared, cfg: &PipelineConfig) -> Result<()> {
    p.msfs.write_csv(&out(cfg, "msfs.csv"))?;
    p.mdss.write_csv(&out(cfg, "mdss.csv"))?;
    write_balanced_csv(&out(cfg, "balanced.csv"), &p.am, &p.balanced)?;
    let desc = serde_json::json!({
        "descriptor": p.descriptor,
        "k": p.k,
        "inertia": p.inertia,
        "k_scores": p.k_scores,
        "n_balanced": p.balanced.len(),
    });
    write_atomic(&out(cfg, "descriptor.json"), serde_json::to_string_pretty(&desc).unwrap().as_bytes())
}

fn write_report(report: &MetricsReport, cfg: &PipelineConfig) -> Result<()> {
    write_atomic(&out(cfg, "report.json"), report.to_json().as_bytes())?;
    write_atomic(&out(cfg, "roc_points.csv"), report.roc_csv().as_bytes())?;
    write_atomic(&out(cfg, "pr_points.csv"), report.pr_csv().as_bytes())
}

fn write_ranking(r: &Ranking, cfg: &PipelineConfig) -> Result<()> {
    write_atomic(&out(cfg, "ranking.csv"), r.to_csv().as_bytes())?;
    write_atomic(&out(cfg, "gbdt.json"), r.model.gbdt.to_json().as_bytes())?;
    write_atomic(&out(cfg, "svm.json"), r.model.svm.to_json().as_bytes())
}

/// Prepares from raw inputs, cross-validates and writes the report and curves.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    write_effective_config(cfg)?;
    let prepared = prepare(cfg)?;
    let report = evaluate(&prepared, cfg)?;
    write_report(&report, cfg)?;
    Ok(report)
}

pub fn cmd_rank(cfg: &PipelineConfig) -> Result<Ranking> {
    cfg.validate()?;
    write_effective_config(cfg)?;
    let prepared = prepare(cfg)?;
    let ranking = rank(&prepared, cfg, cfg.top_k)?;
    write_ranking(&ranking, cfg)?;
    Ok(ranking)
}

/// Which stage of `run-all` failed.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: SdaError,
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage '{}' failed: {}", self.stage, self.error)
    }
}

pub struct RunAll {
    pub prepared: Prepared,
    pub report: MetricsReport,
    pub ranking: Ranking,
}

pub fn cmd_run_all(cfg: &PipelineConfig) -> std::result::Result<RunAll, StageError> {
    let stage = |stage: &'static str| move |error: SdaError| StageError { stage, error };
    cfg.validate().map_err(stage("config"))?;
    write_effective_config(cfg).map_err(stage("config"))?;
    let prepared = prepare(cfg).map_err(stage("prepare"))?;
    write_prepared(&prepared, cfg).map_err(stage("prepare"))?;
    let report = evaluate(&prepared, cfg).map_err(stage("evaluate"))?;
    write_report(&report, cfg).map_err(stage("evaluate"))?;
    let ranking = rank(&prepared, cfg, cfg.top_k).map_err(stage("rank"))?;
    write_ranking(&ranking, cfg).map_err(stage("rank"))?;
    Ok(RunAll {
        prepared,
        report,
        ranking,
    })
}

pub fn cmd_holdout(cfg: &PipelineConfig) -> Result<HoldoutReport> {
    cfg.validate()?;
    write_effective_config(cfg)?;
    let inputs = load_inputs(cfg)?;
    let report = holdout_check(&inputs, cfg)?;
    write_atomic(&out(cfg, "holdout.json"), report.to_json().as_bytes())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> AssociationMatrix {
        let s: Vec<String> = (0..6).map(|i| format!("s{i}")).collect();
        let d: Vec<String> = (0..3).map(|i| format!("d{i}")).collect();
        AssociationMatrix::from_rows(
            s,
            d,
            &[
                vec![1, 0, 0],
                vec![1, 0, 0],
                vec![0, 1, 0],
                vec![0, 1, 0],
                vec![0, 0, 1],
                vec![0, 0, 0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn holdout_selection_is_seeded() {
        let am = toy();
        let a = choose_holdout(&am, 0.2, 5).unwrap();
        assert_eq!(a, choose_holdout(&am, 0.2, 5).unwrap());
        assert_eq!(a.len(), 1);
        assert!(am.is_known(a[0]));
        assert!(choose_holdout(&am, 0.0, 5).is_err());
        assert!(choose_holdout(&am, 0.6, 5).is_err());
    }

    #[test]
    fn prepare_balances_exactly() {
        let am = toy();
        let cfg = PipelineConfig {
            k: Some(3),
            ..Default::default()
        };
        let none_s = unavailable(am.snorna_ids());
        let none_d = unavailable(am.disease_ids());
        let p = prepare_from(&am, &none_s, &none_d, &cfg).unwrap();
        assert_eq!(p.balanced.len(), 10);
        assert_eq!(p.labels().iter().filter(|&&l| l == 1).count(), 5);
        assert!(p.balanced.iter().all(|lp| am.is_known(lp.pair) == (lp.label == 1)));
        assert_eq!(p.balanced_rows().unwrap()[0].len(), 9);
    }
}
