use std::path::Path;

use sda_core::config::{Mode, PipelineConfig};
use sda_core::corpus::{load_association_matrix, load_feature_table};
use sda_core::pipeline::{cmd_holdout, cmd_prepare, cmd_run_all, evaluate, prepare};
use sda_core::sampling::load_balanced_csv;
use sda_core::similarity::load_similarity_matrix;
use sda_core::synth::{planted, write_dataset, PlantedParams};

fn small() -> PlantedParams {
    PlantedParams {
        n_snornas: 40,
        n_diseases: 12,
        n_blocks: 2,
        n_features: 6,
        seed: 11,
        ..Default::default()
    }
}

fn dataset(dir: &Path, extra: &str) -> PipelineConfig {
    let data = planted(small()).unwrap();
    let path = write_dataset(dir, &data, &format!("k = 5\ntop_k = 4\n{extra}")).unwrap();
    PipelineConfig::load(&path).unwrap()
}

#[test]
fn run_all_writes_every_artifact_and_ranks_only_unknown_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), "");
    let all = cmd_run_all(&cfg).unwrap();
    for name in [
        "effective-config.txt",
        "descriptor.json",
        "msfs.csv",
        "msfs.mask.csv",
        "mdss.csv",
        "balanced.csv",
        "report.json",
        "roc_points.csv",
        "pr_points.csv",
        "ranking.csv",
        "gbdt.json",
        "svm.json",
    ] {
        assert!(cfg.output_dir.join(name).is_file(), "{name} missing");
    }
    let am = load_association_matrix(cfg.associations.as_ref().unwrap()).unwrap();
    let ranking = std::fs::read_to_string(cfg.output_dir.join("ranking.csv")).unwrap();
    let mut lines = ranking.lines();
    assert_eq!(lines.next(), Some("disease_id,snorna_id,score,rank"));
    let mut per_disease = std::collections::BTreeMap::<String, Vec<(f64, usize)>>::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let s = am.snorna_ids().iter().position(|x| x == f[1]).unwrap();
        let d = am.disease_ids().iter().position(|x| x == f[0]).unwrap();
        assert_eq!(am.get(s, d), 0, "known pair {line} ranked");
        per_disease.entry(f[0].to_string()).or_default().push((f[2].parse().unwrap(), f[3].parse().unwrap()));
    }
    for rows in per_disease.values() {
        assert!(rows.len() <= 4);
        assert!(rows.windows(2).all(|w| w[0].0 >= w[1].0 && w[1].1 == w[0].1 + 1));
        assert_eq!(rows[0].1, 1);
    }
    assert!(all.report.mean_roc_auc > 0.8, "{}", all.report.mean_roc_auc);
    assert_eq!(all.report.oof_scores.len(), all.prepared.balanced.len());
}

#[test]
fn echoed_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), "");
    cmd_run_all(&cfg).unwrap();
    let echoed = cfg.output_dir.join("effective-config.txt");
    let mut again = PipelineConfig::load(&echoed).unwrap();
    assert_eq!(again.associations, cfg.associations);
    again.output_dir = dir.path().join("second");
    cmd_run_all(&again).unwrap();
    for name in ["report.json", "ranking.csv", "balanced.csv", "msfs.csv", "svm.json"] {
        let a = std::fs::read(cfg.output_dir.join(name)).unwrap();
        let b = std::fs::read(again.output_dir.join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn prepared_artifacts_reload() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), "");
    let p = cmd_prepare(&cfg).unwrap();
    let msfs = load_similarity_matrix(&cfg.output_dir.join("msfs.csv")).unwrap();
    assert_eq!(msfs, p.msfs);
    let balanced = load_balanced_csv(&cfg.output_dir.join("balanced.csv"), &p.am).unwrap();
    assert_eq!(balanced, p.balanced);
    let ft = load_feature_table(cfg.features.as_ref().unwrap()).unwrap();
    assert_eq!(ft.n_features(), 6);
}

#[test]
fn strict_folds_mode_runs_and_differs_from_fixed_features() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = dataset(dir.path(), "");
    let p = prepare(&cfg).unwrap();
    let fixed = evaluate(&p, &cfg).unwrap();
    cfg.mode = Mode::StrictFolds;
    let strict = evaluate(&p, &cfg).unwrap();
    assert_eq!(strict.mode, "strict-folds");
    assert_eq!(fixed.mode, "paper-faithful");
    assert_ne!(fixed.oof_scores, strict.oof_scores);
    assert!(strict.mean_roc_auc > 0.7);
}

#[test]
fn k_range_selection_reports_scores() {
    let dir = tempfile::tempdir().unwrap();
    let data = planted(small()).unwrap();
    let path = write_dataset(dir.path(), &data, "k_range = 2,4,6\n").unwrap();
    let cfg = PipelineConfig::load(&path).unwrap();
    let p = prepare(&cfg).unwrap();
    assert_eq!(p.k_scores.len(), 3);
    assert!([2, 4, 6].contains(&p.k));
    let best = p.k_scores.iter().find(|s| s.k == p.k).unwrap();
    assert!(p.k_scores.iter().all(|s| s.mean_auc <= best.mean_auc));
}

#[test]
fn holdout_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), "holdout_fraction = 0.1\n");
    let r = cmd_holdout(&cfg).unwrap();
    assert!(r.n_held_out >= 1);
    assert_eq!(r.n_evaluated, r.pairs.len());
    assert!(r.pairs.iter().all(|p| (0.0..=100.0).contains(&p.percentile) && p.rank >= 1));
    assert!(cfg.output_dir.join("holdout.json").is_file());
    assert!(r.mean_percentile > 60.0, "{}", r.mean_percentile);
}

#[test]
fn missing_inputs_are_reported_with_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::parse("associations = nope.csv\n", dir.path()).unwrap();
    let err = cmd_prepare(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("nope.csv"), "{err}");
    let err = cmd_prepare(&PipelineConfig::default()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
