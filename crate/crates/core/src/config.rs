//! Pipeline configuration: a flat `key = value` text file.
//!
//! Lines starting with `#` are comments. Lists are comma-separated. Relative
//! paths resolve against the directory of the config file. Unknown keys are
//! rejected. [`PipelineConfig::to_text`] writes every effective value back
//! out in the same format.

use std::path::{Path, PathBuf};

use crate::boost::{GbdtParams, TreeParams};
use crate::error::{Result, SdaError};
use crate::eval::CvConfig;
use crate::svm::GammaSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Similarities (including GIP over the full association matrix) are
    /// computed once before cross-validation.
    PaperFaithful,
    /// GIP kernels are recomputed per fold from training positives only.
    StrictFolds,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::PaperFaithful => "paper-faithful",
            Mode::StrictFolds => "strict-folds",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "paper-faithful" => Ok(Mode::PaperFaithful),
            "strict-folds" => Ok(Mode::StrictFolds),
            other => Err(SdaError::Config(format!(
                "unknown mode '{other}' (paper-faithful | strict-folds)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub name: String,
    pub associations: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub snorna_similarity: Option<PathBuf>,
    pub disease_dag: Option<PathBuf>,
    pub disease_similarity: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub delta: f64,
    pub gamma_prime_snorna: f64,
    pub gamma_prime_disease: f64,
    pub k: Option<usize>,
    pub k_range: Option<Vec<usize>>,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub svm_c: Vec<f64>,
    pub svm_gamma: Vec<GammaSpec>,
    pub n_folds: usize,
    pub inner_folds: usize,
    pub smo_tol: f64,
    pub smo_max_passes: usize,
    pub seed: u64,
    pub mode: Mode,
    pub top_k: usize,
    pub holdout_fraction: f64,
    pub strict: bool,
}

pub const DEFAULT_K: usize = 20;

impl Default for PipelineConfig {
    fn default() -> Self {
        let cv = CvConfig::default();
        PipelineConfig {
            name: "dataset".into(),
            associations: None,
            features: None,
            snorna_similarity: None,
            disease_dag: None,
            disease_similarity: None,
            output_dir: PathBuf::from("sda-out"),
            delta: 0.5,
            gamma_prime_snorna: 1.0,
            gamma_prime_disease: 1.0,
            k: None,
            k_range: None,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-6,
            n_trees: 10,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 5,
            svm_c: cv.svm_c,
            svm_gamma: cv.svm_gamma,
            n_folds: 5,
            inner_folds: 5,
            smo_tol: 1e-3,
            smo_max_passes: 100,
            seed: 42,
            mode: Mode::PaperFaithful,
            top_k: 10,
            holdout_fraction: 0.1,
            strict: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| SdaError::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(SdaError::Config(format!("{key}: expected true/false, got '{other}'"))),
    }
}

/// `5,10,15` or `5..30:5` (inclusive, step 5).
fn parse_k_range(v: &str) -> Result<Vec<usize>> {
    if let Some((range, step)) = v.split_once(':') {
        if let Some((a, b)) = range.split_once("..") {
            let (a, b, s): (usize, usize, usize) =
                (parse_num("k_range", a)?, parse_num("k_range", b)?, parse_num("k_range", step)?);
            if s == 0 || a > b {
                return Err(SdaError::Config(format!("k_range: bad range '{v}'")));
            }
            return Ok((a..=b).step_by(s).collect());
        }
    }
    parse_list("k_range", v)
}

impl PipelineConfig {
    /// Applies one `key = value` setting. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let v = value.trim();
        let path = |v: &str| -> Option<PathBuf> {
            if v.is_empty() {
                None
            } else {
                let p = PathBuf::from(v);
                Some(if p.is_absolute() { p } else { base.join(p) })
            }
        };
        match key.trim() {
            "name" => self.name = v.to_string(),
            "associations" => self.associations = path(v),
            "features" => self.features = path(v),
            "snorna_similarity" => self.snorna_similarity = path(v),
            "disease_dag" => self.disease_dag = path(v),
            "disease_similarity" => self.disease_similarity = path(v),
            "output_dir" => self.output_dir = path(v).unwrap_or_else(|| base.join("sda-out")),
            "delta" => self.delta = parse_num(key, v)?,
            "gamma_prime_snorna" => self.gamma_prime_snorna = parse_num(key, v)?,
            "gamma_prime_disease" => self.gamma_prime_disease = parse_num(key, v)?,
            "k" => self.k = if v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "k_range" => self.k_range = if v.is_empty() { None } else { Some(parse_k_range(v)?) },
            "kmeans_max_iter" => self.kmeans_max_iter = parse_num(key, v)?,
            "kmeans_tol" => self.kmeans_tol = parse_num(key, v)?,
            "n_trees" => self.n_trees = parse_num(key, v)?,
            "learning_rate" => self.learning_rate = parse_num(key, v)?,
            "max_depth" => self.max_depth = parse_num(key, v)?,
            "min_samples_leaf" => self.min_samples_leaf = parse_num(key, v)?,
            "svm_c" => self.svm_c = parse_list(key, v)?,
            "svm_gamma" => {
                self.svm_gamma = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(GammaSpec::parse)
                    .collect::<Result<_>>()?
            }
            "n_folds" => self.n_folds = parse_num(key, v)?,
            "inner_folds" => self.inner_folds = parse_num(key, v)?,
            "smo_tol" => self.smo_tol = parse_num(key, v)?,
            "smo_max_passes" => self.smo_max_passes = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "mode" => self.mode = Mode::parse(v)?,
            "top_k" => self.top_k = parse_num(key, v)?,
            "holdout_fraction" => self.holdout_fraction = parse_num(key, v)?,
            "strict" => self.strict = parse_bool(key, v)?,
            other => return Err(SdaError::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig {
            output_dir: base.join("sda-out"),
            ..Default::default()
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SdaError::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            cfg.set(key, value, base)
                .map_err(|e| SdaError::Config(format!("line {}: {}", n + 1, strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SdaError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| SdaError::Config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Checks ranges and cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SdaError::Config(msg));
        if self.k.is_some() && self.k_range.is_some() {
            return bad("k and k_range are mutually exclusive".into());
        }
        if let Some(r) = &self.k_range {
            if r.is_empty() || r.contains(&0) {
                return bad("k_range must hold positive values".into());
            }
        }
        if self.k == Some(0) {
            return bad("k must be >= 1".into());
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        for (k, v) in [("gamma_prime_snorna", self.gamma_prime_snorna), ("gamma_prime_disease", self.gamma_prime_disease)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{k} must be positive"));
            }
        }
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1".into());
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be nonnegative".into());
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be >= 1".into());
        }
        if self.svm_c.is_empty() || self.svm_c.iter().any(|&c| !(c > 0.0)) {
            return bad("svm_c needs positive values".into());
        }
        if self.svm_gamma.is_empty() || self.svm_gamma.iter().any(|g| matches!(g, GammaSpec::Value(v) if !(*v > 0.0))) {
            return bad("svm_gamma needs positive values or 'auto'".into());
        }
        if self.n_folds < 2 || self.inner_folds < 2 {
            return bad("n_folds and inner_folds must be >= 2".into());
        }
        if !(self.smo_tol > 0.0) || self.smo_max_passes == 0 {
            return bad("smo_tol must be positive and smo_max_passes >= 1".into());
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1".into());
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return bad(format!("holdout_fraction must lie in (0, 0.5], got {}", self.holdout_fraction));
        }
        if self.kmeans_max_iter == 0 || !(self.kmeans_tol >= 0.0) {
            return bad("kmeans_max_iter must be >= 1 and kmeans_tol >= 0".into());
        }
        Ok(())
    }

    /// Cluster count when no range search is configured.
    pub fn effective_k(&self) -> usize {
        self.k.unwrap_or(DEFAULT_K)
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            n_folds: self.n_folds,
            seed: self.seed,
            gbdt: GbdtParams {
                n_trees: self.n_trees,
                learning_rate: self.learning_rate,
                tree: TreeParams {
                    max_depth: self.max_depth,
                    min_samples_leaf: self.min_samples_leaf,
                    lambda: 1e-6,
                },
            },
            svm_c: self.svm_c.clone(),
            svm_gamma: self.svm_gamma.clone(),
            inner_folds: self.inner_folds,
            smo_tol: self.smo_tol,
            smo_max_passes: self.smo_max_passes,
        }
    }

    /// Every effective setting, one `key = value` per line.
    pub fn to_text(&self) -> String {
        fn opt(p: &Option<PathBuf>) -> String {
            p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
        }
        fn join<T: std::fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let (k, k_range) = match &self.k_range {
            Some(r) => (String::new(), join(r)),
            None => (self.effective_k().to_string(), String::new()),
        };
        let lines = [
            ("name", self.name.clone()),
            ("associations", opt(&self.associations)),
            ("features", opt(&self.features)),
            ("snorna_similarity", opt(&self.snorna_similarity)),
            ("disease_dag", opt(&self.disease_dag)),
            ("disease_similarity", opt(&self.disease_similarity)),
            ("output_dir", self.output_dir.display().to_string()),
            ("delta", self.delta.to_string()),
            ("gamma_prime_snorna", self.gamma_prime_snorna.to_string()),
            ("gamma_prime_disease", self.gamma_prime_disease.to_string()),
            ("k", k),
            ("k_range", k_range),
            ("kmeans_max_iter", self.kmeans_max_iter.to_string()),
            ("kmeans_tol", self.kmeans_tol.to_string()),
            ("n_trees", self.n_trees.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("max_depth", self.max_depth.to_string()),
            ("min_samples_leaf", self.min_samples_leaf.to_string()),
            ("svm_c", join(&self.svm_c)),
            ("svm_gamma", join(&self.svm_gamma)),
            ("n_folds", self.n_folds.to_string()),
            ("inner_folds", self.inner_folds.to_string()),
            ("smo_tol", self.smo_tol.to_string()),
            ("smo_max_passes", self.smo_max_passes.to_string()),
            ("seed", self.seed.to_string()),
            ("mode", self.mode.as_str().to_string()),
            ("top_k", self.top_k.to_string()),
            ("holdout_fraction", self.holdout_fraction.to_string()),
            ("strict", self.strict.to_string()),
        ];
        let mut out = String::from("# effective configuration\n");
        for (k, v) in lines {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

fn strip_prefix(e: &SdaError) -> String {
    match e {
        SdaError::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let c = PipelineConfig::parse("", Path::new("/x")).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/x/sda-out"));
        assert_eq!(c, PipelineConfig { output_dir: "/x/sda-out".into(), ..Default::default() });
        c.validate().unwrap();
        assert_eq!(c.effective_k(), 20);
        assert_eq!(c.n_trees, 10);
        assert_eq!(c.delta, 0.5);
    }

    #[test]
    fn parses_values_and_resolves_paths() {
        let text = "# comment\nassociations = data/am.csv\nseed = 7\nk_range = 5..30:5\nsvm_gamma = auto, 0.5\nmode = strict-folds\n";
        let c = PipelineConfig::parse(text, Path::new("/base")).unwrap();
        assert_eq!(c.associations, Some(PathBuf::from("/base/data/am.csv")));
        assert_eq!(c.seed, 7);
        assert_eq!(c.k_range, Some(vec![5, 10, 15, 20, 25, 30]));
        assert_eq!(c.svm_gamma, vec![GammaSpec::InverseDim, GammaSpec::Value(0.5)]);
        assert_eq!(c.mode, Mode::StrictFolds);
    }

    #[test]
    fn rejects_unknown_keys_and_conflicts() {
        assert!(PipelineConfig::parse("colour = red\n", Path::new(".")).is_err());
        assert!(PipelineConfig::parse("seed\n", Path::new(".")).is_err());
        let c = PipelineConfig::parse("k = 10\nk_range = 5,10\n", Path::new(".")).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("mutually exclusive"));
        let c = PipelineConfig::parse("holdout_fraction = 0.0\n", Path::new(".")).unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::parse("top_k = 0\n", Path::new(".")).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn effective_text_round_trips() {
        let text = "associations = /d/am.csv\nfeatures = /d/f.tsv\nseed = 9\nk = 7\nsvm_c = 0.5,2\nlearning_rate = 0.05\nstrict = true\n";
        let c = PipelineConfig::parse(text, Path::new("/")).unwrap();
        let again = PipelineConfig::parse(&c.to_text(), Path::new("/")).unwrap();
        assert_eq!(again, c);
        let d = PipelineConfig::default();
        let d2 = PipelineConfig::parse(&d.to_text(), Path::new("")).unwrap();
        assert_eq!(d2.effective_k(), d.effective_k());
        assert_eq!(d2.to_text(), d.to_text());
    }
}
