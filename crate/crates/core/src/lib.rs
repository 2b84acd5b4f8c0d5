//! Prediction of snoRNA-disease associations.
//!
//! The pipeline fuses snoRNA functional similarity and disease semantic
//! similarity with Gaussian interaction profile kernels, balances known
//! associations against clustered unknown pairs, re-encodes each pair through
//! the leaves of a small gradient-boosted tree ensemble and classifies the
//! leaf encodings with a soft-margin RBF support vector machine.
//!
//! Modules map onto pipeline stages:
//!
//! - [`corpus`]: input loading, validation and id alignment
//! - [`similarity`]: cosine, semantic (DAG), GIP and meshed similarities
//! - [`sampling`]: pair features, k-means and proportional negative selection
//! - [`boost`]: logistic-loss GBDT and leaf one-hot encoding
//! - [`svm`]: RBF kernel, SMO training and grid search
//! - [`eval`]: stratified folds, ROC-AUC / AUPRC and cross-validation
//! - [`pipeline`]: configuration and the prepare / evaluate / rank / holdout workflows

pub mod boost;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod pipeline;
pub mod sampling;
pub mod seed;
pub mod similarity;
pub mod svm;
pub mod synth;

pub use error::{Result, SdaError};

/// Logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
