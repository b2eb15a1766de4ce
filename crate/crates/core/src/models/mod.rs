//! From-scratch classifier engines: CART decision trees, a bootstrap
//! Random Forest and an exact KNN over a kd-tree index, each with
//! fit/predict and a versioned, checksummed file format.
//!
//! Fitting builds trees in parallel (per-tree seeded rng streams keep the
//! result deterministic); a fitted model is immutable and safe for
//! concurrent prediction.

mod forest;
mod knn;
mod store;
mod tree;

pub use forest::{fit_forest, predict_forest, vote_winner, ClassWeight, Forest, ForestConfig};
pub use knn::{
    brute_force_k_nearest, brute_force_predict, fit_knn, minkowski_distance, predict_knn, Knn,
    KnnConfig, KnnWeights,
};
pub use store::{load_model, save_model, Engine, ModelKind, TrainedModel, MODEL_FORMAT_VERSION};
pub use tree::{balanced_class_weights, fit_tree, gini_impurity, Tree, TreeNode};

use crate::kv::KvError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("cannot fit on an empty training set")]
    EmptyTrainingSet,
    #[error("k = {k} exceeds the {n} available training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("expected {expected}-component vector, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class counts are all zero")]
    AllZeroCounts,
    #[error("bad model config: {0}")]
    BadConfig(String),
    #[error("not a model file (bad magic)")]
    NotAModelFile,
    #[error("model format version {found} is not supported (expected {supported})")]
    VersionMismatch { found: u16, supported: u16 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Kv(#[from] KvError),
}
