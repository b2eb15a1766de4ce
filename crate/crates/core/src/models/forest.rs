//! Bootstrap random forest with majority voting.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{balanced_class_weights, fit_tree, Tree};
use super::ModelError;
use crate::dataset::Dataset;
use crate::flow::FeatureVector;
use crate::kv::{bad_value, KvFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitCriterion {
    Gini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeaturesRule {
    /// ceil(sqrt(n_features)) candidate features per node.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassWeight {
    Balanced,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub split_criterion: SplitCriterion,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeaturesRule,
    pub min_impurity_decrease: f64,
    pub class_weight: ClassWeight,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 10,
            split_criterion: SplitCriterion::Gini,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeaturesRule::Sqrt,
            min_impurity_decrease: 0.0,
            class_weight: ClassWeight::Balanced,
            seed: 0,
        }
    }
}

const FOREST_KEYS: [&str; 9] = [
    "model",
    "n_estimators",
    "split_criterion",
    "min_samples_split",
    "min_samples_leaf",
    "max_features",
    "min_impurity_decrease",
    "class_weight",
    "seed",
];

impl ForestConfig {
    pub fn from_kv(kv: &KvFile, default_seed: u64) -> Result<Self, ModelError> {
        kv.check_keys(&FOREST_KEYS)?;
        if let Some(model) = kv.get("model") {
            if model != "forest" {
                return Err(ModelError::BadConfig(format!(
                    "config declares model = {model:?}, expected forest"
                )));
            }
        }
        let mut config = ForestConfig {
            seed: default_seed,
            ..ForestConfig::default()
        };
        if let Some(v) = kv.parse_value::<usize>("n_estimators")? {
            config.n_estimators = v;
        }
        if let Some(v) = kv.parse_value::<usize>("min_samples_split")? {
            config.min_samples_split = v;
        }
        if let Some(v) = kv.parse_value::<usize>("min_samples_leaf")? {
            config.min_samples_leaf = v;
        }
        if let Some(v) = kv.parse_value::<f64>("min_impurity_decrease")? {
            config.min_impurity_decrease = v;
        }
        match kv.get("split_criterion") {
            None | Some("gini") => {}
            Some(other) => {
                return Err(bad_value("split_criterion", format!("unsupported: {other:?}")).into())
            }
        }
        match kv.get("max_features") {
            None | Some("sqrt") => {}
            Some(other) => {
                return Err(bad_value("max_features", format!("unsupported: {other:?}")).into())
            }
        }
        match kv.get("class_weight") {
            None | Some("balanced") => {}
            Some("uniform") => config.class_weight = ClassWeight::Uniform,
            Some(other) => {
                return Err(bad_value("class_weight", format!("unknown: {other:?}")).into())
            }
        }
        if let Some(v) = kv.parse_value::<u64>("seed")? {
            config.seed = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_estimators < 1 {
            return Err(ModelError::BadConfig("n_estimators must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(ModelError::BadConfig("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(ModelError::BadConfig("min_samples_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// A fitted forest: `n_estimators` trees, each trained on a bootstrap
/// sample of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Fits on raw rows and class-id targets. Balanced weights are computed
    /// once on the full training targets; each tree then draws a full-size
    /// bootstrap sample from an rng stream derived from (seed, tree index).
    pub fn fit(
        rows: &[FeatureVector],
        targets: &[u32],
        n_classes: usize,
        config: &ForestConfig,
    ) -> Result<Forest, ModelError> {
        config.validate()?;
        if rows.is_empty() || targets.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        if rows.len() != targets.len() {
            return Err(ModelError::DimensionMismatch {
                expected: rows.len(),
                got: targets.len(),
            });
        }
        let class_weights = match config.class_weight {
            ClassWeight::Balanced => balanced_class_weights(targets, n_classes),
            ClassWeight::Uniform => vec![1.0; n_classes],
        };
        let n = rows.len();
        let trees = (0..config.n_estimators)
            .into_par_iter()
            .map(|tree_index| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(tree_index as u64 + 1);
                let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let sample_rows: Vec<FeatureVector> =
                    indices.iter().map(|&i| rows[i]).collect();
                let sample_targets: Vec<u32> = indices.iter().map(|&i| targets[i]).collect();
                fit_tree(
                    &sample_rows,
                    &sample_targets,
                    n_classes,
                    &class_weights,
                    config,
                    &mut rng,
                )
            })
            .collect::<Result<Vec<Tree>, ModelError>>()?;
        Ok(Forest {
            config: config.clone(),
            n_classes,
            trees,
        })
    }

    /// Unweighted hard vote over the trees; ties break to the lowest class
    /// index.
    pub fn predict(&self, x: &FeatureVector) -> u32 {
        let mut votes = vec![0u32; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict(x) as usize] += 1;
        }
        vote_winner(&votes)
    }
}

/// Index of the largest vote count; ties break to the lowest index.
pub fn vote_winner(votes: &[u32]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[best] {
            best = i;
        }
    }
    best as u32
}

/// Fits a forest on a dataset's rows and targets.
pub fn fit_forest(train: &Dataset, config: &ForestConfig) -> Result<Forest, ModelError> {
    Forest::fit(&train.rows, &train.targets, train.scheme.n_classes(), config)
}

/// Predicts one vector, checking dimensionality.
pub fn predict_forest(forest: &Forest, vector: &[f64]) -> Result<u32, ModelError> {
    let arr: [f64; 10] = vector
        .try_into()
        .map_err(|_| ModelError::DimensionMismatch {
            expected: FeatureVector::DIM,
            got: vector.len(),
        })?;
    Ok(forest.predict(&FeatureVector(arr)))
}
