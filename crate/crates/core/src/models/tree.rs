//! CART decision tree with Gini impurity and per-node feature subsampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{forest::ForestConfig, ModelError};
use crate::flow::FeatureVector;

/// Weighted Gini impurity 1 - sum(p_c^2), where p_c is the weighted class
/// proportion count_c * weight_c normalized over the node. Lies in
/// [0, 1 - 1/C]; zero exactly for a pure node.
pub fn gini_impurity(class_counts: &[u64], class_weights: &[f64]) -> Result<f64, ModelError> {
    if class_counts.len() != class_weights.len() {
        return Err(ModelError::DimensionMismatch {
            expected: class_counts.len(),
            got: class_weights.len(),
        });
    }
    let total: f64 = class_counts
        .iter()
        .zip(class_weights)
        .map(|(&c, &w)| c as f64 * w)
        .sum();
    if total <= 0.0 {
        return Err(ModelError::AllZeroCounts);
    }
    let sum_sq: f64 = class_counts
        .iter()
        .zip(class_weights)
        .map(|(&c, &w)| {
            let p = c as f64 * w / total;
            p * p
        })
        .sum();
    Ok(1.0 - sum_sq)
}

/// Balanced class weights n / (C * n_c), with C the number of classes
/// actually present. Absent classes get weight 1.0; they never contribute.
pub fn balanced_class_weights(targets: &[u32], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0u64; n_classes];
    for &t in targets {
        counts[t as usize] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count();
    let n = targets.len() as f64;
    counts
        .iter()
        .map(|&c| {
            if c > 0 {
                n / (present as f64 * c as f64)
            } else {
                1.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: u8,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        /// Weighted class-probability vector.
        probs: Vec<f64>,
    },
}

/// One fitted CART tree, nodes in an arena with the root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_probs(&self, x: &FeatureVector) -> &[f64] {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                TreeNode::Leaf { probs } => return probs,
            }
        }
    }

    /// Class with the highest leaf probability; ties break to the lowest
    /// class index.
    pub fn predict(&self, x: &FeatureVector) -> u32 {
        argmax(self.leaf_probs(x))
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

pub(crate) fn argmax(values: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u32
}

/// Candidate features per node: ceil(sqrt(n_features)), sampled without
/// replacement.
fn sample_features(rng: &mut ChaCha8Rng, n_features: usize) -> Vec<usize> {
    let m = (n_features as f64).sqrt().ceil() as usize;
    let mut pool: Vec<usize> = (0..n_features).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n_features);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

struct NodeTask {
    slot: usize,
    rows: Vec<u32>,
}

/// Fits one CART tree by recursive best-split search.
///
/// At each node, ceil(sqrt(n_features)) candidate features are sampled
/// without replacement; the (feature, threshold) pair maximizing the
/// weighted impurity decrease wins, with thresholds taken as midpoints
/// between consecutive distinct sorted values. A node becomes a leaf when it
/// is pure, has fewer than `min_samples_split` rows, no split leaves both
/// children with at least `min_samples_leaf` rows, or the best decrease is
/// not above `min_impurity_decrease`.
pub fn fit_tree(
    rows: &[FeatureVector],
    targets: &[u32],
    n_classes: usize,
    class_weights: &[f64],
    config: &ForestConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Tree, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if rows.len() != targets.len() {
        return Err(ModelError::DimensionMismatch {
            expected: rows.len(),
            got: targets.len(),
        });
    }
    let root_weight: f64 = targets.iter().map(|&t| class_weights[t as usize]).sum();
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { probs: vec![] }];
    let mut stack = vec![NodeTask {
        slot: 0,
        rows: (0..rows.len() as u32).collect(),
    }];

    // explicit stack instead of recursion: chain-shaped trees would
    // otherwise overflow on large nodes
    while let Some(task) = stack.pop() {
        let node_rows = task.rows;
        let mut counts = vec![0u64; n_classes];
        for &r in &node_rows {
            counts[targets[r as usize] as usize] += 1;
        }
        let node_weight: f64 = counts
            .iter()
            .zip(class_weights)
            .map(|(&c, &w)| c as f64 * w)
            .sum();
        let probs: Vec<f64> = counts
            .iter()
            .zip(class_weights)
            .map(|(&c, &w)| c as f64 * w / node_weight)
            .collect();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

        let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)
        if !pure && node_rows.len() >= config.min_samples_split {
            let node_gini = gini_impurity(&counts, class_weights).expect("non-empty node");
            let candidates = sample_features(rng, FeatureVector::DIM);
            let mut sorted = node_rows.clone();
            for &feature in &candidates {
                sorted.sort_unstable_by(|&a, &b| {
                    rows[a as usize][feature]
                        .partial_cmp(&rows[b as usize][feature])
                        .expect("finite feature values")
                });
                let mut left_counts = vec![0u64; n_classes];
                let mut left_weight = 0.0f64;
                for split_at in 1..sorted.len() {
                    let prev = sorted[split_at - 1] as usize;
                    left_counts[targets[prev] as usize] += 1;
                    left_weight += class_weights[targets[prev] as usize];
                    let prev_value = rows[prev][feature];
                    let next_value = rows[sorted[split_at] as usize][feature];
                    if prev_value == next_value {
                        continue;
                    }
                    if split_at < config.min_samples_leaf
                        || sorted.len() - split_at < config.min_samples_leaf
                    {
                        continue;
                    }
                    let right_weight = node_weight - left_weight;
                    let mut left_sq = 0.0f64;
                    let mut right_sq = 0.0f64;
                    for c in 0..n_classes {
                        let lw = left_counts[c] as f64 * class_weights[c];
                        let rw = counts[c] as f64 * class_weights[c] - lw;
                        left_sq += (lw / left_weight) * (lw / left_weight);
                        right_sq += (rw / right_weight) * (rw / right_weight);
                    }
                    let left_gini = 1.0 - left_sq;
                    let right_gini = 1.0 - right_sq;
                    let decrease = node_weight / root_weight
                        * (node_gini
                            - left_weight / node_weight * left_gini
                            - right_weight / node_weight * right_gini);
                    if best.is_none_or(|(d, _, _)| decrease > d) {
                        let threshold = prev_value + (next_value - prev_value) / 2.0;
                        best = Some((decrease, feature, threshold));
                    }
                }
            }
        }

        match best {
            Some((decrease, feature, threshold)) if decrease > config.min_impurity_decrease => {
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = node_rows
                    .iter()
                    .partition(|&&r| rows[r as usize][feature] <= threshold);
                let left = nodes.len() as u32;
                let right = left + 1;
                nodes.push(TreeNode::Leaf { probs: vec![] });
                nodes.push(TreeNode::Leaf { probs: vec![] });
                nodes[task.slot] = TreeNode::Split {
                    feature: feature as u8,
                    threshold,
                    left,
                    right,
                };
                stack.push(NodeTask {
                    slot: right as usize,
                    rows: right_rows,
                });
                stack.push(NodeTask {
                    slot: left as usize,
                    rows: left_rows,
                });
            }
            _ => {
                nodes[task.slot] = TreeNode::Leaf { probs };
            }
        }
    }
    Ok(Tree { nodes })
}
