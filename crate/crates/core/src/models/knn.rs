//! Exact k-nearest-neighbours classifier over a kd-tree index.
//!
//! The index is an accelerator, never an approximation: for any query it
//! returns exactly the neighbours an exhaustive scan would, including the
//! documented tie ranking (equal distances rank by training-row index).

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::ModelError;
use crate::dataset::Dataset;
use crate::flow::FeatureVector;
use crate::kv::{bad_value, KvFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnnWeights {
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub weights: KnnWeights,
    pub leaf_size: usize,
    /// Minkowski exponent; p = 2 is Euclidean, p = 1 Manhattan.
    pub minkowski_p: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 3,
            weights: KnnWeights::Uniform,
            leaf_size: 30,
            minkowski_p: 2.0,
        }
    }
}

const KNN_KEYS: [&str; 5] = ["model", "k", "weights", "leaf_size", "minkowski_p"];

impl KnnConfig {
    pub fn from_kv(kv: &KvFile) -> Result<Self, ModelError> {
        kv.check_keys(&KNN_KEYS)?;
        if let Some(model) = kv.get("model") {
            if model != "knn" {
                return Err(ModelError::BadConfig(format!(
                    "config declares model = {model:?}, expected knn"
                )));
            }
        }
        let mut config = KnnConfig::default();
        if let Some(v) = kv.parse_value::<usize>("k")? {
            config.k = v;
        }
        if let Some(v) = kv.parse_value::<usize>("leaf_size")? {
            config.leaf_size = v;
        }
        if let Some(v) = kv.parse_value::<f64>("minkowski_p")? {
            config.minkowski_p = v;
        }
        match kv.get("weights") {
            None | Some("uniform") => {}
            Some(other) => {
                return Err(bad_value("weights", format!("unsupported: {other:?}")).into())
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.k < 1 {
            return Err(ModelError::BadConfig("k must be >= 1".into()));
        }
        if self.leaf_size < 1 {
            return Err(ModelError::BadConfig("leaf_size must be >= 1".into()));
        }
        if self.minkowski_p.is_nan() || self.minkowski_p < 1.0 {
            return Err(ModelError::BadConfig("minkowski_p must be >= 1".into()));
        }
        Ok(())
    }
}

/// Minkowski distance (sum_i |u_i - v_i|^p)^(1/p).
pub fn minkowski_distance(u: &[f64], v: &[f64], p: f64) -> Result<f64, ModelError> {
    if u.len() != v.len() {
        return Err(ModelError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    if p.is_nan() || p < 1.0 {
        return Err(ModelError::BadConfig("minkowski_p must be >= 1".into()));
    }
    Ok(minkowski(u, v, p))
}

#[inline]
fn minkowski(u: &[f64], v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        let mut sum = 0.0;
        for i in 0..u.len() {
            let d = u[i] - v[i];
            sum += d * d;
        }
        sum.sqrt()
    } else if p == 1.0 {
        let mut sum = 0.0;
        for i in 0..u.len() {
            sum += (u[i] - v[i]).abs();
        }
        sum
    } else {
        let mut sum = 0.0;
        for i in 0..u.len() {
            sum += (u[i] - v[i]).abs().powf(p);
        }
        sum.powf(1.0 / p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum KdNode {
    Leaf {
        start: u32,
        len: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Fitted KNN: the training vectors and labels plus the kd-tree over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub config: KnnConfig,
    pub n_classes: usize,
    points: Vec<FeatureVector>,
    labels: Vec<u32>,
    nodes: Vec<KdNode>,
    /// Point indices, permuted so each kd leaf owns a contiguous range.
    order: Vec<u32>,
}

// (distance, training-row index), max-heap by lexicographic order so the
// heap keeps the k smallest pairs
#[derive(PartialEq)]
struct Candidate {
    dist: f64,
    idx: u32,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .partial_cmp(&other.dist)
            .expect("finite distances")
            .then(self.idx.cmp(&other.idx))
    }
}

impl Knn {
    /// Builds the index: axis-aligned recursive partition, splitting the
    /// widest axis at its median until leaves hold at most `leaf_size`
    /// points.
    pub fn fit(
        points: Vec<FeatureVector>,
        labels: Vec<u32>,
        n_classes: usize,
        config: &KnnConfig,
    ) -> Result<Knn, ModelError> {
        config.validate()?;
        if points.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        if points.len() != labels.len() {
            return Err(ModelError::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if config.k > points.len() {
            return Err(ModelError::KTooLarge {
                k: config.k,
                n: points.len(),
            });
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(&points, &mut order, &mut nodes, 0, points.len(), config.leaf_size);
        Ok(Knn {
            config: config.clone(),
            n_classes,
            points,
            labels,
            nodes,
            order,
        })
    }

    /// The k nearest training points, ranked by (distance, row index).
    pub fn k_nearest(&self, query: &FeatureVector) -> Vec<(f64, u32)> {
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(self.config.k + 1);
        self.search(0, query, &mut heap);
        let mut out: Vec<(f64, u32)> = heap.into_iter().map(|c| (c.dist, c.idx)).collect();
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        out
    }

    fn search(&self, node: u32, query: &FeatureVector, heap: &mut BinaryHeap<Candidate>) {
        match &self.nodes[node as usize] {
            KdNode::Leaf { start, len } => {
                for &idx in &self.order[*start as usize..(*start + *len) as usize] {
                    let dist = minkowski(
                        query.as_slice(),
                        self.points[idx as usize].as_slice(),
                        self.config.minkowski_p,
                    );
                    heap.push(Candidate { dist, idx });
                    if heap.len() > self.config.k {
                        heap.pop();
                    }
                }
            }
            KdNode::Split {
                axis,
                value,
                left,
                right,
            } => {
                let (near, far) = if query[*axis as usize] <= *value {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.search(near, query, heap);
                // the axis gap lower-bounds the Minkowski distance to any
                // far-side point for every p >= 1; equality must still be
                // visited because a lower row index could win the tie
                let gap = (query[*axis as usize] - value).abs();
                let must_visit = heap.len() < self.config.k
                    || gap <= heap.peek().expect("non-empty heap").dist;
                if must_visit {
                    self.search(far, query, heap);
                }
            }
        }
    }

    /// Majority class among the k nearest. Class-frequency ties break to
    /// the tied class whose nearest member is closest, then to the lowest
    /// class index.
    pub fn predict(&self, query: &FeatureVector) -> u32 {
        classify(&self.k_nearest(query), &self.labels, self.n_classes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn build_node(
    points: &[FeatureVector],
    order: &mut [u32],
    nodes: &mut Vec<KdNode>,
    start: usize,
    end: usize,
    leaf_size: usize,
) -> u32 {
    let slot = nodes.len() as u32;
    let len = end - start;
    if len <= leaf_size {
        nodes.push(KdNode::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return slot;
    }
    // widest axis; all-equal regions degenerate to a leaf
    let mut best_axis = 0usize;
    let mut best_spread = 0.0f64;
    #[allow(clippy::needless_range_loop)]
    for axis in 0..FeatureVector::DIM {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &idx in &order[start..end] {
            let v = points[idx as usize][axis];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let spread = hi - lo;
        if spread > best_spread {
            best_spread = spread;
            best_axis = axis;
        }
    }
    if best_spread == 0.0 {
        nodes.push(KdNode::Leaf {
            start: start as u32,
            len: len as u32,
        });
        return slot;
    }
    order[start..end].sort_unstable_by(|&a, &b| {
        points[a as usize][best_axis]
            .partial_cmp(&points[b as usize][best_axis])
            .expect("finite feature values")
            .then(a.cmp(&b))
    });
    let mid = start + len / 2;
    let value = points[order[mid] as usize][best_axis];
    nodes.push(KdNode::Leaf { start: 0, len: 0 }); // placeholder
    let left = build_node(points, order, nodes, start, mid, leaf_size);
    let right = build_node(points, order, nodes, mid, end, leaf_size);
    nodes[slot as usize] = KdNode::Split {
        axis: best_axis as u8,
        value,
        left,
        right,
    };
    slot
}

/// Vote among ranked neighbours. Shared by the indexed and brute-force
/// paths so both apply the identical tie policy.
fn classify(neighbours: &[(f64, u32)], labels: &[u32], n_classes: usize) -> u32 {
    let mut counts = vec![0u32; n_classes];
    let mut nearest = vec![f64::INFINITY; n_classes];
    for &(dist, idx) in neighbours {
        let class = labels[idx as usize] as usize;
        counts[class] += 1;
        if dist < nearest[class] {
            nearest[class] = dist;
        }
    }
    let mut best = 0usize;
    for c in 1..n_classes {
        let better = counts[c] > counts[best]
            || (counts[c] == counts[best] && counts[c] > 0 && nearest[c] < nearest[best]);
        if better {
            best = c;
        }
    }
    best as u32
}

/// Exhaustive-scan oracle: ranks every training point by (distance, row
/// index) and votes over the first k. Independent of the kd-tree traversal.
pub fn brute_force_predict(
    points: &[FeatureVector],
    labels: &[u32],
    n_classes: usize,
    query: &FeatureVector,
    k: usize,
    p: f64,
) -> u32 {
    let mut ranked: Vec<(f64, u32)> = points
        .iter()
        .enumerate()
        .map(|(idx, point)| (minkowski(query.as_slice(), point.as_slice(), p), idx as u32))
        .collect();
    ranked.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    ranked.truncate(k);
    classify(&ranked, labels, n_classes)
}

/// Same ranking as [`brute_force_predict`], exposed for the exactness
/// checks that compare neighbour multisets.
pub fn brute_force_k_nearest(
    points: &[FeatureVector],
    query: &FeatureVector,
    k: usize,
    p: f64,
) -> Vec<(f64, u32)> {
    let mut ranked: Vec<(f64, u32)> = points
        .iter()
        .enumerate()
        .map(|(idx, point)| (minkowski(query.as_slice(), point.as_slice(), p), idx as u32))
        .collect();
    ranked.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    ranked.truncate(k);
    ranked
}

/// Fits a KNN on a dataset's rows and targets.
pub fn fit_knn(train: &Dataset, config: &KnnConfig) -> Result<Knn, ModelError> {
    Knn::fit(
        train.rows.clone(),
        train.targets.clone(),
        train.scheme.n_classes(),
        config,
    )
}

/// Predicts one vector, checking dimensionality.
pub fn predict_knn(knn: &Knn, vector: &[f64]) -> Result<u32, ModelError> {
    let arr: [f64; 10] = vector
        .try_into()
        .map_err(|_| ModelError::DimensionMismatch {
            expected: FeatureVector::DIM,
            got: vector.len(),
        })?;
    Ok(knn.predict(&FeatureVector(arr)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> (Vec<FeatureVector>, Vec<u32>) {
        let points = (0..n)
            .map(|_| {
                let mut v = [0.0f64; 10];
                for slot in v.iter_mut() {
                    // coarse grid forces plenty of exact distance ties
                    *slot = rng.gen_range(0u32..4) as f64 / 4.0;
                }
                FeatureVector(v)
            })
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0u32..3)).collect();
        (points, labels)
    }

    #[test]
    fn minkowski_examples() {
        let origin = [0.0, 0.0];
        let p34 = [3.0, 4.0];
        assert_eq!(minkowski_distance(&origin, &origin, 2.0).unwrap(), 0.0);
        assert_eq!(minkowski_distance(&origin, &p34, 2.0).unwrap(), 5.0);
        assert_eq!(minkowski_distance(&origin, &p34, 1.0).unwrap(), 7.0);
        assert!(minkowski_distance(&[0.0], &[0.0, 1.0], 2.0).is_err());
        assert!(minkowski_distance(&origin, &p34, 0.5).is_err());
    }

    #[test]
    fn single_leaf_index_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (points, labels) = random_points(&mut rng, 25);
        let config = KnnConfig::default(); // leaf_size 30 > 25
        let knn = Knn::fit(points.clone(), labels.clone(), 3, &config).unwrap();
        assert_eq!(knn.nodes.len(), 1);
        for _ in 0..30 {
            let mut q = [0.0f64; 10];
            for slot in q.iter_mut() {
                *slot = rng.gen();
            }
            let q = FeatureVector(q);
            assert_eq!(
                knn.predict(&q),
                brute_force_predict(&points, &labels, 3, &q, 3, 2.0)
            );
        }
    }

    #[test]
    fn duplicate_points_are_retained() {
        let points = vec![FeatureVector([0.5; 10]); 10];
        let labels: Vec<u32> = (0..10).map(|i| u32::from(i >= 5)).collect();
        let knn = Knn::fit(points, labels, 2, &KnnConfig { k: 9, leaf_size: 2, ..KnnConfig::default() }).unwrap();
        assert_eq!(knn.len(), 10);
        // nine zero-distance ties rank by row index: five of class 0, four
        // of class 1
        let neighbours = knn.k_nearest(&FeatureVector([0.5; 10]));
        assert_eq!(neighbours.len(), 9);
        assert!(neighbours.iter().all(|&(d, _)| d == 0.0));
        let idx: Vec<u32> = neighbours.iter().map(|&(_, i)| i).collect();
        assert_eq!(idx, (0..9).collect::<Vec<u32>>());
        assert_eq!(knn.predict(&FeatureVector([0.5; 10])), 0);
    }

    #[test]
    fn k_of_one_returns_nearest_class() {
        let points = vec![
            FeatureVector([0.0; 10]),
            FeatureVector([1.0; 10]),
        ];
        let labels = vec![0, 1];
        let knn = Knn::fit(points, labels, 2, &KnnConfig { k: 1, ..KnnConfig::default() }).unwrap();
        let mut near_one = [0.9f64; 10];
        near_one[0] = 0.8;
        assert_eq!(knn.predict(&FeatureVector(near_one)), 1);
        assert_eq!(knn.predict(&FeatureVector([0.1; 10])), 0);
    }

    #[test]
    fn majority_vote_and_frequency_tie_rules() {
        // neighbours at distances 1, 2, 3 with classes [1, 1, 0] -> 1
        let labels = vec![0, 1, 1];
        assert_eq!(classify(&[(1.0, 1), (2.0, 2), (3.0, 0)], &labels, 2), 1);
        // 1-1 frequency tie: class of the closer neighbour wins
        assert_eq!(classify(&[(1.0, 2), (2.0, 0)], &labels, 2), 1);
        assert_eq!(classify(&[(1.0, 0), (2.0, 2)], &labels, 2), 0);
        // exact tie in both frequency and nearest distance: lowest index
        assert_eq!(classify(&[(1.0, 0), (1.0, 2)], &labels, 2), 0);
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let points = vec![FeatureVector([0.0; 10]); 2];
        let result = Knn::fit(points, vec![0, 1], 2, &KnnConfig { k: 3, ..KnnConfig::default() });
        assert!(matches!(result, Err(ModelError::KTooLarge { k: 3, n: 2 })));
    }

    #[test]
    fn refit_gives_identical_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (points, labels) = random_points(&mut rng, 200);
        let config = KnnConfig { leaf_size: 8, ..KnnConfig::default() };
        let a = Knn::fit(points.clone(), labels.clone(), 3, &config).unwrap();
        let b = Knn::fit(points, labels, 3, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn indexed_search_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..10 {
            let n = 50 + trial * 37;
            let (points, labels) = random_points(&mut rng, n);
            for &(k, p) in &[(1usize, 2.0f64), (3, 2.0), (5, 1.0), (4, 3.0)] {
                let config = KnnConfig {
                    k,
                    leaf_size: 1 + trial,
                    minkowski_p: p,
                    ..KnnConfig::default()
                };
                let knn = Knn::fit(points.clone(), labels.clone(), 3, &config).unwrap();
                for _ in 0..20 {
                    let mut q = [0.0f64; 10];
                    for slot in q.iter_mut() {
                        *slot = rng.gen_range(0u32..5) as f64 / 4.0;
                    }
                    let q = FeatureVector(q);
                    let indexed = knn.k_nearest(&q);
                    let scanned = brute_force_k_nearest(&points, &q, k, p);
                    assert_eq!(indexed, scanned);
                    assert_eq!(
                        knn.predict(&q),
                        brute_force_predict(&points, &labels, 3, &q, k, p)
                    );
                }
            }
        }
    }

    #[test]
    fn knn_config_parsing() {
        let kv = KvFile::parse("model = knn\nk = 5\nleaf_size = 10\nminkowski_p = 1\n").unwrap();
        let config = KnnConfig::from_kv(&kv).unwrap();
        assert_eq!(config.k, 5);
        assert_eq!(config.leaf_size, 10);
        assert_eq!(config.minkowski_p, 1.0);
        assert!(KnnConfig::from_kv(&KvFile::parse("k = 0\n").unwrap()).is_err());
        assert!(KnnConfig::from_kv(&KvFile::parse("weights = distance\n").unwrap()).is_err());
    }
}
