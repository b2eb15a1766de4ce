//! Encoded datasets: feature rows, a target column under exactly one label
//! scheme, and the fitted encoder/scaler state that produced them.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::flow::{AttackTypeLabel, BinaryClassLabel, FeatureVector, RawFlow};

/// Which label column a dataset (and a model trained on it) targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetScheme {
    /// Five-way `class` remapped to {normal, attack}.
    ClassBinary,
    /// The `attackType` column: benign plus four attack categories.
    AttackType,
}

impl TargetScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetScheme::ClassBinary => "class_binary",
            TargetScheme::AttackType => "attack_type",
        }
    }

    pub fn parse(token: &str) -> Option<TargetScheme> {
        match token {
            "class_binary" => Some(TargetScheme::ClassBinary),
            "attack_type" => Some(TargetScheme::AttackType),
            _ => None,
        }
    }

    /// Class list in fixed order. Class ids used by datasets, models and
    /// confusion matrices index into this list.
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            TargetScheme::ClassBinary => &["normal", "attack"],
            TargetScheme::AttackType => &["none", "bruteForce", "dos", "pingScan", "portScan"],
        }
    }

    pub fn n_classes(self) -> usize {
        self.class_names().len()
    }

    /// Class id of a flow under this scheme.
    pub fn target_of(self, flow: &RawFlow) -> u32 {
        match self {
            TargetScheme::ClassBinary => {
                match crate::preprocess::map_class_to_binary(flow.class_label) {
                    BinaryClassLabel::Normal => 0,
                    BinaryClassLabel::Attack => 1,
                }
            }
            TargetScheme::AttackType => match flow.attack_type {
                AttackTypeLabel::None => 0,
                AttackTypeLabel::BruteForce => 1,
                AttackTypeLabel::Dos => 2,
                AttackTypeLabel::PingScan => 3,
                AttackTypeLabel::PortScan => 4,
            },
        }
    }
}

impl std::fmt::Display for TargetScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four categorical features of the ten-feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CategoricalFeature {
    SrcIp,
    DstIp,
    Proto,
    Flags,
}

impl CategoricalFeature {
    pub const ALL: [CategoricalFeature; 4] = [
        CategoricalFeature::SrcIp,
        CategoricalFeature::DstIp,
        CategoricalFeature::Proto,
        CategoricalFeature::Flags,
    ];

    /// Position of this feature in the feature-vector component order.
    pub fn feature_index(self) -> usize {
        match self {
            CategoricalFeature::SrcIp => 0,
            CategoricalFeature::DstIp => 2,
            CategoricalFeature::Proto => 4,
            CategoricalFeature::Flags => 5,
        }
    }

    fn slot(self) -> usize {
        match self {
            CategoricalFeature::SrcIp => 0,
            CategoricalFeature::DstIp => 1,
            CategoricalFeature::Proto => 2,
            CategoricalFeature::Flags => 3,
        }
    }

    pub fn token_of(self, flow: &RawFlow) -> &str {
        match self {
            CategoricalFeature::SrcIp => &flow.src_ip,
            CategoricalFeature::DstIp => &flow.dst_ip,
            CategoricalFeature::Proto => &flow.proto,
            CategoricalFeature::Flags => &flow.flags,
        }
    }
}

/// Per-categorical-feature mapping token -> integer code, assigned by order
/// of first appearance starting at 0.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncoderState {
    maps: [IndexMap<String, u32>; 4],
}

impl EncoderState {
    pub(crate) fn insert(&mut self, feature: CategoricalFeature, token: &str) {
        let map = &mut self.maps[feature.slot()];
        if !map.contains_key(token) {
            let code = map.len() as u32;
            map.insert(token.to_string(), code);
        }
    }

    /// Code for a token. Unseen tokens map to one past the largest fitted
    /// code, so they never collide with a fitted category.
    pub fn code(&self, feature: CategoricalFeature, token: &str) -> u32 {
        let map = &self.maps[feature.slot()];
        map.get(token).copied().unwrap_or(map.len() as u32)
    }

    /// Number of distinct tokens fitted for a feature.
    pub fn cardinality(&self, feature: CategoricalFeature) -> usize {
        self.maps[feature.slot()].len()
    }
}

/// Per-feature (min, max) pair observed at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    pub min: [f64; 10],
    pub max: [f64; 10],
}

/// Ordered collection of feature vectors plus one target label per row.
///
/// Rows keep the non-decreasing timestamp order of their source flows; the
/// encoder and scaler that produced the rows travel with the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<FeatureVector>,
    pub targets: Vec<u32>,
    pub scheme: TargetScheme,
    pub encoder: EncoderState,
    pub scaler: ScalerState,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.scheme
            .class_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}
