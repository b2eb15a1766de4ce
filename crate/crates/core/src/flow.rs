//! Domain types shared by every other module: raw flows, labels and
//! feature vectors.
//!
//! All types here are immutable value types once constructed and can be
//! shared freely between worker threads.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Timestamp format used throughout the CIDDS-001 CSV contract:
/// `YYYY-MM-DD HH:MM:SS.fff`, millisecond precision, timezone-naive.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.3f";

/// Per-flow role tag as published in the dataset's `class` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Normal,
    Attacker,
    Victim,
    Suspicious,
    Unknown,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Normal,
        ClassLabel::Attacker,
        ClassLabel::Victim,
        ClassLabel::Suspicious,
        ClassLabel::Unknown,
    ];

    /// Canonical CSV token.
    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Normal => "normal",
            ClassLabel::Attacker => "attacker",
            ClassLabel::Victim => "victim",
            ClassLabel::Suspicious => "suspicious",
            ClassLabel::Unknown => "unknown",
        }
    }

    /// Parses a CSV token. The enumeration is closed: any other token is an
    /// error.
    pub fn parse(token: &str) -> Result<ClassLabel, LabelError> {
        match token {
            "normal" => Ok(ClassLabel::Normal),
            "attacker" => Ok(ClassLabel::Attacker),
            "victim" => Ok(ClassLabel::Victim),
            "suspicious" => Ok(ClassLabel::Suspicious),
            "unknown" => Ok(ClassLabel::Unknown),
            other => Err(LabelError::UnknownClass(other.to_string())),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Attack category from the `attackType` column. `None` marks a benign flow
/// (the dataset prints it as `---`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackTypeLabel {
    None,
    BruteForce,
    Dos,
    PingScan,
    PortScan,
}

impl AttackTypeLabel {
    pub const ALL: [AttackTypeLabel; 5] = [
        AttackTypeLabel::None,
        AttackTypeLabel::BruteForce,
        AttackTypeLabel::Dos,
        AttackTypeLabel::PingScan,
        AttackTypeLabel::PortScan,
    ];

    /// Canonical CSV token, matching the dataset's spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            AttackTypeLabel::None => "---",
            AttackTypeLabel::BruteForce => "bruteForce",
            AttackTypeLabel::Dos => "dos",
            AttackTypeLabel::PingScan => "pingScan",
            AttackTypeLabel::PortScan => "portScan",
        }
    }

    /// Display name used in reports, where `---` would read poorly.
    pub fn display_name(self) -> &'static str {
        match self {
            AttackTypeLabel::None => "none",
            other => other.as_str(),
        }
    }

    pub fn parse(token: &str) -> Result<AttackTypeLabel, LabelError> {
        match token {
            "---" => Ok(AttackTypeLabel::None),
            "bruteForce" => Ok(AttackTypeLabel::BruteForce),
            "dos" => Ok(AttackTypeLabel::Dos),
            "pingScan" => Ok(AttackTypeLabel::PingScan),
            "portScan" => Ok(AttackTypeLabel::PortScan),
            other => Err(LabelError::UnknownAttackType(other.to_string())),
        }
    }
}

impl fmt::Display for AttackTypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Two-category target obtained by remapping the five-way class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryClassLabel {
    Normal,
    Attack,
}

impl BinaryClassLabel {
    pub const ALL: [BinaryClassLabel; 2] = [BinaryClassLabel::Normal, BinaryClassLabel::Attack];

    pub fn as_str(self) -> &'static str {
        match self {
            BinaryClassLabel::Normal => "normal",
            BinaryClassLabel::Attack => "attack",
        }
    }

    pub fn parse(token: &str) -> Result<BinaryClassLabel, LabelError> {
        match token {
            "normal" => Ok(BinaryClassLabel::Normal),
            "attack" => Ok(BinaryClassLabel::Attack),
            other => Err(LabelError::UnknownClass(other.to_string())),
        }
    }
}

impl fmt::Display for BinaryClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("unknown class label: {0:?}")]
    UnknownClass(String),
    #[error("unknown attack type: {0:?}")]
    UnknownAttackType(String),
}

/// One parsed CIDDS-001 CSV record, fields as published, labels attached.
///
/// Ports are stored wide (`u32`) so that out-of-range values survive parsing
/// long enough for [`validate`] to report them. `flows` is retained even
/// though preprocessing later drops it, keeping ingestion lossless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFlow {
    pub date_first_seen: NaiveDateTime,
    pub duration: f64,
    pub proto: String,
    pub src_ip: String,
    pub src_port: u32,
    pub dst_ip: String,
    pub dst_port: u32,
    pub packets: u64,
    pub bytes: u64,
    pub flows: i64,
    pub flags: String,
    pub tos: i64,
    pub class_label: ClassLabel,
    pub attack_type: AttackTypeLabel,
    pub attack_id: String,
    pub attack_description: String,
}

/// Checks every `RawFlow` invariant; returns one entry per violation.
/// An empty list means the flow is well formed.
pub fn validate(flow: &RawFlow) -> Vec<String> {
    let mut violations = Vec::new();
    if flow.duration < 0.0 || !flow.duration.is_finite() {
        violations.push("duration negative".to_string());
    }
    if flow.src_port > 65535 || flow.dst_port > 65535 {
        violations.push("port out of range".to_string());
    }
    if flow.attack_type != AttackTypeLabel::None && flow.class_label == ClassLabel::Normal {
        violations.push("label inconsistency".to_string());
    }
    violations
}

/// Names of the ten encoded features, in component order.
pub const FEATURE_NAMES: [&str; 10] = [
    "src_ip", "src_port", "dst_ip", "dst_port", "proto", "flags", "tos", "duration", "bytes",
    "packets",
];

/// The ten encoded, scaled numeric features of one flow, in the fixed order
/// of [`FEATURE_NAMES`]. After scaling, every component of a training-set
/// vector lies in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 10]);

impl FeatureVector {
    pub const DIM: usize = 10;

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
