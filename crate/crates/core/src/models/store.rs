//! Model persistence: a self-describing, versioned container with a
//! trailing checksum. `load(save(m))` predicts identically to `m`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

use super::{Forest, Knn, ModelError};
use crate::dataset::{Dataset, EncoderState, ScalerState, TargetScheme};
use crate::flow::FeatureVector;
use crate::preprocess::PipelineConfig;

/// Bumped whenever the payload layout changes.
pub const MODEL_FORMAT_VERSION: u16 = 1;

const MAGIC: &[u8; 8] = b"FIDSMODL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Forest,
    Knn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Knn => "knn",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Engine {
    Forest(Forest),
    Knn(Knn),
}

/// A fitted classifier plus everything needed to reproduce its inputs:
/// class list, pipeline config snapshot and the fitted encoder/scaler.
/// Predict-time behaviour never depends on external config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub scheme: TargetScheme,
    pub classes: Vec<String>,
    pub pipeline: PipelineConfig,
    pub encoder: EncoderState,
    pub scaler: ScalerState,
    /// Experiment seed recorded at train time; echoed into reports.
    pub seed: u64,
    pub engine: Engine,
}

impl TrainedModel {
    pub fn new(
        train: &Dataset,
        pipeline: PipelineConfig,
        seed: u64,
        engine: Engine,
    ) -> TrainedModel {
        TrainedModel {
            scheme: train.scheme,
            classes: train.class_names(),
            pipeline,
            encoder: train.encoder.clone(),
            scaler: train.scaler.clone(),
            seed,
            engine,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.engine {
            Engine::Forest(_) => ModelKind::Forest,
            Engine::Knn(_) => ModelKind::Knn,
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> u32 {
        match &self.engine {
            Engine::Forest(forest) => forest.predict(x),
            Engine::Knn(knn) => knn.predict(x),
        }
    }

    pub fn predict_slice(&self, x: &[f64]) -> Result<u32, ModelError> {
        let arr: [f64; 10] = x.try_into().map_err(|_| ModelError::DimensionMismatch {
            expected: FeatureVector::DIM,
            got: x.len(),
        })?;
        Ok(self.predict(&FeatureVector(arr)))
    }

    /// Batch prediction, parallel over rows.
    pub fn predict_dataset(&self, dataset: &Dataset) -> Vec<u32> {
        use rayon::prelude::*;
        dataset.rows.par_iter().map(|row| self.predict(row)).collect()
    }
}

/// Writes `magic | version | payload length | payload | sha256`.
pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ModelError> {
    let payload =
        bincode::serialize(model).map_err(|e| ModelError::Corrupt(format!("encode: {e}")))?;
    let mut bytes = Vec::with_capacity(payload.len() + 50);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&payload);
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ModelError> {
    let bytes = fs::read(path)?;
    if bytes.len() < MAGIC.len() + 2 + 8 + 32 {
        return Err(ModelError::Corrupt("file truncated".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(ModelError::NotAModelFile);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != MODEL_FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let payload_len = u64::from_le_bytes(bytes[10..18].try_into().unwrap()) as usize;
    let body_end = 18usize
        .checked_add(payload_len)
        .ok_or_else(|| ModelError::Corrupt("bad payload length".into()))?;
    if bytes.len() != body_end + 32 {
        return Err(ModelError::Corrupt("file truncated".into()));
    }
    let digest = Sha256::digest(&bytes[..body_end]);
    if digest.as_slice() != &bytes[body_end..] {
        return Err(ModelError::Corrupt("checksum mismatch".into()));
    }
    bincode::deserialize(&bytes[18..body_end])
        .map_err(|e| ModelError::Corrupt(format!("decode: {e}")))
}
