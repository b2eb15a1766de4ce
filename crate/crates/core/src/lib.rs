//! Flow-based network intrusion detection toolkit.
//!
//! The crate covers the full experiment loop for CIDDS-001-format NetFlow
//! data: ingestion, preprocessing into scaled feature vectors, from-scratch
//! Random Forest and K-Nearest Neighbours classifiers, per-class evaluation
//! reports, and a deterministic labelled-traffic generator for desk-scale
//! runs.

pub mod dataset;
pub mod eval;
pub mod flow;
pub mod ingest;
pub mod kv;
pub mod models;
pub mod preprocess;
pub mod synthgen;

pub use dataset::{Dataset, EncoderState, ScalerState, TargetScheme};
pub use flow::{AttackTypeLabel, BinaryClassLabel, ClassLabel, FeatureVector, RawFlow};
pub use models::TrainedModel;
