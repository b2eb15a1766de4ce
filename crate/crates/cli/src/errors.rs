//! Exit-code policy: every error belongs to one category with its own
//! nonzero code, so scripts can tell config mistakes from data or model
//! problems.

use flowids_core::ingest::IngestError;
use flowids_core::kv::KvError;
use flowids_core::models::ModelError;
use flowids_core::preprocess::PipelineError;
use flowids_core::synthgen::ScenarioError;

#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad or missing configuration.
    Config(String),
    /// Exit 3: unreadable or unusable input data.
    Data(String),
    /// Exit 4: model fitting, loading or compatibility failures.
    Model(String),
    /// Exit 5: unexpected internal failures (I/O, serialization).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Model(_) => 4,
            CliError::Internal(_) => 5,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Model(_) => "model",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Model(m) | CliError::Internal(m) => m,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.category(), self.message())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io(io) => CliError::Internal(io.to_string()),
            ScenarioError::Ingest(ing) => ing.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(format!("ingest: {e}"))
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Kv(kv) => CliError::Config(format!("pipeline config: {kv}")),
            PipelineError::BadConfig(m) => CliError::Config(format!("pipeline config: {m}")),
            other => CliError::Data(format!("preprocess: {other}")),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Kv(kv) => CliError::Config(format!("model config: {kv}")),
            ModelError::BadConfig(m) => CliError::Config(format!("model config: {m}")),
            other => CliError::Model(other.to_string()),
        }
    }
}

impl From<KvError> for CliError {
    fn from(e: KvError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
