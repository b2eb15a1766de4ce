//! Subcommand implementations and the plumbing they share.

pub mod compare;
pub mod evaluate;
pub mod generate;
pub mod train;

use std::fs;
use std::path::{Path, PathBuf};

use flowids_core::eval::{EvaluationReport, ReportFormat};
use flowids_core::flow::RawFlow;
use flowids_core::ingest::{render_timestamp, FlowReader, IngestOptions, IngestReport};
use flowids_core::kv::KvFile;
use flowids_core::preprocess::PipelineConfig;

use crate::errors::CliError;
use crate::manifest::{input_digest, InputDigest};

pub const ALL_FORMATS: [ReportFormat; 3] =
    [ReportFormat::Table, ReportFormat::Csv, ReportFormat::Machine];

pub fn input_digests_for(paths: &[&Path]) -> Result<Vec<InputDigest>, CliError> {
    paths.iter().map(|p| input_digest(p)).collect()
}

pub fn read_config_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))
}

pub fn load_pipeline_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(path) => {
            let text = read_config_text(path)?;
            Ok(PipelineConfig::from_text(&text)?)
        }
    }
}

pub fn load_model_kv(path: Option<&Path>) -> Result<KvFile, CliError> {
    match path {
        None => Ok(KvFile::parse("")?),
        Some(path) => {
            let text = read_config_text(path)?;
            Ok(KvFile::parse(&text)?)
        }
    }
}

/// Streaming ingest with a row budget: exceeding it is an explicit capacity
/// error instead of unbounded memory growth.
pub fn ingest_flows(
    path: &Path,
    strict: bool,
    max_rows: u64,
) -> Result<(Vec<RawFlow>, IngestReport), CliError> {
    let mut reader = FlowReader::open(path, IngestOptions { strict })?;
    let mut flows = Vec::new();
    for item in reader.by_ref() {
        flows.push(item?);
        if flows.len() as u64 > max_rows {
            return Err(CliError::Data(format!(
                "row budget exceeded: {} accepted rows > --max-rows {max_rows}",
                flows.len()
            )));
        }
    }
    let report = reader.into_report();
    if flows.is_empty() {
        return Err(CliError::Data(format!(
            "{} contains no usable rows ({} rejected)",
            path.display(),
            report.rows_rejected
        )));
    }
    Ok((flows, report))
}

pub fn ensure_out_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", path.display())))
}

pub fn render_window(window: Option<(chrono::NaiveDateTime, chrono::NaiveDateTime)>) -> Option<(String, String)> {
    window.map(|(start, end)| (render_timestamp(start), render_timestamp(end)))
}

/// Writes a report in all three formats next to each other; returns the
/// written paths.
pub fn write_report_files(
    report: &EvaluationReport,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for format in ALL_FORMATS {
        let path = out_dir.join(format!("{stem}.{}", format.extension()));
        fs::write(&path, report.render(format))?;
        written.push(path);
    }
    Ok(written)
}

pub fn paths_to_strings(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Train,
    Test,
    All,
}

/// Re-applies a saved model's pipeline (window, ordering, split) to raw
/// flows and returns the requested part. Evaluating the training file with
/// `Test` reproduces exactly the held-out rows the model never saw.
pub fn replay_model_split(
    pipeline: &PipelineConfig,
    mut flows: Vec<RawFlow>,
    part: EvalSplit,
) -> Result<Vec<RawFlow>, CliError> {
    use flowids_core::preprocess::{sample_window, sort_flows_by_timestamp, split_indices};
    sort_flows_by_timestamp(&mut flows);
    let sampled: Vec<RawFlow> = match pipeline.sample_window {
        Some((start, end)) => sample_window(&flows, start, end)?.to_vec(),
        None => flows,
    };
    match part {
        EvalSplit::All => Ok(sampled),
        EvalSplit::Train | EvalSplit::Test => {
            if sampled.len() < 2 {
                return Err(CliError::Data(format!(
                    "{} sampled rows are too few to reproduce the holdout split",
                    sampled.len()
                )));
            }
            let (train_idx, test_idx) =
                split_indices(sampled.len(), pipeline.split_ratio, pipeline.split_mode);
            let indices = if part == EvalSplit::Train { train_idx } else { test_idx };
            Ok(indices.into_iter().map(|i| sampled[i].clone()).collect())
        }
    }
}

/// First and last timestamp of a flow slice, already in split order for
/// chronological splits; scans for the extremes otherwise.
pub fn flows_window(flows: &[RawFlow]) -> Option<(String, String)> {
    let first = flows.iter().map(|f| f.date_first_seen).min()?;
    let last = flows.iter().map(|f| f.date_first_seen).max()?;
    Some((render_timestamp(first), render_timestamp(last)))
}

/// File stem for one comparison arm, e.g. `forest_attack_type`.
pub fn fit_arm_stem(
    kind: flowids_core::models::ModelKind,
    scheme: flowids_core::dataset::TargetScheme,
) -> String {
    format!("{}_{}", kind.as_str(), scheme.as_str())
}
