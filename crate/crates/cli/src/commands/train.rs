//! `flowids train`: ingest, preprocess, split and fit one model.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use flowids_core::dataset::Dataset;
use flowids_core::ingest::IngestReport;
use flowids_core::models::{
    fit_forest, fit_knn, save_model, Engine, ForestConfig, KnnConfig, ModelKind, TrainedModel,
};
use flowids_core::preprocess::SplitOutput;

use super::{
    ensure_out_dir, ingest_flows, input_digests_for, load_model_kv, load_pipeline_config,
    render_window,
};
use crate::errors::CliError;
use crate::manifest::{now_iso, RunManifest};

pub struct TrainArgs<'a> {
    pub data_path: &'a Path,
    pub pipeline_config_path: Option<&'a Path>,
    pub model_kind: ModelKind,
    pub model_config_path: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub seed: Option<u64>,
    pub strict_ingest: bool,
    pub max_rows: u64,
}

/// Class name -> row count for one split.
fn class_distribution(dataset: &Dataset) -> BTreeMap<String, u64> {
    let names = dataset.scheme.class_names();
    let mut counts: BTreeMap<String, u64> = names.iter().map(|n| (n.to_string(), 0)).collect();
    for &t in &dataset.targets {
        *counts.get_mut(names[t as usize]).expect("target in class list") += 1;
    }
    counts
}

#[derive(Serialize)]
pub struct SplitSummary {
    pub rows_ingested: u64,
    pub rows_rejected: u64,
    pub rows_sampled: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub target_scheme: String,
    pub train_class_distribution: BTreeMap<String, u64>,
    pub test_class_distribution: BTreeMap<String, u64>,
    pub data_window: Option<(String, String)>,
}

impl SplitSummary {
    pub fn new(split: &SplitOutput, ingest: &IngestReport) -> SplitSummary {
        SplitSummary {
            rows_ingested: ingest.rows_read,
            rows_rejected: ingest.rows_rejected,
            rows_sampled: split.rows_sampled,
            train_rows: split.train.len(),
            test_rows: split.test.len(),
            target_scheme: split.train.scheme.as_str().to_string(),
            train_class_distribution: class_distribution(&split.train),
            test_class_distribution: class_distribution(&split.test),
            data_window: render_window(split.data_window),
        }
    }
}

/// Fits the requested engine on the training split; the model config file
/// (when given) must declare the matching model kind. A `--seed` flag wins
/// over a seed in the config file. Returns the engine, its resolved config
/// snapshot and the seed that actually governed fitting.
pub fn fit_engine(
    kind: ModelKind,
    train: &Dataset,
    model_config_path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<(Engine, serde_json::Value, u64), CliError> {
    let kv = load_model_kv(model_config_path)?;
    match kind {
        ModelKind::Forest => {
            let mut config = ForestConfig::from_kv(&kv, seed_override.unwrap_or(0))?;
            if let Some(seed) = seed_override {
                config.seed = seed;
            }
            let snapshot = serde_json::to_value(&config)?;
            let forest = fit_forest(train, &config).map_err(CliError::from)?;
            Ok((Engine::Forest(forest), snapshot, config.seed))
        }
        ModelKind::Knn => {
            let config = KnnConfig::from_kv(&kv)?;
            let snapshot = serde_json::to_value(&config)?;
            let knn = fit_knn(train, &config).map_err(CliError::from)?;
            Ok((Engine::Knn(knn), snapshot, seed_override.unwrap_or(0)))
        }
    }
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let started_at = now_iso();
    let pipeline = load_pipeline_config(args.pipeline_config_path)?;
    let (flows, ingest_report) = ingest_flows(args.data_path, args.strict_ingest, args.max_rows)?;
    let split = flowids_core::preprocess::build_split(flows, &pipeline)?;
    let (engine, model_config_snapshot, seed) =
        fit_engine(args.model_kind, &split.train, args.model_config_path, args.seed)?;
    let model = TrainedModel::new(&split.train, pipeline.clone(), seed, engine);

    ensure_out_dir(args.out_dir)?;
    let model_path = args.out_dir.join("model.fidm");
    save_model(&model, &model_path).map_err(CliError::from)?;

    let summary = SplitSummary::new(&split, &ingest_report);
    let summary_path = args.out_dir.join("split_summary.json");
    let mut summary_text = serde_json::to_string_pretty(&summary)?;
    summary_text.push('\n');
    fs::write(&summary_path, summary_text)?;

    println!(
        "trained {} on {} rows ({} test rows held out); model written to {}",
        args.model_kind,
        split.train.len(),
        split.test.len(),
        model_path.display()
    );

    let mut config_inputs: Vec<&Path> = vec![args.data_path];
    config_inputs.extend(args.pipeline_config_path);
    config_inputs.extend(args.model_config_path);
    let manifest = RunManifest {
        command: "train".to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: serde_json::json!({
            "pipeline": pipeline,
            "model_kind": args.model_kind.as_str(),
            "model": model_config_snapshot,
        }),
        inputs: input_digests_for(&config_inputs)?,
        outputs: vec![
            model_path.display().to_string(),
            summary_path.display().to_string(),
        ],
        started_at,
        finished_at: now_iso(),
    };
    manifest.write(args.out_dir)?;
    Ok(())
}
