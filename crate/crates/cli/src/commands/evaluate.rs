//! `flowids evaluate`: score a saved model against a data file.

use std::path::Path;

use flowids_core::dataset::TargetScheme;
use flowids_core::eval::{confusion, EvaluationReport, ReportFormat};
use flowids_core::models::load_model;
use flowids_core::preprocess::apply_states;

use super::{
    ensure_out_dir, flows_window, ingest_flows, input_digests_for, paths_to_strings,
    replay_model_split, write_report_files, EvalSplit,
};
use crate::errors::CliError;
use crate::manifest::{now_iso, RunManifest};

pub struct EvaluateArgs<'a> {
    pub model_path: &'a Path,
    pub data_path: &'a Path,
    pub out_dir: &'a Path,
    pub split: EvalSplit,
    pub format: ReportFormat,
    pub expect_scheme: Option<TargetScheme>,
    pub strict_ingest: bool,
    pub max_rows: u64,
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let started_at = now_iso();
    let model = load_model(args.model_path).map_err(CliError::from)?;
    if let Some(expected) = args.expect_scheme {
        if expected != model.scheme {
            return Err(CliError::Model(format!(
                "scheme mismatch: model was trained for {}, requested {}",
                model.scheme, expected
            )));
        }
    }

    let (flows, _) = ingest_flows(args.data_path, args.strict_ingest, args.max_rows)?;
    let part = replay_model_split(&model.pipeline, flows, args.split)?;
    if part.is_empty() {
        return Err(CliError::Data("no rows to evaluate after windowing and splitting".into()));
    }
    let window = flows_window(&part);
    let dataset = apply_states(&part, model.scheme, &model.encoder, &model.scaler);
    let predictions = model.predict_dataset(&dataset);
    let cm = confusion(&dataset.targets, &predictions, &model.classes)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let report = EvaluationReport::from_confusion(
        &cm,
        model.kind().as_str(),
        model.scheme.as_str(),
        model.seed,
        window,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;

    ensure_out_dir(args.out_dir)?;
    let written = write_report_files(&report, args.out_dir, "report")?;
    print!("{}", report.render(args.format));

    let manifest = RunManifest {
        command: "evaluate".to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: model.seed,
        config: serde_json::json!({
            "model_file": args.model_path.display().to_string(),
            "model_kind": model.kind().as_str(),
            "target_scheme": model.scheme.as_str(),
            "pipeline": model.pipeline,
            "split": match args.split {
                EvalSplit::Train => "train",
                EvalSplit::Test => "test",
                EvalSplit::All => "all",
            },
        }),
        inputs: input_digests_for(&[args.model_path, args.data_path])?,
        outputs: paths_to_strings(&written),
        started_at,
        finished_at: now_iso(),
    };
    manifest.write(args.out_dir)?;
    Ok(())
}
