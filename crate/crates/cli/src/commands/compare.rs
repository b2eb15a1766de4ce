//! `flowids compare-labels`: the 2x2 grid {forest, knn} x {class_binary,
//! attack_type} on one shared holdout split, with a side-by-side comparison
//! table.

use std::fs;
use std::path::{Path, PathBuf};

use flowids_core::dataset::TargetScheme;
use flowids_core::eval::{confusion, EvaluationReport, ReportFormat};
use flowids_core::models::{save_model, ModelKind, TrainedModel};
use flowids_core::preprocess::{build_split, PipelineConfig};

use super::{
    ensure_out_dir, fit_arm_stem, ingest_flows, input_digests_for, load_pipeline_config,
    paths_to_strings, render_window, write_report_files,
};
use crate::errors::CliError;
use crate::manifest::{now_iso, RunManifest};

pub struct CompareArgs<'a> {
    pub data_path: &'a Path,
    pub pipeline_config_path: Option<&'a Path>,
    pub rf_config_path: Option<&'a Path>,
    pub knn_config_path: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub seed: Option<u64>,
    pub format: ReportFormat,
    pub strict_ingest: bool,
    pub max_rows: u64,
}

pub struct ArmResult {
    pub model_kind: ModelKind,
    pub scheme: TargetScheme,
    pub report: EvaluationReport,
}

fn render_comparison_table(arms: &[ArmResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8}  {:<13}  {:>8}  {:>9}  {:>8}  {:>8}\n",
        "model", "target", "accuracy", "precision", "recall", "f1"
    ));
    for arm in arms {
        out.push_str(&format!(
            "{:<8}  {:<13}  {:>8.4}  {:>9.4}  {:>8.4}  {:>8.4}\n",
            arm.model_kind.as_str(),
            arm.scheme.as_str(),
            arm.report.accuracy,
            arm.report.macro_avg.precision,
            arm.report.macro_avg.recall,
            arm.report.macro_avg.f1
        ));
    }
    out
}

fn render_comparison_csv(arms: &[ArmResult]) -> String {
    let mut out = String::from("model,target,accuracy,macro_precision,macro_recall,macro_f1\n");
    for arm in arms {
        out.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4}\n",
            arm.model_kind.as_str(),
            arm.scheme.as_str(),
            arm.report.accuracy,
            arm.report.macro_avg.precision,
            arm.report.macro_avg.recall,
            arm.report.macro_avg.f1
        ));
    }
    out
}

fn render_comparison_json(arms: &[ArmResult]) -> String {
    let rows: Vec<serde_json::Value> = arms
        .iter()
        .map(|arm| {
            serde_json::json!({
                "model": arm.model_kind.as_str(),
                "target": arm.scheme.as_str(),
                "accuracy": round4(arm.report.accuracy),
                "macro_precision": round4(arm.report.macro_avg.precision),
                "macro_recall": round4(arm.report.macro_avg.recall),
                "macro_f1": round4(arm.report.macro_avg.f1),
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "arms": rows }))
        .expect("comparison serializes");
    text.push('\n');
    text
}

fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    let started_at = now_iso();
    let base_pipeline = load_pipeline_config(args.pipeline_config_path)?;
    let (flows, _) = ingest_flows(args.data_path, args.strict_ingest, args.max_rows)?;

    ensure_out_dir(args.out_dir)?;
    let mut arms = Vec::new();
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut config_snapshots = serde_json::Map::new();
    for scheme in [TargetScheme::ClassBinary, TargetScheme::AttackType] {
        let pipeline = PipelineConfig {
            target_scheme: scheme,
            ..base_pipeline.clone()
        };
        let split = build_split(flows.clone(), &pipeline)?;
        let window = render_window(split.data_window);
        for kind in [ModelKind::Forest, ModelKind::Knn] {
            let model_config_path = match kind {
                ModelKind::Forest => args.rf_config_path,
                ModelKind::Knn => args.knn_config_path,
            };
            let (engine, snapshot, arm_seed) =
                super::train::fit_engine(kind, &split.train, model_config_path, args.seed)?;
            config_snapshots.insert(format!("model_{}", kind.as_str()), snapshot);
            let model = TrainedModel::new(&split.train, pipeline.clone(), arm_seed, engine);

            let predictions = model.predict_dataset(&split.test);
            let cm = confusion(&split.test.targets, &predictions, &model.classes)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let report = EvaluationReport::from_confusion(
                &cm,
                kind.as_str(),
                scheme.as_str(),
                arm_seed,
                window.clone(),
            )
            .map_err(|e| CliError::Data(e.to_string()))?;

            let stem = fit_arm_stem(kind, scheme);
            let model_path = args.out_dir.join(format!("model_{stem}.fidm"));
            save_model(&model, &model_path).map_err(CliError::from)?;
            outputs.push(model_path);
            outputs.extend(write_report_files(&report, args.out_dir, &format!("report_{stem}"))?);
            arms.push(ArmResult {
                model_kind: kind,
                scheme,
                report,
            });
        }
    }

    let table = render_comparison_table(&arms);
    let comparison_files = [
        (args.out_dir.join("comparison.txt"), table.clone()),
        (args.out_dir.join("comparison.csv"), render_comparison_csv(&arms)),
        (args.out_dir.join("comparison.json"), render_comparison_json(&arms)),
    ];
    for (path, content) in &comparison_files {
        fs::write(path, content)?;
        outputs.push(path.clone());
    }
    match args.format {
        ReportFormat::Csv => print!("{}", render_comparison_csv(&arms)),
        ReportFormat::Machine => print!("{}", render_comparison_json(&arms)),
        ReportFormat::Table => print!("{table}"),
    }

    config_snapshots.insert(
        "pipeline".to_string(),
        serde_json::to_value(&base_pipeline)?,
    );
    let mut config_inputs: Vec<&Path> = vec![args.data_path];
    config_inputs.extend(args.pipeline_config_path);
    config_inputs.extend(args.rf_config_path);
    config_inputs.extend(args.knn_config_path);
    let manifest = RunManifest {
        command: "compare-labels".to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: args.seed.unwrap_or(0),
        config: serde_json::Value::Object(config_snapshots),
        inputs: input_digests_for(&config_inputs)?,
        outputs: paths_to_strings(&outputs),
        started_at,
        finished_at: now_iso(),
    };
    manifest.write(args.out_dir)?;
    Ok(())
}
