//! `flowids generate`: synthesize a labelled scenario into CSV files.

use std::path::Path;

use flowids_core::synthgen::{generate, write_outputs, ScenarioConfig};

use super::{ensure_out_dir, input_digests_for, read_config_text};
use crate::errors::CliError;
use crate::manifest::{now_iso, RunManifest};

pub struct GenerateArgs<'a> {
    pub config_path: &'a Path,
    pub out_dir: &'a Path,
    pub seed_override: Option<u64>,
}

pub fn run(args: &GenerateArgs) -> Result<(), CliError> {
    let started_at = now_iso();
    let text = read_config_text(args.config_path)?;
    let mut config = ScenarioConfig::from_text(&text)?;
    if let Some(seed) = args.seed_override {
        config.seed = seed;
    }

    ensure_out_dir(args.out_dir)?;
    let traffic = generate(&config)?;
    let flows_path = args.out_dir.join("flows.csv");
    let truth_path = args.out_dir.join("ground_truth.csv");
    write_outputs(&traffic, &flows_path, &truth_path)?;

    let benign = config.planned_benign_flows();
    let attack = config.planned_attack_flows();
    println!(
        "generated {} flows ({benign} benign, {attack} attack) into {}",
        traffic.flows.len(),
        args.out_dir.display()
    );

    let manifest = RunManifest {
        command: "generate".to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: serde_json::to_value(&config)?,
        inputs: input_digests_for(&[args.config_path])?,
        outputs: vec![
            flows_path.display().to_string(),
            truth_path.display().to_string(),
        ],
        started_at,
        finished_at: now_iso(),
    };
    manifest.write(args.out_dir)?;
    Ok(())
}
