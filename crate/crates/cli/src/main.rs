//! Command-line front end wiring the experiment stages into reproducible
//! runs: generate, train, evaluate and compare-labels.

mod commands;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use flowids_core::dataset::TargetScheme;
use flowids_core::eval::ReportFormat;
use flowids_core::models::ModelKind;

use commands::{compare, evaluate, generate, train, EvalSplit};
use errors::CliError;

#[derive(Parser)]
#[command(
    name = "flowids",
    version,
    about = "Flow-based intrusion detection experiments over CIDDS-001-format NetFlow data"
)]
struct Cli {
    /// Worker threads for forest fitting and batch prediction
    /// (default: all available cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Forest,
    Knn,
}

impl From<ModelArg> for ModelKind {
    fn from(arg: ModelArg) -> ModelKind {
        match arg {
            ModelArg::Forest => ModelKind::Forest,
            ModelArg::Knn => ModelKind::Knn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

impl From<SplitArg> for EvalSplit {
    fn from(arg: SplitArg) -> EvalSplit {
        match arg {
            SplitArg::Train => EvalSplit::Train,
            SplitArg::Test => EvalSplit::Test,
            SplitArg::All => EvalSplit::All,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Machine,
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> ReportFormat {
        match arg {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Machine => ReportFormat::Machine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    ClassBinary,
    AttackType,
}

impl From<SchemeArg> for TargetScheme {
    fn from(arg: SchemeArg) -> TargetScheme {
        match arg {
            SchemeArg::ClassBinary => TargetScheme::ClassBinary,
            SchemeArg::AttackType => TargetScheme::AttackType,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a labelled traffic scenario into CSV files
    Generate {
        /// Scenario config (key = value plus attack schedule lines)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for flows.csv, ground_truth.csv and the manifest
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Ingest, preprocess, split and fit one model
    Train {
        /// CIDDS-001-format CSV input
        #[arg(long)]
        data: PathBuf,
        /// Pipeline config file; defaults apply when omitted
        #[arg(long)]
        pipeline_config: Option<PathBuf>,
        /// Which engine to fit
        #[arg(long, value_enum, default_value_t = ModelArg::Forest)]
        model: ModelArg,
        /// Model config file; defaults apply when omitted
        #[arg(long)]
        model_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Experiment seed; wins over any seed in the model config file
        #[arg(long)]
        seed: Option<u64>,
        /// Abort on the first malformed row instead of skipping it
        #[arg(long)]
        strict_ingest: bool,
        /// Capacity budget: accepted rows beyond this abort the run
        #[arg(long, default_value_t = 5_000_000)]
        max_rows: u64,
    },
    /// Score a saved model against a data file
    Evaluate {
        /// Model file written by train or compare-labels
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Which part of the model's holdout split to score
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        /// Format echoed to stdout (all three are written)
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
        /// Fail unless the model was trained for this target scheme
        #[arg(long, value_enum)]
        target_scheme: Option<SchemeArg>,
        #[arg(long)]
        strict_ingest: bool,
        #[arg(long, default_value_t = 5_000_000)]
        max_rows: u64,
    },
    /// Run {forest, knn} x {class_binary, attack_type} on one shared split
    CompareLabels {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        pipeline_config: Option<PathBuf>,
        /// Forest config for the RF arms
        #[arg(long)]
        rf_config: Option<PathBuf>,
        /// KNN config for the KNN arms
        #[arg(long)]
        knn_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Experiment seed; wins over any seed in the model config files
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
        #[arg(long)]
        strict_ingest: bool,
        #[arg(long, default_value_t = 5_000_000)]
        max_rows: u64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate { config, out, seed } => generate::run(&generate::GenerateArgs {
            config_path: &config,
            out_dir: &out,
            seed_override: seed,
        }),
        Command::Train {
            data,
            pipeline_config,
            model,
            model_config,
            out,
            seed,
            strict_ingest,
            max_rows,
        } => train::run(&train::TrainArgs {
            data_path: &data,
            pipeline_config_path: pipeline_config.as_deref(),
            model_kind: model.into(),
            model_config_path: model_config.as_deref(),
            out_dir: &out,
            seed,
            strict_ingest,
            max_rows,
        }),
        Command::Evaluate {
            model,
            data,
            out,
            split,
            format,
            target_scheme,
            strict_ingest,
            max_rows,
        } => evaluate::run(&evaluate::EvaluateArgs {
            model_path: &model,
            data_path: &data,
            out_dir: &out,
            split: split.into(),
            format: format.into(),
            expect_scheme: target_scheme.map(TargetScheme::from),
            strict_ingest,
            max_rows,
        }),
        Command::CompareLabels {
            data,
            pipeline_config,
            rf_config,
            knn_config,
            out,
            seed,
            format,
            strict_ingest,
            max_rows,
        } => compare::run(&compare::CompareArgs {
            data_path: &data,
            pipeline_config_path: pipeline_config.as_deref(),
            rf_config_path: rf_config.as_deref(),
            knn_config_path: knn_config.as_deref(),
            out_dir: &out,
            seed,
            format: format.into(),
            strict_ingest,
            max_rows,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("flowids: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
