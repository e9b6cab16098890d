mod analysis;
mod pipeline;
mod settings;
mod training;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafkit::augment::{AugmentationMode, OutputFormat};
use leafkit::harness::Monitor;
use leafkit::metrics::{Averaging, Metric};

use settings::UsageError;

/// Leaf-disease dataset tooling: augmentation, dataset assembly, splits,
/// few-shot prototypes, metrics, rankings and the training harness.
///
/// Every subcommand accepts `--config FILE`, a JSON object whose keys are the
/// subcommand's long flags with `-` written as `_`. Flags override the file.
/// Seeds come from `--seed`, then the config file, then `LEAFKIT_SEED`.
#[derive(Debug, Parser)]
#[command(name = "leafkit", version, propagate_version = true)]
struct Cli {
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply an augmentation mode to every image in a directory
    Augment(AugmentArgs),
    /// Merge sources, clean classes, hold out a test set, balance and split
    BuildDataset(BuildDatasetArgs),
    /// Stratified per-class split of a manifest or a class-per-folder directory
    Split(SplitArgs),
    /// Few-shot prototype classification over embedding CSVs
    #[command(subcommand)]
    Protoclass(ProtoclassCommand),
    /// Accuracy, precision, recall and F1 from (truth, prediction) pairs
    Metrics(MetricsArgs),
    /// Rank models by averaged metric or averaged per-dataset rank
    Rank(RankArgs),
    /// Two-phase training runs
    #[command(subcommand)]
    Harness(HarnessCommand),
    /// Parameter counts for a DenseNet201 backbone with and without channel attention
    Params(ParamsArgs),
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// none, color, noise, transform or combined
    #[arg(long)]
    mode: Option<AugmentationMode>,
    /// Global seed for the noise and channel-shift streams
    #[arg(long)]
    seed: Option<u64>,
    /// Input directory: images, or one subdirectory of images per class
    #[arg(long = "in", value_name = "DIR")]
    input: Option<PathBuf>,
    /// Output directory for the generated images
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Image format of the outputs: png or ppm [default: png]
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Manifest fragment path [default: OUT/manifest.jsonl]
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BuildDatasetArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Sources JSON (list of {name, dir|classes|class_counts}), or `builtin`
    #[arg(long, value_name = "FILE")]
    sources: Option<String>,
    /// Class deletion/merge rules JSON [default: the shipped rules]
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Roster JSON (list of {class, plant}) or `builtin`; final classes must all appear
    #[arg(long, value_name = "FILE")]
    roster: Option<String>,
    /// Classes with fewer images are deleted [default: 200]
    #[arg(long, value_name = "N")]
    min_class_size: Option<usize>,
    /// Training images per class after balancing [default: 3500]
    #[arg(long, value_name = "N")]
    target: Option<usize>,
    /// Augmentation mode used to grow the training pools [default: combined]
    #[arg(long)]
    mode: Option<AugmentationMode>,
    /// Seed for splitting and balancing
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of originals held out for testing [default: 0.2]
    #[arg(long, value_name = "F")]
    holdout: Option<f64>,
    /// Fraction of balanced training images moved to validation [default: 0.2]
    #[arg(long, value_name = "F")]
    val_fraction: Option<f64>,
    /// Output directory for manifest.jsonl and summary.json
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also render every augmented image under OUT/augmented
    #[arg(long)]
    materialize: bool,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Manifest to split
    #[arg(long, value_name = "FILE", conflicts_with = "dir")]
    manifest: Option<PathBuf>,
    /// Directory with one subdirectory of images per class
    #[arg(long, value_name = "DIR")]
    dir: Option<PathBuf>,
    /// Train fraction for a train/test split of originals
    #[arg(long, value_name = "R")]
    ratio: Option<f64>,
    /// Test fraction held out from originals
    #[arg(long, value_name = "F")]
    holdout: Option<f64>,
    /// Fraction of train records moved to validation
    #[arg(long, value_name = "F")]
    val_fraction: Option<f64>,
    /// Split seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output manifest
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ProtoclassCommand {
    /// Average K sampled supports per class into prototypes
    Build(ProtoBuildArgs),
    /// Nearest-prototype label for every query
    Predict(ProtoQueryArgs),
    /// Metric report of nearest-prototype predictions against query labels
    Eval(ProtoQueryArgs),
}

#[derive(Debug, Args)]
struct ShotArgs {
    /// Labelled support embeddings CSV
    #[arg(long, value_name = "FILE")]
    supports: Option<PathBuf>,
    /// Supports averaged per class [default: 1]
    #[arg(long, value_name = "K")]
    shots: Option<usize>,
    /// Seed for support sampling
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ProtoBuildArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    shots: ShotArgs,
    /// Prototype CSV to write
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProtoQueryArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Prototype CSV from `protoclass build` (instead of --supports)
    #[arg(long, value_name = "FILE", conflicts_with = "supports")]
    prototypes: Option<PathBuf>,
    #[command(flatten)]
    shots: ShotArgs,
    /// Query embeddings CSV
    #[arg(long, value_name = "FILE")]
    queries: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// CSV of truth,prediction rows
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Label order, one per line [default: sorted labels seen in the pairs]
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,
    /// macro or weighted [default: macro]
    #[arg(long, value_parser = analysis::parse_serde::<Averaging>)]
    averaging: Option<Averaging>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// avg-metric or avg-rank
    #[arg(long)]
    by: Option<analysis::RankBy>,
    /// Per-(model, dataset) results CSV
    #[arg(long, value_name = "FILE")]
    results: Option<PathBuf>,
    /// acc, f1, acc_ft or f1_ft [default: acc_ft]
    #[arg(long)]
    metric: Option<Metric>,
    /// Precomputed per-dataset ranks CSV (model, then one rank per dataset)
    #[arg(long, value_name = "FILE")]
    ranks: Option<PathBuf>,
    /// text or csv [default: text]
    #[arg(long)]
    format: Option<analysis::TableFormat>,
    /// Write the table here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum HarnessCommand {
    /// Run the transfer-learning and fine-tuning phases against scripted trainers
    Run(HarnessRunArgs),
}

#[derive(Debug, Args)]
struct HarnessRunArgs {
    /// Experiment config JSON: tl_epochs, ft_epochs, patience, monitor, frozen_first
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Maximum transfer-learning epochs
    #[arg(long, value_name = "N")]
    tl_epochs: Option<usize>,
    /// Maximum fine-tuning epochs
    #[arg(long, value_name = "N")]
    ft_epochs: Option<usize>,
    /// Early-stopping patience in epochs, or `none` to disable
    #[arg(long, value_name = "N|none")]
    patience: Option<training::Patience>,
    /// val_loss or val_accuracy
    #[arg(long, value_parser = analysis::parse_serde::<Monitor>)]
    monitor: Option<Monitor>,
    /// Scripted trainer JSON; repeat for repeated runs
    #[arg(long = "mock-trainer", value_name = "FILE", required = true)]
    mock_trainer: Vec<PathBuf>,
    /// Model name recorded in the results
    #[arg(long, default_value = "mock")]
    model: String,
    /// Dataset name recorded in the results
    #[arg(long, default_value = "mock")]
    dataset: String,
    /// Output directory for results.csv, runs.jsonl and log.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ParamsArgs {
    /// JSON file with defaults for these flags
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Classes of the dense classification head
    #[arg(long, value_name = "K")]
    head_classes: Option<usize>,
    /// Feature channels entering the head [default: 1920]
    #[arg(long, value_name = "C")]
    ca_channels: Option<usize>,
    /// Channel-attention reduction ratio [default: 8]
    #[arg(long, value_name = "R")]
    ca_ratio: Option<usize>,
    /// Separate MLPs for the average and max branches
    #[arg(long)]
    ca_separate: bool,
    /// Biases in the attention MLPs
    #[arg(long)]
    ca_bias: bool,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let jobs = cli.jobs;
    match cli.command {
        Command::Augment(a) => pipeline::augment(a, jobs),
        Command::BuildDataset(a) => pipeline::build_dataset(a, jobs),
        Command::Split(a) => pipeline::split(a, jobs),
        Command::Protoclass(c) => analysis::protoclass(c, jobs),
        Command::Metrics(a) => analysis::metrics(a),
        Command::Rank(a) => analysis::rank(a),
        Command::Harness(HarnessCommand::Run(a)) => training::run(a),
        Command::Params(a) => analysis::params(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<UsageError>() {
                eprintln!("run with --help for usage");
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
