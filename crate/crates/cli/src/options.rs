use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "cogbridge",
    version,
    about = "Bridge cognitive reading signals to linguistic features"
)]
pub struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a signals/annotations pair and write a corpus archive.
    Ingest(IngestArgs),
    /// Cross-validate the attention network and write attention reports.
    Run(RunArgs),
    /// Compare top-k feature selections under linear and recurrent classifiers.
    Featsel(FeatselArgs),
    /// Generate a synthetic corpus with one planted feature.
    Synth(SynthArgs),
    /// Re-render CSV reports from saved run results.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub signals: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub common_words: Option<PathBuf>,
    #[arg(long)]
    pub connectors: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Corpus archive, ingest directory, or a directory holding
    /// signals.tsv and annotations.jsonl.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Task names, comma separated, or `all`.
    #[arg(long = "task", value_delimiter = ',', required = true)]
    pub tasks: Vec<String>,
    /// Signal types (eye, eeg), comma separated, or `all`.
    #[arg(long = "signals", value_delimiter = ',', required = true)]
    pub signals: Vec<String>,
    #[arg(long)]
    pub seed: u64,
    /// TOML file with experiment settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Root directory for run directories.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    #[arg(long)]
    pub k_folds: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Feed the attended signals straight to the head.
    #[arg(long)]
    pub no_encoder: bool,
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    #[arg(long)]
    pub focal_gamma: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub norm: Option<NormArg>,
    #[arg(long, value_enum)]
    pub aggregation: Option<AggregationArg>,
    /// Divide polysemy, OOV and connector counts by sentence length.
    #[arg(long)]
    pub length_normalize_counts: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// Skip the signal-masking evaluation.
    #[arg(long)]
    pub no_mask: bool,
    /// Retrain every fold with the masked feature instead of reusing models.
    #[arg(long)]
    pub mask_retrain: bool,
}

#[derive(Debug, Args)]
pub struct FeatselArgs {
    #[command(flatten)]
    pub exp: ExperimentArgs,
    /// attention, mi, rfe, rf (comma separated) or `all`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// k values, e.g. `1,2,3` or `1-17`; defaults to every k up to d.
    #[arg(long = "k")]
    pub k_sweep: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    CrossEntropy,
    Focal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    ZScore,
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    ThreeClass,
    Binary,
    Sequence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    MeanShift,
    Ordered,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Signal dimension: 17 (eye) or 8 (EEG).
    #[arg(long, default_value_t = 17)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub planted: usize,
    #[arg(long, default_value_t = 2.0)]
    pub effect: f64,
    #[arg(long, default_value_t = 600)]
    pub m: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "three-class")]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value = "mean-shift")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 6)]
    pub min_len: usize,
    #[arg(long, default_value_t = 14)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.0)]
    pub shared_noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A run directory, or a root holding several.
    pub path: PathBuf,
}
