use std::path::PathBuf;

use bitbit_core::data::LabelColumn;
use bitbit_core::dimred::Scheme;
use bitbit_core::encoder::EncoderOptions;
use bitbit_core::qsim::BatchWeighting;
use bitbit_core::stream::TestRule;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "bitbit",
    version,
    about = "Qubit resource estimation for tabular datasets under bit-bit encoding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep qubit budgets in memory and report the qubits each replicate needs.
    Estimate(EstimateArgs),
    /// As `estimate`, reading the data in batches and encoding to disk.
    StreamEstimate(EstimateArgs),
    /// Fit an encoder and write bitstrings.
    Encode(EncodeArgs),
    /// Train a classifier circuit on encoded data and write a trace.
    Train(TrainArgs),
    /// Summarize a JSON report.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// Headered CSV with numeric features and one label column.
    #[arg(long)]
    pub input: PathBuf,
    /// Label column name or 0-based index; `last` for the final column.
    #[arg(long, default_value = "last")]
    pub label_column: String,
}

impl InputArgs {
    pub fn label_column(&self) -> LabelColumn {
        if self.label_column == "last" {
            LabelColumn::Last
        } else {
            LabelColumn::Name(self.label_column.clone())
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EncoderArgs {
    #[arg(long, default_value = "pca", value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Reduced dimension; defaults to the number of features.
    #[arg(long)]
    pub components: Option<usize>,
    /// Histogram bins of the mutual-information estimator.
    #[arg(long)]
    pub mi_bins: Option<usize>,
}

impl EncoderArgs {
    pub fn options(&self) -> EncoderOptions {
        EncoderOptions {
            mi_bins: self.mi_bins,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitArgs {
    /// Separate test CSV; disables random splitting.
    #[arg(long)]
    pub test_input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split each class separately.
    #[arg(long)]
    pub stratified: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Accuracy both train and test must reach.
    #[arg(long, default_value_t = 1.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long = "nx-max", default_value_t = 128)]
    pub n_x_max: usize,
    /// Sweep step; 1 in memory, 10 when streaming.
    #[arg(long)]
    pub step: Option<usize>,
    /// Rows per batch (streaming only, required there).
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Rows kept for fitting the copula when streaming.
    #[arg(long)]
    pub reservoir_size: Option<usize>,
    /// How streamed test bitstrings are judged.
    #[arg(long, default_value = "test-majority", value_parser = parse_test_rule)]
    pub test_rule: TestRule,
    /// Byte budget of each bitstring table when streaming.
    #[arg(long)]
    pub table_budget: Option<usize>,
    /// Directory for streamed encodings; a temporary one when absent.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write every replicate's sweep curve as CSV.
    #[arg(long)]
    pub curve_csv: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Qubits for the data register.
    #[arg(long = "n-x")]
    pub n_x: usize,
    /// Encoded output file.
    #[arg(long)]
    pub output: PathBuf,
    /// Encoder model JSON; `<output>.model.json` when absent.
    #[arg(long)]
    pub model_output: Option<PathBuf>,
    /// Further CSV to encode with the same model.
    #[arg(long, requires = "test_output")]
    pub test_input: Option<PathBuf>,
    #[arg(long, requires = "test_input")]
    pub test_output: Option<PathBuf>,
    /// Read the input in batches of this many rows.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Zero,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingArg {
    Frequency,
    Uniform,
}

impl From<WeightingArg> for BatchWeighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Frequency => BatchWeighting::Frequency,
            WeightingArg::Uniform => BatchWeighting::Uniform,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long = "n-x")]
    pub n_x: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 30)]
    pub sweeps: usize,
    /// Independent random starts; the lowest final training loss is kept.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Random)]
    pub init: InitArg,
    #[arg(long, value_enum, default_value_t = WeightingArg::Frequency)]
    pub weighting: WeightingArg,
    #[arg(long, default_value_t = bitbit_core::qsim::DEFAULT_QUBIT_CAP)]
    pub qubit_cap: usize,
    /// Training trace CSV.
    #[arg(long)]
    pub output: PathBuf,
    /// Model JSON; `<output>.model.json` when absent.
    #[arg(long)]
    pub model_output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    pub report: PathBuf,
    /// Re-emit the report as indented JSON instead of a summary.
    #[arg(long)]
    pub json: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: bitbit_core::Error| e.to_string())
}

fn parse_test_rule(s: &str) -> Result<TestRule, String> {
    s.parse().map_err(|e: bitbit_core::Error| e.to_string())
}

pub(crate) fn sibling(path: &std::path::Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}
