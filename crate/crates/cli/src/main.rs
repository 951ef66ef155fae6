//! `dcidc` command-line front end.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dcidc::trainer::{DEFAULT_LAMBDA1, DEFAULT_LAMBDA2, DEFAULT_LEARNING_RATE, DEFAULT_MAX_EPOCHS, DEFAULT_TOL};
use dcidc::ActivationKind;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dcidc", version, about = "Deep clustering with an intra-class distance constraint")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on a dataset and write labels, logs, a checkpoint and a manifest.
    Train(TrainArgs),
    /// Re-run a training run from its manifest.
    Replay(ReplayArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Score a predicted label file against ground truth.
    Evaluate(EvaluateArgs),
    /// Train over a grid of lambda1 values and seeds.
    Sweep(SweepArgs),
    /// Write a synthetic Gaussian-blob dataset with labels.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Normalize {
    Minmax,
    Zscore,
    None,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Feature matrix (CSV or dcmx).
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    format: Option<dcidc::DataFormat>,
    /// Ground-truth labels, one integer per line. Defaults to
    /// `<stem>.labels.csv` next to the data file when it exists.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Normalize::Minmax)]
    normalize: Normalize,
    /// Drop rows labeled 0 before clustering.
    #[arg(long)]
    mask_unlabeled: bool,
    /// Image shape `HxW` of the unmasked data, for the PGM label map.
    #[arg(long, value_parser = parse_shape)]
    image: Option<[usize; 2]>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Encoder widths from the input to the code layer, e.g. `10,6,2`; the
    /// decoder mirrors them.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, value_parser = parse_activation, default_value = "tanh")]
    activation: ActivationKind,
    /// Decoder activation; defaults to the encoder's.
    #[arg(long, value_parser = parse_activation)]
    dec_activation: Option<ActivationKind>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA1, allow_hyphen_values = true)]
    lambda1: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA2, allow_hyphen_values = true)]
    lambda2: f64,
    /// Learning rate; gradients are summed over samples, so scale it with N.
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE, allow_hyphen_values = true)]
    lr: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_TOL, allow_hyphen_values = true)]
    tol: f64,
    /// Mini-batch size; full batch when omitted.
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "dcidc-out")]
    out_dir: PathBuf,
    /// Report per epoch how many samples the least-squares assignment puts
    /// somewhere other than their nearest center.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    /// Encoder widths; the decoder mirrors them.
    #[arg(long, value_delimiter = ',', default_value = "5,3,2")]
    dims: Vec<usize>,
    #[arg(long, value_parser = parse_activation, default_value = "tanh")]
    activation: ActivationKind,
    #[arg(long, value_parser = parse_activation)]
    dec_activation: Option<ActivationKind>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA1, allow_hyphen_values = true)]
    lambda1: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA2, allow_hyphen_values = true)]
    lambda2: f64,
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = dcidc::gradcheck::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Flip the sign of the largest analytic gradient entry (self-test).
    #[arg(long)]
    perturb: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    predicted: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.3,1")]
    grid: Vec<f64>,
    /// Seeds per grid point; overrides `--seed`.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Directory for `sweep.csv` and `sweep_summary.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: Option<dcidc::DataFormat>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 200)]
    n_per_cluster: usize,
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_activation(s: &str) -> Result<ActivationKind, String> {
    s.parse().map_err(|e: dcidc::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<dcidc::DataFormat, String> {
    s.parse().map_err(|e: dcidc::Error| e.to_string())
}

fn parse_shape(s: &str) -> Result<[usize; 2], String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok([parse(h)?, parse(w)?])
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("DCIDC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("DCIDC_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Replay(a) => commands::replay(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Synth(a) => commands::synth(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
