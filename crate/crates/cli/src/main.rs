//! Compressive-sensing benchmark CLI.
//!
//! Subcommands mirror the pipeline stages: `sense` an image into
//! measurements, `reconstruct` it back, `benchmark` whole method x dataset
//! x ratio grids, `score` raw result tables, and `datasets prepare` source
//! corpora. Exit codes: 0 success, 1 usage or configuration error, 2 data
//! error, 3 benchmark finished but skipped more than 1% of its images.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csbench::sensing::MatrixKind;
use csbench::{Error, Result};

mod benchmark;
mod config;
mod prepare;
mod reconstruct;
mod record;
mod score;
mod sense;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "csbench", version, about = "Compressive-sensing benchmark runner")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Run configuration file (`key = value` lines, `[specifics]` section).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; every matrix and probe in a run derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run methods on their built-in defaults, ignoring manual specifics.
    #[arg(long, global = true)]
    default: bool,
    /// Cap the images taken from each dataset (0 keeps everything).
    #[arg(long, global = true, value_name = "N")]
    limit: Option<usize>,
    /// Output directory for generated files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Weight-scheme file for scoring.
    #[arg(long, global = true, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Per-image progress lines and solver trace files.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compress an image into a measurement container.
    Sense(SenseArgs),
    /// Rebuild an image from a measurement container.
    Reconstruct(ReconstructArgs),
    /// Run method x dataset x ratio combinations and record results.
    Benchmark(BenchmarkArgs),
    /// Aggregate raw-result CSVs into scores and a ranking.
    Score(ScoreArgs),
    /// Dataset utilities.
    #[command(subcommand)]
    Datasets(DatasetsCommand),
}

#[derive(Args)]
struct SenseArgs {
    /// Image file to sense.
    image: PathBuf,
    /// Compression ratio n/m.
    #[arg(long)]
    ratio: Option<u32>,
    /// Explicit measurement count (alternative to --ratio).
    #[arg(long)]
    m: Option<usize>,
    /// Sensing operator family (gaussian, gaussian_orthonormal_rows, identity).
    #[arg(long, value_name = "KIND")]
    matrix: Option<String>,
    /// Output file (defaults to `<image stem>.csm` under --out).
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Measurement container produced by `sense`.
    measurements: PathBuf,
    /// Reconstruction method (l1, tval3, damp).
    #[arg(long)]
    method: Option<String>,
    /// Image geometry as HxW; unneeded when the signal is square.
    #[arg(long, value_name = "HxW")]
    size: Option<String>,
    /// Ground-truth image; prints PSNR/SSIM when given.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
    /// Pipeline stage (`testing`).
    #[arg(long)]
    stage: Option<String>,
    /// Output image file; the extension picks PNG or PNM.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Dataset source as name=path; repeatable.
    #[arg(long = "dataset", value_name = "NAME=PATH", required = true)]
    datasets: Vec<String>,
    /// Method to run; repeatable.
    #[arg(long = "method", value_name = "NAME", required = true)]
    methods: Vec<String>,
    /// Compression ratios to sweep (defaults to 2,4,8,16,32).
    #[arg(long, value_delimiter = ',', value_name = "R,...")]
    ratios: Vec<u32>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Raw-result CSV files.
    #[arg(required = true)]
    csv: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetsCommand {
    /// Decode, conform and write a dataset with a checksum manifest.
    Prepare(PrepareArgs),
}

#[derive(Args)]
struct PrepareArgs {
    /// Source file or directory (IDX, CIFAR-10 binary, image folder).
    source: PathBuf,
    /// Target geometry: dataset name (mnist, celeba, ...) or HxW.
    #[arg(long, required = true)]
    spec: String,
    /// Convert to single-channel grayscale.
    #[arg(long)]
    gray: bool,
    /// Cut square patches of this side length instead of whole frames.
    #[arg(long, value_name = "SIZE")]
    patch: Option<usize>,
    /// Patch stride (defaults to the patch size).
    #[arg(long, value_name = "N")]
    stride: Option<usize>,
    /// Also emit the 8 rotation/flip variants of every patch.
    #[arg(long)]
    augment: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_class(&e))
        }
    }
}

/// Usage and configuration mistakes exit 1; broken inputs and failed
/// computations exit 2.
fn exit_class(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Precondition(_)
        | Error::UnknownMethod(_)
        | Error::UnsupportedMethod(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    // Flags override file values.
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    if cli.global.default {
        cfg.use_defaults = true;
    }
    if let Some(limit) = cli.global.limit {
        cfg.limit = limit;
    }
    if let Some(out) = &cli.global.out {
        cfg.output_dir = out.clone();
    }
    cfg.verbose |= cli.global.verbose;

    match cli.command {
        Command::Sense(args) => {
            if let Some(ratio) = args.ratio {
                cfg.ratios = vec![ratio];
            }
            if let Some(m) = args.m {
                cfg.m = Some(m);
            }
            if let Some(kind) = &args.matrix {
                cfg.sensing = MatrixKind::parse(kind)
                    .ok_or_else(|| Error::Config(format!("unknown sensing kind `{kind}`")))?;
            }
            cfg.validate()?;
            sense::run(&cfg, &args.image, args.output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Reconstruct(args) => {
            if let Some(method) = &args.method {
                cfg.reconstruction = method.clone();
            }
            if let Some(stage) = &args.stage {
                cfg.stage = Some(stage.clone());
            }
            cfg.validate()?;
            let size = args.size.as_deref().map(reconstruct::parse_size).transpose()?;
            reconstruct::run(
                &cfg,
                &reconstruct::ReconstructArgsResolved {
                    measurements: &args.measurements,
                    size,
                    truth: args.truth.as_deref(),
                    output: args.output.as_deref(),
                },
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Benchmark(args) => {
            if !args.ratios.is_empty() {
                cfg.ratios = args.ratios.clone();
            }
            cfg.validate()?;
            let datasets = args
                .datasets
                .iter()
                .map(|arg| benchmark::parse_dataset_arg(arg))
                .collect::<Result<Vec<_>>>()?;
            let outcome = benchmark::run(&cfg, &datasets, &args.methods)?;
            if outcome.skipped * 100 > outcome.attempts {
                eprintln!(
                    "warning: skipped {} of {} images (more than 1%)",
                    outcome.skipped, outcome.attempts
                );
                return Ok(ExitCode::from(3));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Score(args) => {
            score::run(
                &args.csv,
                cli.global.weights.as_deref(),
                &cfg.output_dir,
                cfg.verbose,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Datasets(DatasetsCommand::Prepare(args)) => {
            let opts = prepare::PrepareOptions {
                spec: args.spec.clone(),
                gray: args.gray,
                patch: args.patch,
                stride: args.stride,
                augment: args.augment,
                limit: cfg.limit,
            };
            prepare::run(&args.source, &cfg.output_dir, &opts)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
