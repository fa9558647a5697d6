//! `srvnn`: synthesize CSI, preprocess, train, evaluate, sweep and count FLOPs.
//!
//! Log verbosity follows `RUST_LOG` (default `warn`).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tracing_subscriber::EnvFilter;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "srvnn",
    version,
    about = "Sampling-rate versatile CSI motion recognition"
)]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed; overrides the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    /// The held-out test split derived from the seed.
    Test,
    /// Every instance in the file.
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the effective configuration as TOML.
    Config,
    /// Write a synthetic dataset.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repair outliers in every instance of a dataset.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model with sampling-rate augmentation.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Checkpoint path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Training log (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Candidate training rates, comma-separated Hz.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
    },
    /// Accuracy of a checkpoint at each rate.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Test rates, comma-separated Hz.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(long, value_enum, default_value_t = SplitChoice::Test)]
        split: SplitChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one model per rate and test each at every rate.
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Training rates, comma-separated Hz.
        #[arg(long, value_delimiter = ',')]
        train_rates: Option<Vec<f64>>,
        /// Test rates, comma-separated Hz.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inference FLOPs per input length.
    Flops {
        /// Sequence lengths, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        lengths: Vec<usize>,
        /// Subcarriers; defaults to the synthetic dataset width.
        #[arg(long)]
        subcarriers: Option<usize>,
        /// Classes; defaults to the synthetic class count.
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    match cli.command {
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Synth { out } => commands::synth(&cfg, out),
        Command::Preprocess { input, out } => commands::preprocess(&cfg, &input, &out),
        Command::Train {
            data,
            out,
            log,
            rates,
        } => commands::train(&cfg, data, out, log, rates),
        Command::Eval {
            data,
            model,
            rates,
            format,
            split,
            out,
        } => commands::eval(&cfg, data, model, rates, format, split, out),
        Command::Sweep {
            data,
            train_rates,
            rates,
            out,
        } => commands::sweep(&cfg, data, train_rates, rates, out),
        Command::Flops {
            lengths,
            subcarriers,
            classes,
            out,
        } => commands::flops(&cfg, &lengths, subcarriers, classes, out),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
