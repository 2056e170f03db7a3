//! `sefa`: factorize generator weights, build toy generators, and inspect the
//! discovered directions.
//!
//! Exit codes: 0 on success, 1 on a runtime error, 2 on a usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sefa_core::LayerSelection;

#[derive(Debug, Parser)]
#[command(name = "sefa", version, about = "Closed-form latent direction discovery")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize the selected first-step weights of a manifest.
    Factorize(FactorizeArgs),
    /// Write a planted toy generator as a manifest directory.
    MakeToy(MakeToyArgs),
    /// Render frames moving a code along one direction.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Mean attribute change per direction, written as CSV.
    #[command(allow_negative_numbers = true)]
    Rescore(RescoreArgs),
    /// Compare closed-form directions with the sampling PCA baseline.
    Compare(CompareArgs),
    /// Serve the live-editing HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Layer selection such as "0-1", "2-5", "6-" or "0,3-4".
    #[arg(long, default_value = "0-", value_parser = parse_selection)]
    pub layers: LayerSelection,
    /// Number of directions [default: min(d, 50)].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeToyArgs {
    #[arg(long, default_value_t = 16)]
    pub d: usize,
    #[arg(long, default_value_t = 24)]
    pub m: usize,
    /// Planted rank; must match the number of --sigma values.
    #[arg(long)]
    pub r: Option<usize>,
    /// Descending planted singular values.
    #[arg(long, value_delimiter = ',', default_value = "8,4,2,1")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use standard basis left vectors so direction j moves only y_j.
    #[arg(long)]
    pub aligned: bool,
    /// Rendered image width and height in pixels.
    #[arg(long, default_value_t = sefa_core::toy::DEFAULT_SIZE)]
    pub size: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Toy generator directory written by make-toy.
    #[arg(long = "gen")]
    pub generator: PathBuf,
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = -3.0)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 7, value_parser = clap::value_parser!(u64).range(2..))]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RescoreArgs {
    #[arg(long = "gen")]
    pub generator: PathBuf,
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long, default_value_t = sefa_core::analysis::DEFAULT_RESCORE_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = sefa_core::analysis::DEFAULT_RESCORE_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long = "gen")]
    pub generator: PathBuf,
    /// Number of directions [default: min(d, m, 50)].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long = "gen")]
    pub generator: PathBuf,
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long, default_value_t = sefa_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "annotations.json")]
    pub annotations: PathBuf,
    /// Seed of the initial latent code.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory with the browser UI bundle, served at the root path.
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

fn parse_selection(s: &str) -> Result<LayerSelection, String> {
    s.parse().map_err(|e: sefa_core::model_io::SelectionError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
