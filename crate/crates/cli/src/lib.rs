//! Command-line front end for `returnlaw`.
//!
//! Every subcommand reads and writes plain files, so each stage can be run
//! and inspected on its own; `pipeline` chains them and records a manifest.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod collapse_cmd;
pub mod config;
pub mod data_cmd;
pub mod dist_cmd;
pub mod error;
pub mod fit_cmd;
pub mod manifest;
pub mod model_cmd;
pub mod pipeline;
pub mod table;

pub use error::{CliError, CliResult, ErrorClass};

#[derive(Debug, Parser)]
#[command(name = "returnlaw", version, about = "Return and volume distributions of OHLCV series")]
pub struct Cli {
    /// JSON configuration file (or a run manifest); flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derivative series (D, R, W, omega, S or R^theta/omega^phi) from bar files.
    Derive(data_cmd::DeriveArgs),
    /// Aggregate bars into a longer sampling period.
    Resample(data_cmd::ResampleArgs),
    /// Synthetic bar file whose relative returns follow the scaling-law density.
    Generate(data_cmd::GenerateArgs),
    /// Histogram or normalized density of derivative values.
    Hist(dist_cmd::HistArgs),
    /// Bin frequencies in decreasing rank order.
    Rank(dist_cmd::RankArgs),
    /// Cumulative counts above or below each bin edge.
    Cdf(dist_cmd::CdfArgs),
    /// Least-squares fits.
    #[command(subcommand)]
    Fit(fit_cmd::FitCommand),
    /// Evaluate a model form over a grid of Y.
    Simulate(model_cmd::SimulateArgs),
    /// Draw values from the model density.
    Sample(model_cmd::SampleArgs),
    /// Collapse a density onto a constant.
    Collapse(collapse_cmd::CollapseArgs),
    /// Bars to histogram, density, rank, cumulative, fit and collapse outputs with a manifest.
    Pipeline(pipeline::PipelineArgs),
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(path) => config::load(path)?,
        None => Default::default(),
    };
    match cli.command {
        Command::Derive(a) => data_cmd::derive(&config::resolve(&a, &config)?),
        Command::Resample(a) => data_cmd::resample(&config::resolve(&a, &config)?),
        Command::Generate(a) => data_cmd::generate(&config::resolve(&a, &config)?),
        Command::Hist(a) => dist_cmd::hist(&config::resolve(&a, &config)?),
        Command::Rank(a) => dist_cmd::rank(&config::resolve(&a, &config)?),
        Command::Cdf(a) => dist_cmd::cdf(&config::resolve(&a, &config)?),
        Command::Fit(f) => fit_cmd::run(f, &config),
        Command::Simulate(a) => model_cmd::simulate(&config::resolve(&a, &config)?),
        Command::Sample(a) => model_cmd::sample(&config::resolve(&a, &config)?),
        Command::Collapse(a) => collapse_cmd::collapse(&config::resolve(&a, &config)?),
        Command::Pipeline(a) => pipeline::run(&config::resolve(&a, &config)?).map(|_| ()),
    }
}
