use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use returnlaw::dist::Density;
use returnlaw::fit::{density_mode, fit_bmax_scaling, fit_loglog_slope, FitResult};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{self, Span};
use crate::error::{from_fit, CliError, CliResult};
use crate::table::{self, ReadTable};

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Power exponent from a log-log least-squares line over a range.
    Slope(SlopeArgs),
    /// C and alpha of b_max = C / tau^alpha from a (tau, b_max) table.
    BmaxScaling(FitArgs),
    /// Mode height of a density table.
    Bmax(FitArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// JSON result file (the flat summary always goes to stdout).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SlopeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub io: FitArgs,
    /// Fit range lo:hi on the abscissa.
    #[arg(long, alias = "range")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<Span>,
    /// Abscissa column [default: y, threshold or rank, else the first column].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_column: Option<String>,
    /// Ordinate column [default: density, count or frequency, else the last column].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_column: Option<String>,
}

pub fn run(cmd: FitCommand, config: &Map<String, Value>) -> CliResult<()> {
    match cmd {
        FitCommand::Slope(a) => slope(&config::resolve(&a, config)?),
        FitCommand::BmaxScaling(a) => bmax_scaling(&config::resolve(&a, config)?),
        FitCommand::Bmax(a) => bmax(&config::resolve(&a, config)?),
    }
}

fn input(args: &FitArgs) -> CliResult<&Path> {
    args.input
        .as_deref()
        .ok_or_else(|| CliError::input("config", "no input file given"))
}

fn first_named<'a>(t: &'a ReadTable, names: &[&str], fallback: usize) -> Option<&'a [f64]> {
    names
        .iter()
        .find_map(|n| t.column(n))
        .or_else(|| t.columns.get(fallback).map(Vec::as_slice))
}

fn finish(result: &impl Serialize, summary: &str, output: Option<&Path>) -> CliResult<()> {
    print!("{summary}");
    if let Some(p) = output {
        table::write_json(p, result, "fit")?;
    }
    Ok(())
}

/// Fits the slope of the `(x, y)` columns of a table over `range`.
pub fn slope_of_table(t: &ReadTable, args: &SlopeArgs, path: &Path) -> CliResult<FitResult> {
    let range = args
        .fit_range
        .ok_or_else(|| CliError::input("config", "fit slope needs --fit-range lo:hi"))?;
    let x = match &args.x_column {
        Some(n) => t.pick(Some(n), 0, path, "fit")?,
        None => first_named(t, &["y", "threshold", "rank"], 0).unwrap_or(&[]),
    };
    let y = match &args.y_column {
        Some(n) => t.pick(Some(n), 0, path, "fit")?,
        None => first_named(t, &["density", "count", "frequency"], t.columns.len().saturating_sub(1)).unwrap_or(&[]),
    };
    let points: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    fit_loglog_slope(&points, (range.lo, range.hi)).map_err(from_fit)
}

pub fn slope(args: &SlopeArgs) -> CliResult<()> {
    let path = input(&args.io)?;
    let t = table::read_numeric(path, "fit")?;
    let r = slope_of_table(&t, args, path)?;
    finish(&r, &r.to_string(), args.io.output.as_deref())
}

pub fn bmax_scaling(args: &FitArgs) -> CliResult<()> {
    let path = input(args)?;
    let t = table::read_numeric(path, "fit")?;
    let tau = t.pick(t.column("tau").map(|_| "tau"), 0, path, "fit")?;
    let b = t.pick(t.column("b_max").map(|_| "b_max"), 1, path, "fit")?;
    let samples: Vec<(f64, f64)> = tau.iter().copied().zip(b.iter().copied()).collect();
    let r = fit_bmax_scaling(&samples).map_err(from_fit)?;
    for w in &r.warnings {
        eprintln!("warning[fit]: {w}");
    }
    finish(&r, &r.to_string(), args.output.as_deref())
}

/// Reads a `y,density` table into a [`Density`], taking the bin width from
/// the sidecar or else from the smallest spacing of `y`.
pub fn read_density(path: &Path, stage: &'static str) -> CliResult<Density> {
    let t = table::read_numeric(path, stage)?;
    let y = t.pick(t.column("y").map(|_| "y"), 0, path, stage)?;
    let d = t.pick(t.column("density").map(|_| "density"), 1, path, stage)?;
    let width = table::read_sidecar(path)
        .and_then(|m| m.get("bin_width").and_then(Value::as_f64))
        .or_else(|| {
            y.windows(2)
                .map(|w| w[1] - w[0])
                .filter(|&s| s > 0.0)
                .min_by(f64::total_cmp)
        })
        .ok_or_else(|| CliError::input(stage, format!("{}: cannot determine the bin width", path.display())))?;
    Ok(Density::from_points(width, y.iter().copied().zip(d.iter().copied())))
}

pub fn bmax(args: &FitArgs) -> CliResult<()> {
    let path = input(args)?;
    let d = read_density(path, "fit")?;
    let (y, h) = density_mode(&d).map_err(from_fit)?;
    let result = json!({ "y_mode": y, "b_max": h, "bin_width": d.bin_width });
    finish(&result, &format!("y_mode\t{y}\nb_max\t{h}\n"), args.output.as_deref())
}
