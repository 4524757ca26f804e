use std::path::PathBuf;

use clap::Args;
use returnlaw::collapse::{collapse_ratio, collapse_unity, CollapseResult};
use returnlaw::dist::Density;
use returnlaw::model::{model_density_tau, ModelParams};
use serde::{Deserialize, Serialize};

use crate::config::{self, Span};
use crate::error::{from_collapse, CliError, CliResult};
use crate::fit_cmd::read_density;
use crate::model_cmd::ModelArgs;
use crate::table::{self, Column, OutputFormat, Table};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CollapseArgs {
    /// Density table (`y,density`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// JSON file with n, beta, C, alpha and tau; flags override it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    /// unity or ratio [default: unity].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Flatness region lo:hi [default: central 80% of the mass].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Span>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

pub fn collapse_density(
    density: &Density,
    params: &ModelParams,
    method: &str,
    region: Option<Span>,
) -> CliResult<CollapseResult> {
    let region = region.map(|s| (s.lo, s.hi));
    match method {
        "unity" => collapse_unity(density, params, region),
        "ratio" => collapse_ratio(density, |y| model_density_tau(y, params).unwrap_or(f64::NAN), region),
        other => return Err(CliError::input("config", format!("unknown collapse method `{other}`"))),
    }
    .map_err(from_collapse)
}

pub fn collapse_table(r: &CollapseResult) -> Table {
    Table::new(
        vec!["y", "collapsed"],
        vec![
            Column::Real(r.points.iter().map(|p| p.0).collect()),
            Column::Real(r.points.iter().map(|p| p.1).collect()),
        ],
    )
    .with_meta("method", r.method)
    .with_meta("flatness", r.flatness)
    .with_meta("level", r.level())
    .with_meta("region", r.region)
    .with_meta("rescale", r.rescale)
    .with_meta("excluded", r.excluded)
}

pub fn collapse(args: &CollapseArgs) -> CliResult<()> {
    let path = args
        .input
        .as_deref()
        .ok_or_else(|| CliError::input("config", "no input file given"))?;
    let model = match &args.params {
        Some(p) => config::resolve(&args.model, &config::load(p)?)?,
        None => args.model.clone(),
    };
    let params = model.scaling_params()?;
    let density = read_density(path, "collapse")?;
    let r = collapse_density(&density, &params, args.method.as_deref().unwrap_or("unity"), args.region)?;
    eprintln!("collapse: flatness {} over [{}, {}]", r.flatness, r.region[0], r.region[1]);
    table::emit(&collapse_table(&r), args.output.as_deref(), args.format.unwrap_or_default(), "collapse")?;
    Ok(())
}
