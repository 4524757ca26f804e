use std::path::PathBuf;

use clap::Args;
use returnlaw::dist::{cumulative, rank_order, to_density, BinGeometry, CumulativeDirection, Histogram};
use serde::{Deserialize, Serialize};

use crate::config::{is_false, one_or_many};
use crate::error::{from_dist, CliError, CliResult};
use crate::table::{self, Column, OutputFormat, Table};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BinArgs {
    /// Derivative table; repeat for shards, whose histograms are merged.
    #[arg(long)]
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Bin width [default: the hint recorded by `derive`].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    /// Left edge of bin 0 [default: -bin_width/2, or 0 with --magnitude].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
    /// Bin |value| instead of value.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub magnitude: bool,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl BinArgs {
    pub fn geometry(&self, bin_width: f64) -> CliResult<BinGeometry> {
        let origin = self
            .origin
            .unwrap_or(if self.magnitude { 0.0 } else { -bin_width / 2.0 });
        BinGeometry::new(bin_width, origin).map_err(from_dist)
    }
}

/// Histogram of `values` (or their magnitudes).
pub fn bin_values(values: &[f64], geometry: BinGeometry, magnitude: bool) -> CliResult<Histogram> {
    let mut h = Histogram::new(geometry);
    if magnitude {
        h.extend(values.iter().map(|v| v.abs()))
    } else {
        h.extend(values.iter().copied())
    }
    .map_err(from_dist)?;
    Ok(h)
}

/// Reads every input, bins it and merges the shard histograms.
pub fn build_histogram(args: &BinArgs) -> CliResult<Histogram> {
    let first = args
        .input
        .first()
        .ok_or_else(|| CliError::input("config", "no input file given"))?;
    let bin_width = match args.bin_width {
        Some(w) => w,
        None => table::read_sidecar(first)
            .and_then(|m| m.get("bin_width_hint").and_then(|v| v.as_f64()))
            .ok_or_else(|| CliError::input("config", "no --bin-width given and the input records no hint"))?,
    };
    let geometry = args.geometry(bin_width)?;
    let mut total = Histogram::new(geometry);
    for path in &args.input {
        let t = table::read_numeric(path, "dist")?;
        let values = t.pick(Some("value"), 0, path, "dist").or_else(|_| {
            t.columns
                .last()
                .map(Vec::as_slice)
                .ok_or_else(|| CliError::input("dist", format!("{}: no columns", path.display())))
        })?;
        total
            .merge_from(&bin_values(values, geometry, args.magnitude)?)
            .map_err(from_dist)?;
    }
    Ok(total)
}

fn with_geometry(t: Table, h: &Histogram, magnitude: bool) -> Table {
    t.with_meta("bin_width", h.bin_width())
        .with_meta("origin", h.origin())
        .with_meta("total", h.total())
        .with_meta("magnitude", magnitude)
}

/// `bin,y,count` over populated bins, `y` being the bin centre.
pub fn count_table(h: &Histogram, magnitude: bool) -> Table {
    let g = h.geometry();
    let t = Table::new(
        vec!["bin", "y", "count"],
        vec![
            Column::Int(h.counts().keys().copied().collect()),
            Column::Real(h.counts().keys().map(|&i| g.center(i)).collect()),
            Column::Count(h.counts().values().copied().collect()),
        ],
    );
    with_geometry(t, h, magnitude)
}

/// `y,density` over the span of populated bins.
pub fn density_table(h: &Histogram, magnitude: bool) -> CliResult<Table> {
    let d = to_density(h).map_err(from_dist)?;
    let t = Table::new(
        vec!["y", "density"],
        vec![
            Column::Real(d.points.iter().map(|p| p.y).collect()),
            Column::Real(d.points.iter().map(|p| p.density).collect()),
        ],
    );
    Ok(with_geometry(t, h, magnitude))
}

pub fn rank_table(h: &Histogram, magnitude: bool) -> CliResult<Table> {
    let r = rank_order(h).map_err(from_dist)?;
    let t = Table::new(
        vec!["rank", "frequency", "value"],
        vec![
            Column::Count(r.entries.iter().map(|e| e.rank).collect()),
            Column::Count(r.entries.iter().map(|e| e.frequency).collect()),
            Column::Real(r.entries.iter().map(|e| e.value).collect()),
        ],
    );
    Ok(with_geometry(t, h, magnitude))
}

pub fn cdf_table(h: &Histogram, direction: CumulativeDirection, magnitude: bool) -> CliResult<Table> {
    let c = cumulative(h, direction).map_err(from_dist)?;
    let t = Table::new(
        vec!["threshold", "count"],
        vec![
            Column::Real(c.iter().map(|p| p.0).collect()),
            Column::Count(c.iter().map(|p| p.1).collect()),
        ],
    )
    .with_meta("direction", direction);
    Ok(with_geometry(t, h, magnitude))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct HistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bins: BinArgs,
    /// Emit the normalized density instead of counts.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub density: bool,
}

pub fn hist(args: &HistArgs) -> CliResult<()> {
    let h = build_histogram(&args.bins)?;
    let t = if args.density {
        density_table(&h, args.bins.magnitude)?
    } else {
        count_table(&h, args.bins.magnitude)
    };
    table::emit(&t, args.bins.output.as_deref(), args.bins.format.unwrap_or_default(), "dist")?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct RankArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bins: BinArgs,
}

pub fn rank(args: &RankArgs) -> CliResult<()> {
    let h = build_histogram(&args.bins)?;
    let t = rank_table(&h, args.bins.magnitude)?;
    table::emit(&t, args.bins.output.as_deref(), args.bins.format.unwrap_or_default(), "dist")?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CdfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub bins: BinArgs,
    /// above or below [default: above].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
}

pub fn parse_direction(s: Option<&str>) -> CliResult<CumulativeDirection> {
    match s.unwrap_or("above") {
        "above" => Ok(CumulativeDirection::Above),
        "below" => Ok(CumulativeDirection::Below),
        other => Err(CliError::input("config", format!("unknown direction `{other}`"))),
    }
}

pub fn cdf(args: &CdfArgs) -> CliResult<()> {
    let direction = parse_direction(args.direction.as_deref())?;
    let h = build_histogram(&args.bins)?;
    let t = cdf_table(&h, direction, args.bins.magnitude)?;
    table::emit(&t, args.bins.output.as_deref(), args.bins.format.unwrap_or_default(), "dist")?;
    Ok(())
}
