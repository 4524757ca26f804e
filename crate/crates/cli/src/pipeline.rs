//! End-to-end run over one or more bar files (shards).
//!
//! Each shard is parsed, derived and binned on its own; the single bar pair
//! straddling two consecutive shards is derived separately, so a sharded run
//! produces exactly the histogram of the concatenated input.

use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use returnlaw::derive::{derive, DerivativeKind, SkipTally};
use returnlaw::dist::{CumulativeDirection, Histogram};
use returnlaw::fit::{fit_loglog_slope, FitResult};
use returnlaw::ingest::{build_series, GapPolicy, OhlcvBar};
use returnlaw::model::{ModelParams, ScalingLaw};
use returnlaw::numeric::stable_sum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::collapse_cmd::{collapse_density, collapse_table};
use crate::config::{is_false, one_or_many, Span};
use crate::data_cmd::{default_bin_width, parse_kind, read_bar_file, smallest_step, IngestArgs};
use crate::dist_cmd::{bin_values, cdf_table, count_table, density_table, rank_table};
use crate::error::{from_dist, from_fit, from_ingest, from_model, CliError, CliResult};
use crate::manifest::{digest_file, Manifest};
use crate::table::{self, OutputFormat, Table};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineArgs {
    /// Bar file; repeat for shards (e.g. one file per year).
    #[arg(long)]
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    /// Directory receiving every output and the manifest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// D, R, W, omega, S or general [default: R].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<i32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ingest: IngestArgs,
    /// Bin width [default: price step, or price step over the mean close for R].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
    /// Bin |value| instead of value.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub magnitude: bool,
    /// Range lo:hi of the density slope fit (no fit if absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<Span>,
    /// Collapse method, unity or ratio (needs --c, --alpha and --beta).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Power n of the collapse model [default: 4].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[arg(long = "c")]
    #[serde(rename = "C", alias = "c", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Collapse region lo:hi [default: central 80% of the mass].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Span>,
    /// Worker threads for shards [default: all cores].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub histogram: Histogram,
    pub fit: Option<FitResult>,
    pub flatness: Option<f64>,
    pub outputs: Vec<PathBuf>,
    pub manifest: PathBuf,
}

struct Shard {
    path: PathBuf,
    bars: Vec<OhlcvBar>,
    row_errors: usize,
}

struct Derived {
    values: Vec<f64>,
    skipped: SkipTally,
}

fn derive_bars(bars: Vec<OhlcvBar>, args: &IngestArgs, tau: i64, kind: DerivativeKind) -> CliResult<Derived> {
    let series = build_series(bars, args.instrument(), tau, args.price_step(), args.gap_policy()?).map_err(from_ingest)?;
    let d = derive(&series, kind);
    Ok(Derived {
        values: d.points.iter().map(|p| p.value).collect(),
        skipped: d.skipped,
    })
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::compute("pipeline", e))
}

pub fn run(args: &PipelineArgs) -> CliResult<PipelineReport> {
    let out_dir = args
        .output_dir
        .clone()
        .ok_or_else(|| CliError::input("config", "pipeline needs --output-dir"))?;
    if args.input.is_empty() {
        return Err(CliError::input("config", "no input file given"));
    }
    let kind = parse_kind(args.kind.as_deref(), args.theta, args.phi)?;
    let options = args.ingest.format_options()?;
    let gap_policy = args.ingest.gap_policy()?;
    let format = args.format.unwrap_or_default();
    let pool = pool(args.threads)?;

    // parse every shard
    let mut shards: Vec<Shard> = pool.install(|| {
        args.input
            .par_iter()
            .map(|path| {
                let (mut bars, row_errors) = read_bar_file(path, &options)?;
                bars.sort_by_key(|b| b.timestamp);
                Ok(Shard {
                    path: path.clone(),
                    bars,
                    row_errors,
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    shards.retain(|s| !s.bars.is_empty());
    if shards.is_empty() {
        return Err(from_ingest(returnlaw::ingest::IngestError::Empty));
    }
    shards.sort_by_key(|s| s.bars[0].timestamp);
    for w in shards.windows(2) {
        let (a, b) = (w[0].bars.last().expect("non-empty"), &w[1].bars[0]);
        if a.timestamp >= b.timestamp {
            return Err(CliError::input(
                "ingest",
                format!("shards {} and {} overlap", w[0].path.display(), w[1].path.display()),
            ));
        }
    }

    let tau = match args.ingest.tau {
        Some(t) => t,
        None => {
            let within = shards.iter().filter_map(|s| smallest_step(s.bars.iter().map(|b| b.timestamp)));
            let across = shards
                .windows(2)
                .map(|w| w[1].bars[0].timestamp - w[0].bars.last().expect("non-empty").timestamp);
            within
                .chain(across)
                .min()
                .ok_or_else(|| CliError::input("ingest", "cannot infer tau from fewer than two bars; pass --tau"))?
        }
    };

    let bar_count: usize = shards.iter().map(|s| s.bars.len()).sum();
    let row_errors: usize = shards.iter().map(|s| s.row_errors).sum();
    let close_sums: Vec<f64> = shards
        .iter()
        .map(|s| stable_sum(s.bars.iter().map(|b| b.close)))
        .collect();
    let mean_close = stable_sum(close_sums) / bar_count as f64;
    let boundaries: Vec<Vec<OhlcvBar>> = shards
        .windows(2)
        .map(|w| vec![*w[0].bars.last().expect("non-empty"), w[1].bars[0]])
        .collect();

    // derive each shard, then the bar pairs across shard boundaries
    let ingest = &args.ingest;
    let mut derived: Vec<Derived> = pool.install(|| {
        shards
            .into_par_iter()
            .map(|s| derive_bars(s.bars, ingest, tau, kind))
            .collect::<CliResult<Vec<_>>>()
    })?;
    for pair in boundaries {
        derived.push(derive_bars(pair, ingest, tau, kind)?);
    }
    let mut skipped = SkipTally::default();
    let mut value_count = 0;
    for d in &derived {
        skipped.absorb(&d.skipped);
        value_count += d.values.len();
    }
    eprintln!("derive {kind}: {value_count} values, {skipped}");

    let bin_width = match args.bin_width {
        Some(w) => w,
        None => default_bin_width(kind, ingest.price_step(), mean_close)
            .ok_or_else(|| CliError::input("config", format!("no default bin width for kind {kind}; pass --bin-width")))?,
    };
    let origin = args
        .origin
        .unwrap_or(if args.magnitude { 0.0 } else { -bin_width / 2.0 });
    let geometry = returnlaw::dist::BinGeometry::new(bin_width, origin).map_err(from_dist)?;
    let partial: Vec<Histogram> = pool.install(|| {
        derived
            .par_iter()
            .map(|d| bin_values(&d.values, geometry, args.magnitude))
            .collect::<CliResult<Vec<_>>>()
    })?;
    drop(derived);
    let mut histogram = Histogram::new(geometry);
    for h in &partial {
        histogram.merge_from(h).map_err(from_dist)?;
    }
    if histogram.is_empty() {
        return Err(CliError::compute("dist", "no derivative values to bin"));
    }

    let mut outputs = Vec::new();
    let mut put = |name: &str, t: &Table| -> CliResult<()> {
        let ext = match format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        let written = table::emit(t, Some(&out_dir.join(format!("{name}.{ext}"))), format, "pipeline")?;
        outputs.extend(written);
        Ok(())
    };
    put("histogram", &count_table(&histogram, args.magnitude))?;
    let density = density_table(&histogram, args.magnitude)?;
    put("density", &density)?;
    put("rank", &rank_table(&histogram, args.magnitude)?)?;
    put("cdf", &cdf_table(&histogram, CumulativeDirection::Above, args.magnitude)?)?;

    let density_points = returnlaw::dist::to_density(&histogram).map_err(from_dist)?;
    let fit = match args.fit_range {
        Some(r) => {
            let pts: Vec<(f64, f64)> = density_points.points.iter().map(|p| (p.y, p.density)).collect();
            let f = fit_loglog_slope(&pts, (r.lo, r.hi)).map_err(from_fit)?;
            let path = out_dir.join("fit.json");
            table::write_json(&path, &f, "fit")?;
            outputs.push(path);
            Some(f)
        }
        None => None,
    };

    let mut flatness = None;
    let method = args.method.clone().unwrap_or_else(|| "unity".to_owned());
    if let (Some(c), Some(alpha), Some(beta)) = (args.c, args.alpha, args.beta) {
        let law = ScalingLaw {
            c,
            alpha,
            tau: tau as f64,
        };
        let params = ModelParams::with_scaling(args.n.unwrap_or(4.0), beta, law).map_err(from_model)?;
        let r = collapse_density(&density_points, &params, &method, args.region)?;
        flatness = Some(r.flatness);
        let t = collapse_table(&r);
        let ext = if format == OutputFormat::Csv { "csv" } else { "json" };
        outputs.extend(table::emit(&t, Some(&out_dir.join(format!("collapse.{ext}"))), format, "pipeline")?);
    }

    let summary = json!({
        "kind": kind,
        "label": kind.to_string(),
        "instrument": ingest.instrument(),
        "tau": tau,
        "bars": bar_count,
        "values": value_count,
        "skipped": skipped,
        "row_errors": row_errors,
        "bin_width": bin_width,
        "origin": origin,
        "total": histogram.total(),
        "slope": fit.as_ref().map(|f| f.param("slope")),
        "flatness": flatness,
    });
    let summary_path = out_dir.join("summary.json");
    table::write_json(&summary_path, &summary, "pipeline")?;
    outputs.push(summary_path);

    let effective = effective_config(args, kind, tau, bin_width, origin, gap_policy, &method);
    let inputs = args
        .input
        .iter()
        .map(|p| digest_file(p, "pipeline"))
        .collect::<CliResult<Vec<_>>>()?;
    let digests = outputs
        .iter()
        .map(|p| {
            digest_file(p, "pipeline").map(|mut d| {
                d.path = relative_to(p, &out_dir);
                d
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let manifest_path = out_dir.join("manifest.json");
    table::write_json(&manifest_path, &Manifest::new(effective, inputs, digests), "pipeline")?;

    Ok(PipelineReport {
        histogram,
        fit,
        flatness,
        outputs,
        manifest: manifest_path,
    })
}

fn relative_to(path: &Path, dir: &Path) -> PathBuf {
    path.strip_prefix(dir).map(Path::to_owned).unwrap_or_else(|_| path.to_owned())
}

/// The configuration with every default that affects the numbers made explicit.
fn effective_config(
    args: &PipelineArgs,
    kind: DerivativeKind,
    tau: i64,
    bin_width: f64,
    origin: f64,
    gap_policy: GapPolicy,
    method: &str,
) -> Value {
    let mut a = args.clone();
    a.kind = Some(match kind {
        DerivativeKind::GeneralRatio { .. } => "general".to_owned(),
        k => k.label().to_owned(),
    });
    a.ingest.tau = Some(tau);
    a.ingest.price_step = Some(args.ingest.price_step());
    a.ingest.gap_policy = Some(if gap_policy == GapPolicy::Strict { "strict" } else { "lenient" }.to_owned());
    a.ingest.timestamp_format.get_or_insert_with(|| "auto".to_owned());
    a.ingest.delimiter.get_or_insert_with(|| "auto".to_owned());
    a.bin_width = Some(bin_width);
    a.origin = Some(origin);
    a.format = Some(args.format.unwrap_or_default());
    if a.c.is_some() {
        a.n.get_or_insert(4.0);
        a.method = Some(method.to_owned());
    }
    serde_json::to_value(a).expect("arguments serialize")
}
