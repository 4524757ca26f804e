use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use returnlaw::derive::{derive as derive_series, DerivativeKind, DerivativeSeries};
use returnlaw::ingest::{
    build_series, parse_bars, resample as resample_series, write_bars, Delimiter, FormatOptions, GapPolicy,
    OhlcvBar, PriceSeries, TimestampFormat, DEFAULT_PRICE_STEP,
};
use returnlaw::model::{model_density_tau, GridSpacing, ModelParams, ScalingLaw, TabulatedSampler, DEFAULT_GRID_CELLS};
use returnlaw::numeric::format_f64;
use serde::{Deserialize, Serialize};

use crate::config::one_or_many;
use crate::error::{from_ingest, from_model, CliError, CliResult};
use crate::table::{self, Column, OutputFormat, Table};

/// Options shared by every command that reads bar files.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestArgs {
    /// Instrument symbol recorded in outputs.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instrument: Option<String>,
    /// Sampling period in seconds (inferred from the smallest timestamp step if absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<i64>,
    /// Smallest price increment [default: 1e-5].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_step: Option<f64>,
    /// strict or lenient [default: lenient].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_policy: Option<String>,
    /// auto, epoch, iso8601 or a strftime pattern [default: auto].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_format: Option<String>,
    /// auto, comma or tab [default: auto].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delimiter: Option<String>,
}

impl IngestArgs {
    pub fn format_options(&self) -> CliResult<FormatOptions> {
        let delimiter = match self.delimiter.as_deref().unwrap_or("auto") {
            "auto" => Delimiter::Auto,
            "comma" | "," => Delimiter::Comma,
            "tab" | "\t" => Delimiter::Tab,
            other => return Err(CliError::input("config", format!("unknown delimiter `{other}`"))),
        };
        let timestamp_format = self
            .timestamp_format
            .as_deref()
            .map_or(TimestampFormat::Auto, TimestampFormat::from_flag);
        Ok(FormatOptions {
            delimiter,
            timestamp_format,
        })
    }

    pub fn gap_policy(&self) -> CliResult<GapPolicy> {
        match self.gap_policy.as_deref().unwrap_or("lenient") {
            "lenient" => Ok(GapPolicy::Lenient),
            "strict" => Ok(GapPolicy::Strict),
            other => Err(CliError::input("config", format!("unknown gap policy `{other}`"))),
        }
    }

    pub fn price_step(&self) -> f64 {
        self.price_step.unwrap_or(DEFAULT_PRICE_STEP)
    }

    pub fn instrument(&self) -> &str {
        self.instrument.as_deref().unwrap_or("")
    }
}

const MAX_ROW_WARNINGS: usize = 20;

/// Parses one bar file, reporting malformed rows on stderr. Returns the bars
/// and the number of rows skipped.
pub fn read_bar_file(path: &Path, options: &FormatOptions) -> CliResult<(Vec<OhlcvBar>, usize)> {
    let file = File::open(path).map_err(|e| CliError::io("ingest", path, e))?;
    let parsed = parse_bars(BufReader::with_capacity(1 << 20, file), options)
        .map_err(|e| CliError::input("ingest", format!("{}: {e}", path.display())))?;
    for err in parsed.errors.iter().take(MAX_ROW_WARNINGS) {
        eprintln!("warning[ingest]: {} line {}: {}", path.display(), err.line, err.reason);
    }
    if parsed.errors.len() > MAX_ROW_WARNINGS {
        eprintln!(
            "warning[ingest]: {}: {} more malformed rows",
            path.display(),
            parsed.errors.len() - MAX_ROW_WARNINGS
        );
    }
    Ok((parsed.bars, parsed.errors.len()))
}

/// Smallest positive step between sorted timestamps.
pub fn smallest_step(sorted_timestamps: impl IntoIterator<Item = i64>) -> Option<i64> {
    let mut prev = None;
    let mut best: Option<i64> = None;
    for t in sorted_timestamps {
        if let Some(p) = prev {
            let d = t - p;
            if d > 0 {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        prev = Some(t);
    }
    best
}

/// Reads and concatenates bar files into one series.
pub fn load_series(paths: &[PathBuf], ingest: &IngestArgs) -> CliResult<(PriceSeries, usize)> {
    if paths.is_empty() {
        return Err(CliError::input("config", "no input file given"));
    }
    let options = ingest.format_options()?;
    let mut bars = Vec::new();
    let mut row_errors = 0;
    for p in paths {
        let (b, e) = read_bar_file(p, &options)?;
        bars.extend(b);
        row_errors += e;
    }
    bars.sort_by_key(|b| b.timestamp);
    let tau = match ingest.tau {
        Some(t) => t,
        None => smallest_step(bars.iter().map(|b| b.timestamp))
            .ok_or_else(|| CliError::input("ingest", "cannot infer tau from fewer than two bars; pass --tau"))?,
    };
    let series = build_series(bars, ingest.instrument(), tau, ingest.price_step(), ingest.gap_policy()?)
        .map_err(from_ingest)?;
    Ok((series, row_errors))
}

pub fn parse_kind(kind: Option<&str>, theta: Option<i32>, phi: Option<i32>) -> CliResult<DerivativeKind> {
    let kind = kind.unwrap_or("R");
    if kind == "general" {
        let (Some(t), Some(p)) = (theta, phi) else {
            return Err(CliError::input("config", "kind `general` needs --theta and --phi"));
        };
        return DerivativeKind::general(t, p).map_err(|e| CliError::input("config", e));
    }
    kind.parse().map_err(|e| CliError::input("config", e))
}

/// `x` rounded to three significant digits.
pub fn round_significant(x: f64) -> f64 {
    format!("{x:.2e}").parse().expect("formatted float parses")
}

/// Natural bin width for a derivative: the price step for plain differences
/// and the price step over the mean close for relative returns, rounded to
/// three significant digits.
pub fn default_bin_width(kind: DerivativeKind, price_step: f64, mean_close: f64) -> Option<f64> {
    match kind {
        DerivativeKind::PlainReturn | DerivativeKind::VolumeChange => Some(price_step),
        DerivativeKind::RelativeReturn if mean_close > 0.0 => Some(round_significant(price_step / mean_close)),
        _ => None,
    }
}

pub fn derivative_table(d: &DerivativeSeries) -> Table {
    Table::new(
        vec!["timestamp", "value"],
        vec![
            Column::Int(d.points.iter().map(|p| p.timestamp).collect()),
            Column::Real(d.points.iter().map(|p| p.value).collect()),
        ],
    )
    .with_meta("kind", d.kind)
    .with_meta("label", d.kind.to_string())
    .with_meta("tau", d.tau)
    .with_meta("count", d.points.len())
    .with_meta("skipped", d.skipped)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DeriveArgs {
    /// Bar file; repeat for files that are concatenated.
    #[arg(long)]
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    /// Output table (stdout if absent).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
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
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ingest: IngestArgs,
}

pub fn derive(args: &DeriveArgs) -> CliResult<()> {
    let kind = parse_kind(args.kind.as_deref(), args.theta, args.phi)?;
    let (series, row_errors) = load_series(&args.input, &args.ingest)?;
    let d = derive_series(&series, kind);
    eprintln!("derive {}: {} values, {}", kind, d.points.len(), d.skipped);
    let mut t = derivative_table(&d)
        .with_meta("instrument", series.instrument())
        .with_meta("row_errors", row_errors);
    if let Some(w) = default_bin_width(kind, series.price_step(), series.mean_close()) {
        t = t.with_meta("bin_width_hint", w);
    }
    table::emit(&t, args.output.as_deref(), args.format.unwrap_or_default(), "derive")?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ResampleArgs {
    #[arg(long)]
    #[serde(deserialize_with = "one_or_many", skip_serializing_if = "Vec::is_empty")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Target sampling period in seconds, a multiple of tau.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_tau: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ingest: IngestArgs,
}

pub fn resample(args: &ResampleArgs) -> CliResult<()> {
    let new_tau = args
        .new_tau
        .ok_or_else(|| CliError::input("config", "resample needs --new-tau"))?;
    let (series, _) = load_series(&args.input, &args.ingest)?;
    let out = resample_series(&series, new_tau).map_err(from_ingest)?;
    write_bar_output(args.output.as_deref(), out.bars(), "resample")
}

fn write_bar_output(path: Option<&Path>, bars: &[OhlcvBar], stage: &'static str) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut w = table::create(p, stage)?;
            write_bars(&mut w, bars, b',')
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(stage, p, e))
        }
        None => write_bars(std::io::stdout().lock(), bars, b',').map_err(|e| CliError::compute(stage, e)),
    }
}

/// Parameters of a synthetic bar series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: f64,
    pub beta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    /// Bar period in seconds; also the `tau` of the scaling law.
    pub tau: i64,
    pub count: u64,
    pub seed: u64,
    pub start_price: f64,
    pub start_time: i64,
    /// Volumes are uniform integers in `[1, vmax]`.
    pub vmax: u64,
    /// Relative returns are drawn on `[-cap, cap]`.
    pub cap: f64,
}

impl SyntheticSpec {
    pub fn params(&self) -> CliResult<ModelParams> {
        if self.tau <= 0 {
            return Err(CliError::input("generate", format!("tau must be a positive number of seconds, got {}", self.tau)));
        }
        let law = ScalingLaw {
            c: self.c,
            alpha: self.alpha,
            tau: self.tau as f64,
        };
        ModelParams::with_scaling(self.n, self.beta, law).map_err(from_model)
    }
}

/// Writes `spec.count` bars. Closes follow `c_t = c_{t-1} (1 + R_t)` with
/// `R_t` drawn i.i.d. from the scaling-law density on `[-cap, cap]`; open is
/// the previous close, high and low bracket open and close.
pub fn write_synthetic<W: Write>(out: &mut W, spec: &SyntheticSpec) -> CliResult<()> {
    let params = spec.params()?;
    if !(spec.cap > 0.0 && spec.cap < 1.0) {
        return Err(CliError::input("generate", format!("cap must lie in (0, 1), got {}", spec.cap)));
    }
    if !(spec.start_price > 0.0 && spec.start_price.is_finite()) {
        return Err(CliError::input("generate", format!("start price must be positive, got {}", spec.start_price)));
    }
    if spec.vmax == 0 {
        return Err(CliError::input("generate", "vmax must be at least 1"));
    }
    let sampler = TabulatedSampler::new(
        |y| model_density_tau(y, &params).unwrap_or(0.0),
        -spec.cap,
        spec.cap,
        DEFAULT_GRID_CELLS,
        GridSpacing::Linear,
    )
    .map_err(from_model)?;
    let mut returns = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut volumes = ChaCha8Rng::seed_from_u64(spec.seed);
    volumes.set_stream(1);

    let io = |e: std::io::Error| CliError::compute("generate", e);
    writeln!(out, "timestamp,open,high,low,close,volume").map_err(io)?;
    let mut close = spec.start_price;
    for i in 0..spec.count {
        let open = close;
        if i > 0 {
            close = open * (1.0 + sampler.quantile(returns.gen::<f64>()));
        }
        let volume = volumes.gen_range(1..=spec.vmax);
        let (o, c) = (format_f64(open), format_f64(close));
        let (h, l) = if close >= open { (&c, &o) } else { (&o, &c) };
        writeln!(out, "{},{o},{h},{l},{c},{volume}", spec.start_time + i as i64 * spec.tau).map_err(io)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Number of bars.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Power of |Y| in the density [default: 4].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Scaling-law constant C.
    #[arg(long = "c")]
    #[serde(rename = "C", alias = "c", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Bar period in seconds [default: 60].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<i64>,
    /// First close [default: 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_price: Option<f64>,
    /// First timestamp in epoch seconds [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_time: Option<i64>,
    /// Largest tick volume [default: 100].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vmax: Option<u64>,
    /// Largest |R| drawn [default: 0.5].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl GenerateArgs {
    pub fn spec(&self) -> CliResult<SyntheticSpec> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::input("config", format!("generate needs --{name}")))
        };
        Ok(SyntheticSpec {
            n: self.n.unwrap_or(4.0),
            beta: need(self.beta, "beta")?,
            c: need(self.c, "c")?,
            alpha: need(self.alpha, "alpha")?,
            tau: self.tau.unwrap_or(60),
            count: self.count.ok_or_else(|| CliError::input("config", "generate needs --count"))?,
            seed: self.seed.unwrap_or(0),
            start_price: self.start_price.unwrap_or(1.0),
            start_time: self.start_time.unwrap_or(0),
            vmax: self.vmax.unwrap_or(100),
            cap: self.cap.unwrap_or(0.5),
        })
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let spec = args.spec()?;
    match &args.output {
        Some(p) => {
            let mut w = table::create(p, "generate")?;
            write_synthetic(&mut w, &spec)?;
            w.flush().map_err(|e| CliError::io("generate", p, e))?;
            table::write_json(&table::sidecar_path(p), &spec, "generate")
        }
        None => {
            let mut w = std::io::BufWriter::new(std::io::stdout().lock());
            write_synthetic(&mut w, &spec)?;
            w.flush().map_err(|e| CliError::compute("generate", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inferred_tau_and_bin_width() {
        assert_eq!(smallest_step([0, 120, 180, 300]), Some(60));
        assert_eq!(smallest_step([5]), None);
        assert_eq!(round_significant(1e-5 / 1.29353), 7.73e-6);
        assert_eq!(default_bin_width(DerivativeKind::PlainReturn, 1e-5, 2.0), Some(1e-5));
        assert_eq!(default_bin_width(DerivativeKind::SimultaneousRatio, 1e-5, 2.0), None);
    }

    #[test]
    fn synthetic_bars_are_valid_and_reproducible() {
        let spec = SyntheticSpec {
            n: 4.0,
            beta: 300.0,
            c: 8.99124,
            alpha: 1.4481,
            tau: 60,
            count: 500,
            seed: 9,
            start_price: 1.3,
            start_time: 1_325_548_800,
            vmax: 50,
            cap: 0.5,
        };
        let mut a = Vec::new();
        write_synthetic(&mut a, &spec).unwrap();
        let mut b = Vec::new();
        write_synthetic(&mut b, &spec).unwrap();
        assert_eq!(a, b);
        let parsed = parse_bars(&a[..], &FormatOptions::default()).unwrap();
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.bars.len(), 500);
        let s = build_series(parsed.bars, "X", 60, 1e-5, GapPolicy::Strict).unwrap();
        assert!(s.bars().iter().all(|b| (1.0..=50.0).contains(&b.volume) && b.volume.fract() == 0.0));

        let empty = SyntheticSpec { count: 0, ..spec };
        let mut c = Vec::new();
        write_synthetic(&mut c, &empty).unwrap();
        assert_eq!(c, b"timestamp,open,high,low,close,volume\n");
    }
}
