//! OHLCV bar parsing, validation, series construction and resampling.
//!
//! Bar files are delimited text (comma or tab) with a header row naming the
//! `timestamp`, `open`, `high`, `low`, `close` and `volume` columns in any
//! order. Timestamps are either epoch seconds or ISO-8601 and are normalized
//! to UTC epoch seconds.

use std::io::{BufRead, Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::format_f64;

/// Price step used when a series does not specify one (1e-5 of the quote unit).
pub const DEFAULT_PRICE_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("input has no header row")]
    MissingHeader,
    #[error("cannot build a series from zero bars")]
    Empty,
    #[error("tau must be a positive number of seconds, got {0}")]
    InvalidTau(i64),
    #[error("price step must be positive and finite, got {0}")]
    InvalidPriceStep(f64),
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(i64),
    #[error("gap at t={at}")]
    Gap { at: i64 },
    #[error("gap of {gap} s at t={at} is not a multiple of tau={tau}")]
    GapNotMultiple { at: i64, gap: i64, tau: i64 },
    #[error("bar at t={timestamp}: {reason}")]
    InvalidBar { timestamp: i64, reason: BarViolation },
    #[error("new tau {new_tau} is not a positive multiple of tau {tau}")]
    ResampleNotMultiple { tau: i64, new_tau: i64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reason a single bar fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BarViolation {
    #[error("non-finite field")]
    NonFinite,
    #[error("negative price")]
    NegativePrice,
    #[error("negative volume")]
    NegativeVolume,
    #[error("OHLC invariant violated")]
    Ohlc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvBar {
    pub timestamp: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl OhlcvBar {
    pub fn validate(&self) -> Result<(), BarViolation> {
        let fields = [self.open, self.high, self.low, self.close, self.volume];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(BarViolation::NonFinite);
        }
        if fields[..4].iter().any(|&v| v < 0.0) {
            return Err(BarViolation::NegativePrice);
        }
        if self.volume < 0.0 {
            return Err(BarViolation::NegativeVolume);
        }
        let within = |v: f64| self.low <= v && v <= self.high;
        if self.low > self.high || !within(self.open) || !within(self.close) {
            return Err(BarViolation::Ohlc);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    /// Tab if the header line contains one, comma otherwise.
    #[default]
    Auto,
    Comma,
    Tab,
}

impl Delimiter {
    fn byte_for(self, header: &str) -> u8 {
        match self {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
            Delimiter::Auto if header.contains('\t') => b'\t',
            Delimiter::Auto => b',',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampFormat {
    /// Integer epoch seconds, or any ISO-8601 form [`TimestampFormat::Iso8601`] accepts.
    #[default]
    Auto,
    Epoch,
    /// RFC 3339 with offset, or a naive `YYYY-MM-DD[ T]HH:MM:SS` / `YYYY-MM-DD` taken as UTC.
    Iso8601,
    /// A chrono `strftime` pattern; naive results are taken as UTC.
    Custom(String),
}

impl TimestampFormat {
    /// Parses `auto`, `epoch`, `iso8601`; anything else is a custom pattern.
    pub fn from_flag(s: &str) -> Self {
        match s {
            "auto" => Self::Auto,
            "epoch" => Self::Epoch,
            "iso8601" | "iso" => Self::Iso8601,
            other => Self::Custom(other.to_owned()),
        }
    }

    pub fn parse(&self, field: &str) -> Result<i64, String> {
        let field = field.trim();
        match self {
            Self::Epoch => parse_epoch(field),
            Self::Iso8601 => parse_iso(field),
            Self::Auto => {
                let numeric = field
                    .strip_prefix('-')
                    .unwrap_or(field)
                    .bytes()
                    .all(|b| b.is_ascii_digit());
                if numeric && !field.is_empty() {
                    parse_epoch(field)
                } else {
                    parse_iso(field)
                }
            }
            Self::Custom(fmt) => NaiveDateTime::parse_from_str(field, fmt)
                .map(|t| t.and_utc().timestamp())
                .or_else(|_| DateTime::parse_from_str(field, fmt).map(|t| t.timestamp()))
                .map_err(|e| format!("timestamp `{field}` does not match `{fmt}`: {e}")),
        }
    }
}

fn parse_epoch(field: &str) -> Result<i64, String> {
    field
        .parse::<i64>()
        .map_err(|_| format!("invalid epoch timestamp `{field}`"))
}

fn parse_iso(field: &str) -> Result<i64, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(field) {
        return Ok(t.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(field, fmt) {
            return Ok(t.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(field, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(format!("invalid ISO-8601 timestamp `{field}`"))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatOptions {
    #[serde(default)]
    pub delimiter: Delimiter,
    #[serde(default)]
    pub timestamp_format: TimestampFormat,
}

/// A row that could not be turned into a bar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line number in the input, counting the header as line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Default, Clone)]
pub struct ParsedBars {
    pub bars: Vec<OhlcvBar>,
    pub errors: Vec<RowError>,
}

const COLUMNS: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];

fn column_role(name: &str) -> Option<usize> {
    let name = name.trim().to_ascii_lowercase();
    match name.as_str() {
        "timestamp" | "ts" | "time" | "date" | "datetime" => Some(0),
        "open" | "o" => Some(1),
        "high" | "h" => Some(2),
        "low" | "l" => Some(3),
        "close" | "c" => Some(4),
        "volume" | "vol" | "v" | "tickvol" | "tick_volume" => Some(5),
        _ => None,
    }
}

/// Parses a bar table. Malformed rows are collected in [`ParsedBars::errors`]
/// and skipped; a header missing a required column is fatal.
pub fn parse_bars<R: Read>(input: R, options: &FormatOptions) -> Result<ParsedBars, IngestError> {
    let mut reader = std::io::BufReader::new(input);
    let mut header = String::new();
    if reader.read_line(&mut header)? == 0 {
        return Err(IngestError::MissingHeader);
    }
    let header = header.trim_start_matches('\u{feff}').trim_end_matches(['\r', '\n']);
    let delimiter = options.delimiter.byte_for(header);

    let mut positions = [usize::MAX; 6];
    for (i, name) in header.split(delimiter as char).enumerate() {
        if let Some(role) = column_role(name) {
            if positions[role] == usize::MAX {
                positions[role] = i;
            }
        }
    }
    if let Some(missing) = positions.iter().position(|&p| p == usize::MAX) {
        return Err(IngestError::MissingColumn(COLUMNS[missing]));
    }

    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut out = ParsedBars::default();
    let mut record = csv::StringRecord::new();
    loop {
        match csv.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line()) + 1;
                if record.len() == 1 && record[0].is_empty() {
                    continue;
                }
                match bar_from_record(&record, &positions, &options.timestamp_format) {
                    Ok(bar) => out.bars.push(bar),
                    Err(reason) => out.errors.push(RowError { line, reason }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line()) + 1;
                if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                    return Err(e.into());
                }
                out.errors.push(RowError { line, reason: e.to_string() });
            }
        }
    }
    Ok(out)
}

fn bar_from_record(
    record: &csv::StringRecord,
    positions: &[usize; 6],
    format: &TimestampFormat,
) -> Result<OhlcvBar, String> {
    let field = |role: usize| {
        record
            .get(positions[role])
            .ok_or_else(|| format!("missing `{}` field", COLUMNS[role]))
    };
    let number = |role: usize| -> Result<f64, String> {
        let raw = field(role)?;
        raw.parse::<f64>()
            .map_err(|_| format!("invalid `{}` value `{raw}`", COLUMNS[role]))
    };
    let bar = OhlcvBar {
        timestamp: format.parse(field(0)?)?,
        open: number(1)?,
        high: number(2)?,
        low: number(3)?,
        close: number(4)?,
        volume: number(5)?,
    };
    bar.validate().map_err(|v| v.to_string())?;
    Ok(bar)
}

/// Writes bars with a `timestamp,open,high,low,close,volume` header.
///
/// Prices and volumes use the shortest representation that parses back to
/// the same value, so parse → write → parse is lossless.
pub fn write_bars<W: Write>(mut out: W, bars: &[OhlcvBar], delimiter: u8) -> std::io::Result<()> {
    let d = delimiter as char;
    writeln!(out, "timestamp{d}open{d}high{d}low{d}close{d}volume")?;
    for b in bars {
        writeln!(
            out,
            "{}{d}{}{d}{}{d}{}{d}{}{d}{}",
            b.timestamp,
            format_f64(b.open),
            format_f64(b.high),
            format_f64(b.low),
            format_f64(b.close),
            format_f64(b.volume),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapPolicy {
    /// Every consecutive timestamp difference must equal tau.
    Strict,
    /// Differences may be any positive multiple of tau; derivations skip across gaps.
    #[default]
    Lenient,
}

/// Ordered bars of one instrument sampled every `tau` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    instrument: String,
    tau: i64,
    price_step: f64,
    bars: Vec<OhlcvBar>,
}

impl PriceSeries {
    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn tau(&self) -> i64 {
        self.tau
    }

    pub fn price_step(&self) -> f64 {
        self.price_step
    }

    pub fn bars(&self) -> &[OhlcvBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Timestamps of bars preceded by a gap longer than tau.
    pub fn gaps(&self) -> Vec<i64> {
        self.bars
            .windows(2)
            .filter(|w| w[1].timestamp - w[0].timestamp != self.tau)
            .map(|w| w[1].timestamp)
            .collect()
    }

    /// Arithmetic mean of the closing prices.
    pub fn mean_close(&self) -> f64 {
        crate::numeric::stable_sum(self.bars.iter().map(|b| b.close)) / self.bars.len() as f64
    }
}

/// Sorts and validates bars into a [`PriceSeries`].
pub fn build_series(
    mut bars: Vec<OhlcvBar>,
    instrument: &str,
    tau: i64,
    price_step: f64,
    gap_policy: GapPolicy,
) -> Result<PriceSeries, IngestError> {
    if bars.is_empty() {
        return Err(IngestError::Empty);
    }
    if tau <= 0 {
        return Err(IngestError::InvalidTau(tau));
    }
    if !(price_step.is_finite() && price_step > 0.0) {
        return Err(IngestError::InvalidPriceStep(price_step));
    }
    for bar in &bars {
        bar.validate().map_err(|reason| IngestError::InvalidBar {
            timestamp: bar.timestamp,
            reason,
        })?;
    }
    bars.sort_by_key(|b| b.timestamp);
    for w in bars.windows(2) {
        let gap = w[1].timestamp - w[0].timestamp;
        let at = w[1].timestamp;
        if gap == 0 {
            return Err(IngestError::DuplicateTimestamp(at));
        }
        if gap % tau != 0 {
            return Err(IngestError::GapNotMultiple { at, gap, tau });
        }
        if gap != tau && gap_policy == GapPolicy::Strict {
            return Err(IngestError::Gap { at });
        }
    }
    Ok(PriceSeries {
        instrument: instrument.to_owned(),
        tau,
        price_step,
        bars,
    })
}

/// Aggregates a series into windows of `new_tau` seconds.
///
/// Windows start at `phase + k * new_tau`, where `phase` is the first bar's
/// offset from an epoch multiple of `tau` (zero for epoch-aligned data).
/// Windows missing some of their bars are built from the bars present.
pub fn resample(series: &PriceSeries, new_tau: i64) -> Result<PriceSeries, IngestError> {
    let tau = series.tau;
    if new_tau <= 0 || new_tau % tau != 0 {
        return Err(IngestError::ResampleNotMultiple { tau, new_tau });
    }
    let phase = series.bars[0].timestamp.rem_euclid(tau);
    let window_of = |t: i64| (t - phase).div_euclid(new_tau);

    let mut out: Vec<OhlcvBar> = Vec::with_capacity(series.len() / (new_tau / tau) as usize + 1);
    let mut current: Option<(i64, OhlcvBar)> = None;
    for bar in &series.bars {
        let w = window_of(bar.timestamp);
        match current.as_mut() {
            Some((cw, agg)) if *cw == w => {
                agg.high = agg.high.max(bar.high);
                agg.low = agg.low.min(bar.low);
                agg.close = bar.close;
                agg.volume += bar.volume;
            }
            _ => {
                if let Some((_, agg)) = current.take() {
                    out.push(agg);
                }
                let agg = OhlcvBar {
                    timestamp: w * new_tau + phase,
                    ..*bar
                };
                current = Some((w, agg));
            }
        }
    }
    if let Some((_, agg)) = current {
        out.push(agg);
    }
    Ok(PriceSeries {
        instrument: series.instrument.clone(),
        tau: new_tau,
        price_step: series.price_step,
        bars: out,
    })
}
