//! Derivative series computed from consecutive bars of a [`PriceSeries`].
//!
//! Every value is a true one-period difference: pairs of bars further apart
//! than `tau` are skipped and tallied, as are pairs whose denominator is zero.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{OhlcvBar, PriceSeries};
use crate::numeric::format_f64;

#[derive(Debug, Error)]
pub enum DeriveError {
    #[error("general ratio exponents must be nonzero (theta={theta}, phi={phi})")]
    ZeroExponent { theta: i32, phi: i32 },
    #[error("unknown derivative kind `{0}`")]
    UnknownKind(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum DerivativeKind {
    /// D: close(t) - close(t - tau).
    PlainReturn,
    /// R: D / close(t - tau).
    RelativeReturn,
    /// W: volume(t) - volume(t - tau).
    VolumeChange,
    /// omega: W / volume(t - tau).
    RelativeVolumeChange,
    /// S: R / omega at the same timestamp.
    SimultaneousRatio,
    /// R^theta / omega^phi.
    GeneralRatio { theta: i32, phi: i32 },
}

impl DerivativeKind {
    pub fn general(theta: i32, phi: i32) -> Result<Self, DeriveError> {
        if theta == 0 || phi == 0 {
            return Err(DeriveError::ZeroExponent { theta, phi });
        }
        Ok(Self::GeneralRatio { theta, phi })
    }

    /// Short label used on the command line and in file metadata.
    pub fn label(&self) -> &'static str {
        match self {
            Self::PlainReturn => "D",
            Self::RelativeReturn => "R",
            Self::VolumeChange => "W",
            Self::RelativeVolumeChange => "omega",
            Self::SimultaneousRatio => "S",
            Self::GeneralRatio { .. } => "general",
        }
    }
}

impl fmt::Display for DerivativeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GeneralRatio { theta, phi } => write!(f, "R^{theta}/omega^{phi}"),
            other => f.write_str(other.label()),
        }
    }
}

/// Parses the simple kinds; `general` needs exponents, see [`DerivativeKind::general`].
impl FromStr for DerivativeKind {
    type Err = DeriveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "D" | "d" => Self::PlainReturn,
            "R" | "r" => Self::RelativeReturn,
            "W" | "w" => Self::VolumeChange,
            "omega" | "w_rel" => Self::RelativeVolumeChange,
            "S" | "s" => Self::SimultaneousRatio,
            other => return Err(DeriveError::UnknownKind(other.to_owned())),
        })
    }
}

/// Counts of bar pairs that produced no value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipTally {
    pub gap: u64,
    pub zero_denominator: u64,
    pub non_finite: u64,
}

impl SkipTally {
    pub fn total(&self) -> u64 {
        self.gap + self.zero_denominator + self.non_finite
    }

    pub fn absorb(&mut self, other: &SkipTally) {
        self.gap += other.gap;
        self.zero_denominator += other.zero_denominator;
        self.non_finite += other.non_finite;
    }
}

impl fmt::Display for SkipTally {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "skipped {} (gap {}, zero-denominator {}, non-finite {})",
            self.total(),
            self.gap,
            self.zero_denominator,
            self.non_finite
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativePoint {
    pub timestamp: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSeries {
    pub kind: DerivativeKind,
    pub tau: i64,
    pub points: Vec<DerivativePoint>,
    pub skipped: SkipTally,
}

impl DerivativeSeries {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.value)
    }
}

enum Step {
    Value(f64),
    ZeroDenominator,
}

fn relative(now: f64, before: f64) -> Option<f64> {
    (before != 0.0).then(|| (now - before) / before)
}

fn step(kind: DerivativeKind, prev: &OhlcvBar, cur: &OhlcvBar) -> Step {
    use DerivativeKind::*;
    let ratio_parts = || {
        let r = relative(cur.close, prev.close)?;
        let w = relative(cur.volume, prev.volume)?;
        (w != 0.0).then_some((r, w))
    };
    match kind {
        PlainReturn => Step::Value(cur.close - prev.close),
        VolumeChange => Step::Value(cur.volume - prev.volume),
        RelativeReturn => relative(cur.close, prev.close).map_or(Step::ZeroDenominator, Step::Value),
        RelativeVolumeChange => relative(cur.volume, prev.volume).map_or(Step::ZeroDenominator, Step::Value),
        SimultaneousRatio => match ratio_parts() {
            Some((r, w)) => Step::Value(r / w),
            None => Step::ZeroDenominator,
        },
        GeneralRatio { theta, phi } => match ratio_parts() {
            Some((r, _)) if r == 0.0 && theta < 0 => Step::ZeroDenominator,
            Some((r, w)) => Step::Value(r.powi(theta) / w.powi(phi)),
            None => Step::ZeroDenominator,
        },
    }
}

/// Computes any derivative kind over consecutive bar pairs.
pub fn derive(series: &PriceSeries, kind: DerivativeKind) -> DerivativeSeries {
    let tau = series.tau();
    let bars = series.bars();
    let mut points = Vec::with_capacity(bars.len().saturating_sub(1));
    let mut skipped = SkipTally::default();
    for pair in bars.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if cur.timestamp - prev.timestamp != tau {
            skipped.gap += 1;
            continue;
        }
        match step(kind, prev, cur) {
            Step::Value(v) if v.is_finite() => points.push(DerivativePoint {
                timestamp: cur.timestamp,
                value: v,
            }),
            Step::Value(_) => skipped.non_finite += 1,
            Step::ZeroDenominator => skipped.zero_denominator += 1,
        }
    }
    DerivativeSeries {
        kind,
        tau,
        points,
        skipped,
    }
}

pub fn plain_returns(series: &PriceSeries) -> DerivativeSeries {
    derive(series, DerivativeKind::PlainReturn)
}

pub fn relative_returns(series: &PriceSeries) -> DerivativeSeries {
    derive(series, DerivativeKind::RelativeReturn)
}

pub fn volume_changes(series: &PriceSeries) -> DerivativeSeries {
    derive(series, DerivativeKind::VolumeChange)
}

pub fn relative_volume_changes(series: &PriceSeries) -> DerivativeSeries {
    derive(series, DerivativeKind::RelativeVolumeChange)
}

pub fn simultaneous_ratios(series: &PriceSeries) -> DerivativeSeries {
    derive(series, DerivativeKind::SimultaneousRatio)
}

pub fn general_ratios(series: &PriceSeries, theta: i32, phi: i32) -> Result<DerivativeSeries, DeriveError> {
    Ok(derive(series, DerivativeKind::general(theta, phi)?))
}

/// Writes `timestamp,value` rows.
pub fn write_series<W: Write>(mut out: W, series: &DerivativeSeries, delimiter: u8) -> std::io::Result<()> {
    let d = delimiter as char;
    writeln!(out, "timestamp{d}value")?;
    for p in &series.points {
        writeln!(out, "{}{d}{}", p.timestamp, format_f64(p.value))?;
    }
    Ok(())
}

/// Reads the value column of a two-column derivative table (header required).
///
/// The value column is the one named `value`, or the last column otherwise.
pub fn read_values<R: BufRead>(input: R) -> Result<Vec<f64>, DeriveError> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Ok(Vec::new()),
    };
    let delimiter = if header.contains('\t') { '\t' } else { ',' };
    let names: Vec<&str> = header.split(delimiter).map(str::trim).collect();
    let column = names
        .iter()
        .position(|n| n.eq_ignore_ascii_case("value"))
        .unwrap_or(names.len() - 1);
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(delimiter).nth(column).map(str::trim).ok_or_else(|| DeriveError::Malformed {
            line: i + 2,
            reason: "missing value column".into(),
        })?;
        let v = field.parse::<f64>().map_err(|_| DeriveError::Malformed {
            line: i + 2,
            reason: format!("invalid value `{field}`"),
        })?;
        values.push(v);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_series, GapPolicy};

    fn series(closes: &[f64], volumes: &[f64]) -> PriceSeries {
        let bars = closes
            .iter()
            .zip(volumes)
            .enumerate()
            .map(|(i, (&c, &v))| OhlcvBar {
                timestamp: 60 * i as i64,
                open: c,
                high: c,
                low: c,
                close: c,
                volume: v,
            })
            .collect();
        build_series(bars, "T", 60, 1e-5, GapPolicy::Strict).unwrap()
    }

    fn vals(d: &DerivativeSeries) -> Vec<f64> {
        d.values().collect()
    }

    #[test]
    fn plain_returns_examples() {
        assert_eq!(vals(&plain_returns(&series(&[1.0, 2.0, 4.0], &[1.0; 3]))), vec![1.0, 2.0]);
        assert_eq!(vals(&plain_returns(&series(&[3.5; 3], &[1.0; 3]))), vec![0.0, 0.0]);
    }

    #[test]
    fn relative_returns_examples() {
        let r = relative_returns(&series(&[100.0, 101.0], &[1.0, 1.0]));
        assert_eq!(vals(&r), vec![0.01]);
        assert_eq!(vals(&relative_returns(&series(&[2.0, 2.0], &[1.0, 1.0]))), vec![0.0]);
        let r = relative_returns(&series(&[0.0, 5.0], &[1.0, 1.0]));
        assert!(r.points.is_empty());
        assert_eq!(r.skipped.zero_denominator, 1);
    }

    #[test]
    fn volume_examples() {
        assert_eq!(vals(&volume_changes(&series(&[1.0; 3], &[10.0, 4.0, 9.0]))), vec![-6.0, 5.0]);
        assert_eq!(vals(&volume_changes(&series(&[1.0; 3], &[7.0; 3]))), vec![0.0, 0.0]);
        assert_eq!(vals(&relative_volume_changes(&series(&[1.0; 2], &[10.0, 15.0]))), vec![0.5]);
        assert_eq!(vals(&relative_volume_changes(&series(&[1.0; 2], &[8.0, 8.0]))), vec![0.0]);
        let w = relative_volume_changes(&series(&[1.0; 2], &[0.0, 7.0]));
        assert!(w.points.is_empty());
        assert_eq!(w.skipped.zero_denominator, 1);
    }

    #[test]
    fn simultaneous_ratio_examples() {
        let s = simultaneous_ratios(&series(&[100.0, 101.0], &[10.0, 15.0]));
        assert_eq!(s.points.len(), 1);
        assert!((s.points[0].value - 0.02).abs() < 1e-15);
        let s = simultaneous_ratios(&series(&[100.0, 101.0, 102.0], &[10.0, 10.0, 12.0]));
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].timestamp, 120);
        assert_eq!(s.skipped.zero_denominator, 1);
    }

    #[test]
    fn general_ratio_examples() {
        let s = series(&[100.0, 101.0, 99.0, 99.5], &[10.0, 15.0, 12.0, 20.0]);
        assert_eq!(general_ratios(&s, 1, 1).unwrap(), DerivativeSeries {
            kind: DerivativeKind::GeneralRatio { theta: 1, phi: 1 },
            ..simultaneous_ratios(&s)
        });
        let g = general_ratios(&series(&[100.0, 101.0], &[10.0, 15.0]), 2, 1).unwrap();
        assert!((g.points[0].value - 0.0002).abs() < 1e-17);
        assert!(general_ratios(&s, 0, 1).is_err());
        // R = 0 with a negative theta has no finite value
        let flat = general_ratios(&series(&[1.0, 1.0], &[10.0, 15.0]), -1, 1).unwrap();
        assert!(flat.points.is_empty());
        assert_eq!(flat.skipped.zero_denominator, 1);
    }

    #[test]
    fn gaps_are_skipped_and_tallied() {
        let bars = [0, 60, 180, 240]
            .iter()
            .map(|&t| OhlcvBar {
                timestamp: t,
                open: 1.0,
                high: 1.0 + t as f64,
                low: 1.0,
                close: 1.0 + t as f64,
                volume: 1.0,
            })
            .collect();
        let s = build_series(bars, "T", 60, 1e-5, GapPolicy::Lenient).unwrap();
        let d = plain_returns(&s);
        assert_eq!(d.points.iter().map(|p| p.timestamp).collect::<Vec<_>>(), vec![60, 240]);
        assert_eq!(d.skipped.gap, 1);
    }

    #[test]
    fn kind_labels_parse_back() {
        for kind in [
            DerivativeKind::PlainReturn,
            DerivativeKind::RelativeReturn,
            DerivativeKind::VolumeChange,
            DerivativeKind::RelativeVolumeChange,
            DerivativeKind::SimultaneousRatio,
        ] {
            assert_eq!(kind.label().parse::<DerivativeKind>().unwrap(), kind);
        }
    }

    #[test]
    fn series_file_round_trip() {
        let d = relative_returns(&series(&[1.0, 1.1, 1.3, 0.9], &[1.0; 4]));
        let mut buf = Vec::new();
        write_series(&mut buf, &d, b',').unwrap();
        let back = read_values(buf.as_slice()).unwrap();
        assert_eq!(back, vals(&d));
    }
}
