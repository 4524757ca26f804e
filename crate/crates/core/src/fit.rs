//! Least-squares power-law fits on log-log data, and mode-height extraction.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Density;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("all regressor values are equal")]
    DegenerateX,
    #[error("fit range must satisfy 0 < lo < hi, got [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("non-positive or non-finite sample (tau={tau}, b_max={b_max})")]
    NonPositiveSample { tau: f64, b_max: f64 },
    #[error("duplicate tau {0}")]
    DuplicateTau(f64),
    #[error("density has no points")]
    EmptyDensity,
}

/// Outcome of a least-squares fit, keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    pub adj_r_squared: f64,
    pub n_points: usize,
    pub fit_range: [f64; 2],
    /// Points inside the range dropped for a zero or non-positive response.
    pub dropped: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn std_error(&self, name: &str) -> f64 {
        self.std_errors[name]
    }
}

/// Flat `value / se / ars` summary, one parameter per column.
impl fmt::Display for FitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&String> = self.params.keys().collect();
        writeln!(f, "ars\t{}", self.adj_r_squared)?;
        write!(f, "property")?;
        for n in &names {
            write!(f, "\t{n}")?;
        }
        write!(f, "\nvalue")?;
        for n in &names {
            write!(f, "\t{}", self.params[*n])?;
        }
        write!(f, "\nse")?;
        for n in &names {
            write!(f, "\t{}", self.std_errors[*n])?;
        }
        writeln!(f)
    }
}

/// Ordinary least squares for `v = intercept + slope * u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub se_slope: f64,
    pub se_intercept: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub n: usize,
}

pub fn ols(u: &[f64], v: &[f64]) -> Result<LineFit, FitError> {
    assert_eq!(u.len(), v.len());
    let n = u.len();
    if n < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean_u = u.iter().sum::<f64>() / nf;
    let mean_v = v.iter().sum::<f64>() / nf;
    let mut suu = 0.0;
    let mut suv = 0.0;
    let mut svv = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        let (du, dv) = (a - mean_u, b - mean_v);
        suu += du * du;
        suv += du * dv;
        svv += dv * dv;
    }
    if suu == 0.0 {
        return Err(FitError::DegenerateX);
    }
    let slope = suv / suu;
    let intercept = mean_v - slope * mean_u;
    let sse: f64 = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let (se_slope, se_intercept, adj_r_squared);
    let r_squared = if svv == 0.0 { 1.0 } else { (1.0 - sse / svv).min(1.0) };
    if n > 2 {
        let s2 = sse / (nf - 2.0);
        se_slope = (s2 / suu).sqrt();
        se_intercept = (s2 * (1.0 / nf + mean_u * mean_u / suu)).sqrt();
        adj_r_squared = 1.0 - (1.0 - r_squared) * (nf - 1.0) / (nf - 2.0);
    } else {
        se_slope = 0.0;
        se_intercept = 0.0;
        adj_r_squared = 1.0;
    }
    Ok(LineFit {
        slope,
        intercept,
        se_slope,
        se_intercept,
        r_squared,
        adj_r_squared,
        n,
    })
}

/// Power exponent of `f ∝ x^slope` from OLS on `(ln x, ln f)` over `x` in `[lo, hi]`.
///
/// Points with `f <= 0` inside the range are dropped and counted in
/// [`FitResult::dropped`]. The range is always explicit.
pub fn fit_loglog_slope(points: &[(f64, f64)], range: (f64, f64)) -> Result<FitResult, FitError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(FitError::InvalidRange { lo, hi });
    }
    let mut dropped = 0;
    let mut u = Vec::new();
    let mut v = Vec::new();
    for &(x, f) in points {
        if !(x >= lo && x <= hi) {
            continue;
        }
        if f > 0.0 && f.is_finite() {
            u.push(x.ln());
            v.push(f.ln());
        } else {
            dropped += 1;
        }
    }
    if u.len() < 3 {
        return Err(FitError::TooFewPoints { needed: 3, got: u.len() });
    }
    let line = ols(&u, &v)?;
    Ok(FitResult {
        params: [("slope".to_owned(), line.slope), ("intercept".to_owned(), line.intercept)].into(),
        std_errors: [("slope".to_owned(), line.se_slope), ("intercept".to_owned(), line.se_intercept)].into(),
        adj_r_squared: line.adj_r_squared,
        n_points: line.n,
        fit_range: [lo, hi],
        dropped,
        warnings: Vec::new(),
    })
}

/// Location and height of the highest density point. Ties go to the point
/// closest to zero, then to the smaller `y`.
pub fn density_mode(density: &Density) -> Result<(f64, f64), FitError> {
    let mut best: Option<(f64, f64)> = None;
    for p in &density.points {
        best = match best {
            None => Some((p.y, p.density)),
            Some((by, bd)) => {
                let better = p.density > bd
                    || (p.density == bd && (p.y.abs() < by.abs() || (p.y.abs() == by.abs() && p.y < by)));
                Some(if better { (p.y, p.density) } else { (by, bd) })
            }
        };
    }
    best.ok_or(FitError::EmptyDensity)
}

/// Height of the density at its mode, the estimator of `b_max` (the model
/// density equals `b_max - b_min` at its mode).
pub fn extract_bmax(density: &Density) -> Result<f64, FitError> {
    density_mode(density).map(|(_, h)| h)
}

/// Fits `b_max = C / tau^alpha` by OLS on `ln b_max = ln C - alpha ln tau`.
///
/// `tau` is in seconds. The standard error of `C` is propagated from that of
/// the intercept (`se_C = C * se_lnC`). Two samples give an exact
/// interpolation with `adj R² = 1`, zero standard errors and a warning.
pub fn fit_bmax_scaling(samples: &[(f64, f64)]) -> Result<FitResult, FitError> {
    for &(tau, b_max) in samples {
        if !(tau > 0.0 && b_max > 0.0 && tau.is_finite() && b_max.is_finite()) {
            return Err(FitError::NonPositiveSample { tau, b_max });
        }
    }
    let mut taus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    taus.sort_by(f64::total_cmp);
    if let Some(w) = taus.windows(2).find(|w| w[0] == w[1]) {
        return Err(FitError::DuplicateTau(w[0]));
    }
    if samples.len() < 2 {
        return Err(FitError::TooFewPoints {
            needed: 2,
            got: samples.len(),
        });
    }
    let u: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let v: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let line = ols(&u, &v)?;
    let c = line.intercept.exp();
    let mut warnings = Vec::new();
    if samples.len() == 2 {
        warnings.push("two samples: exact interpolation, adjusted R² undefined and reported as 1".to_owned());
    }
    Ok(FitResult {
        params: [("C".to_owned(), c), ("alpha".to_owned(), -line.slope)].into(),
        std_errors: [("C".to_owned(), c * line.se_intercept), ("alpha".to_owned(), line.se_slope)].into(),
        adj_r_squared: line.adj_r_squared,
        n_points: line.n,
        fit_range: [taus[0], taus[taus.len() - 1]],
        dropped: 0,
        warnings,
    })
}
