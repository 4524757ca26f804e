//! Data collapse of empirical densities onto a constant.
//!
//! Two transformations are available. `Unity` maps a density `Psi` to
//! `Psi' = Psi * (beta Y)^n + exp(-(beta Y)^n * C / tau^alpha)`, which is
//! exactly one when `Psi` is the model shape with `b_max = C / tau^alpha`.
//! `Ratio` divides `Psi` by any model density. How close the result is to a
//! constant is scored by [`flatness`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::Density;
use crate::model::{model_density, ModelError, ModelParams};
use crate::numeric::quantile_sorted;

/// Model values below this are treated as zero by the ratio method.
pub const MIN_MODEL_VALUE: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum CollapseError {
    #[error("need at least 2 finite points in region [{lo}, {hi}], got {got}")]
    TooFewPoints { lo: f64, hi: f64, got: usize },
    #[error("median of collapsed values is zero")]
    ZeroMedian,
    #[error("density has no mass")]
    EmptyDensity,
    #[error("unity collapse needs y = 0, b_min = 0 and a scaling law (C, alpha, tau)")]
    NotCentred,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseMethod {
    Unity,
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub method: CollapseMethod,
    /// `(Y, collapsed value)` in ascending `Y`.
    pub points: Vec<(f64, f64)>,
    pub flatness: f64,
    pub region: [f64; 2],
    /// Factor applied to the density before collapsing (1 for the ratio method).
    pub rescale: f64,
    /// Bins left out: the zero bin for `Unity`, bins where the model vanishes for `Ratio`.
    pub excluded: usize,
}

impl CollapseResult {
    /// Median collapsed value over the flatness region.
    pub fn level(&self) -> f64 {
        let mut v = region_values(&self.points, (self.region[0], self.region[1]));
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            f64::NAN
        } else {
            quantile_sorted(&v, 0.5)
        }
    }
}

fn region_values(points: &[(f64, f64)], (lo, hi): (f64, f64)) -> Vec<f64> {
    points
        .iter()
        .filter(|(y, v)| *y >= lo && *y <= hi && v.is_finite())
        .map(|&(_, v)| v)
        .collect()
}

/// `(P90 - P10) / |median|` of the values whose `Y` lies in `region`;
/// zero for constant data.
pub fn flatness(points: &[(f64, f64)], region: (f64, f64)) -> Result<f64, CollapseError> {
    let mut v = region_values(points, region);
    if v.len() < 2 {
        return Err(CollapseError::TooFewPoints {
            lo: region.0,
            hi: region.1,
            got: v.len(),
        });
    }
    v.sort_by(f64::total_cmp);
    let median = quantile_sorted(&v, 0.5);
    if median == 0.0 {
        return Err(CollapseError::ZeroMedian);
    }
    Ok((quantile_sorted(&v, 0.9) - quantile_sorted(&v, 0.1)) / median.abs())
}

/// `[Y_lo, Y_hi]` spanning the central 80% of the density's mass.
pub fn default_region(density: &Density) -> Result<(f64, f64), CollapseError> {
    let total: f64 = density.points.iter().map(|p| p.density.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(CollapseError::EmptyDensity);
    }
    let mut running = 0.0;
    let mut lo = None;
    let mut hi = None;
    for p in &density.points {
        running += p.density.max(0.0);
        let frac = running / total;
        if lo.is_none() && frac >= 0.1 {
            lo = Some(p.y);
        }
        if hi.is_none() && frac >= 0.9 {
            hi = Some(p.y);
        }
    }
    let last = density.points[density.points.len() - 1].y;
    Ok((lo.unwrap_or(last), hi.unwrap_or(last)))
}

fn is_zero_bin(y: f64, bin_width: f64) -> bool {
    y.abs() < bin_width / 2.0
}

/// Unity collapse. The density is first rescaled so its peak region (points
/// at or above half the maximum) matches the model shape
/// `(1 - exp(-(beta Y)^n b)) / (beta Y)^n`, `b = C / tau^alpha`; the factor
/// is reported as [`CollapseResult::rescale`]. The bin containing zero is
/// left out. `region` defaults to [`default_region`].
pub fn collapse_unity(
    density: &Density,
    params: &ModelParams,
    region: Option<(f64, f64)>,
) -> Result<CollapseResult, CollapseError> {
    params.validate()?;
    let law = params.scaling.ok_or(CollapseError::NotCentred)?;
    if params.y != 0.0 || params.b_min != 0.0 {
        return Err(CollapseError::NotCentred);
    }
    let b = law.b_max();
    let shape = ModelParams {
        b_max: b,
        ..*params
    };
    let region = match region {
        Some(r) => r,
        None => default_region(density)?,
    };

    let peak = density.points.iter().map(|p| p.density).fold(0.0, f64::max);
    let rescale = if peak > 0.0 {
        let (mut model_sum, mut data_sum) = (0.0, 0.0);
        for p in density.points.iter().filter(|p| p.density >= 0.5 * peak) {
            model_sum += model_density(p.y, &shape);
            data_sum += p.density;
        }
        model_sum / data_sum
    } else {
        1.0
    };

    let mut excluded = 0;
    let mut points = Vec::with_capacity(density.points.len());
    for p in &density.points {
        if is_zero_bin(p.y, density.bin_width) {
            excluded += 1;
            continue;
        }
        let x = shape.x_of(p.y);
        points.push((p.y, rescale * p.density * x + (-x * b).exp()));
    }
    let flat = flatness(&points, region)?;
    Ok(CollapseResult {
        method: CollapseMethod::Unity,
        points,
        flatness: flat,
        region: [region.0, region.1],
        rescale,
        excluded,
    })
}

/// Ratio collapse `Psi(Y) / Z(Y)`. Bins where `Z` is below
/// [`MIN_MODEL_VALUE`] (or not finite) are excluded and counted. The bin
/// containing zero is kept in the output but not scored.
pub fn collapse_ratio<F>(density: &Density, model: F, region: Option<(f64, f64)>) -> Result<CollapseResult, CollapseError>
where
    F: Fn(f64) -> f64,
{
    let region = match region {
        Some(r) => r,
        None => default_region(density)?,
    };
    let mut excluded = 0;
    let mut points = Vec::with_capacity(density.points.len());
    for p in &density.points {
        let z = model(p.y);
        if !(z >= MIN_MODEL_VALUE && z.is_finite()) {
            excluded += 1;
            continue;
        }
        points.push((p.y, p.density / z));
    }
    let scored: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(y, _)| !is_zero_bin(*y, density.bin_width))
        .collect();
    let flat = flatness(&scored, region)?;
    Ok(CollapseResult {
        method: CollapseMethod::Ratio,
        points,
        flatness: flat,
        region: [region.0, region.1],
        rescale: 1.0,
        excluded,
    })
}
