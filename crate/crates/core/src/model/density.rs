use serde::{Deserialize, Serialize};

use super::partition::z_uniform_unchecked;
use super::{invalid, ModelError};
use crate::numeric::one_minus_exp_neg_over;

/// `b_max = c / tau^alpha`, with `tau` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
    pub tau: f64,
}

impl ScalingLaw {
    pub fn b_max(&self) -> f64 {
        self.c / self.tau.powf(self.alpha)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("C", self.c), ("alpha", self.alpha), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Parameters of the model density.
///
/// `beta` is kept explicit (it is the inverse of the spread); folding it into
/// the multiplier bounds instead gives the same curve up to a factor `beta^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: f64,
    #[serde(default)]
    pub y: f64,
    pub beta: f64,
    #[serde(default)]
    pub b_min: f64,
    pub b_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingLaw>,
}

impl ModelParams {
    pub fn new(n: f64, y: f64, beta: f64, b_min: f64, b_max: f64) -> Result<Self, ModelError> {
        let p = Self {
            n,
            y,
            beta,
            b_min,
            b_max,
            scaling: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Centred parameters with `b_min = 0` and `b_max` given by the scaling law.
    pub fn with_scaling(n: f64, beta: f64, law: ScalingLaw) -> Result<Self, ModelError> {
        law.validate()?;
        let p = Self {
            n,
            y: 0.0,
            beta,
            b_min: 0.0,
            b_max: law.b_max(),
            scaling: Some(law),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(invalid(format!("n must be positive, got {}", self.n)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.y.is_finite() {
            return Err(invalid("y must be finite"));
        }
        if !(self.b_min.is_finite() && self.b_max.is_finite() && self.b_min >= 0.0 && self.b_max > self.b_min) {
            return Err(invalid(format!(
                "need 0 <= b_min < b_max, got [{}, {}]",
                self.b_min, self.b_max
            )));
        }
        if let Some(law) = &self.scaling {
            law.validate()?;
        }
        Ok(())
    }

    /// `X = (beta |Y - y|)^n`.
    #[inline]
    pub fn x_of(&self, y: f64) -> f64 {
        (self.beta * (y - self.y).abs()).powf(self.n)
    }

    /// `beta^n`, the factor between the two density parameterizations.
    pub fn beta_pow_n(&self) -> f64 {
        self.beta.powf(self.n)
    }
}

/// Model density `Z(X)` of the uniform-multiplier continuum at
/// `X = (beta |Y - y|)^n`:
/// `[exp(-b_min X) - exp(-b_max X)] / X`, equal to `b_max - b_min` at `Y = y`.
///
/// Using `|Y - y|` keeps the density real for any positive `n`; for even
/// integer `n` it is the plain power.
pub fn model_density(y: f64, p: &ModelParams) -> f64 {
    z_uniform_unchecked(p.b_min, p.b_max, p.x_of(y))
}

/// Scaling-law form `(1 - exp(-beta^n |Y|^n C / tau^alpha)) / |Y|^n`, whose
/// value at `Y = 0` is `beta^n C / tau^alpha`.
///
/// Needs centred parameters (`y = 0`, `b_min = 0`) carrying a scaling law; it
/// equals `beta^n * model_density` with `b_max = C / tau^alpha`.
pub fn model_density_tau(y: f64, p: &ModelParams) -> Result<f64, ModelError> {
    let law = p
        .scaling
        .ok_or_else(|| invalid("scaling-law density needs C, alpha and tau"))?;
    if p.y != 0.0 || p.b_min != 0.0 {
        return Err(invalid("scaling-law density needs y = 0 and b_min = 0"));
    }
    let b = law.b_max();
    Ok(p.beta_pow_n() * b * one_minus_exp_neg_over((p.beta * y.abs()).powf(p.n) * b))
}

/// Bose-like density `1 / (exp(B beta (Y - y)) - 1)`, defined for `Y > y`.
pub fn bose_density(y_value: f64, step: f64, beta: f64, y: f64) -> Result<f64, ModelError> {
    if !(step > 0.0 && beta > 0.0) {
        return Err(invalid(format!("B and beta must be positive, got B={step}, beta={beta}")));
    }
    if !(y_value > y) {
        return Err(ModelError::OutsideDomain(format!("need Y > y, got Y={y_value}, y={y}")));
    }
    Ok(1.0 / (step * beta * (y_value - y)).exp_m1())
}
