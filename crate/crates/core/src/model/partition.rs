use serde::{Deserialize, Serialize};

use super::{invalid, BSet, ModelError};
use crate::numeric::{ln_one_minus_exp_neg, one_minus_exp_neg_over, NeumaierSum};

fn check_x(x: f64) -> Result<(), ModelError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("X must be finite, got {x}")))
    }
}

/// Returns `(m, s)` with `Z = exp(m) * s`, where `m` is the largest exponent.
fn scaled_sum(bset: &BSet, x: f64) -> (f64, f64) {
    let m = bset
        .values()
        .iter()
        .map(|&b| -x * b)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = NeumaierSum::new();
    for &b in bset.values() {
        acc.add((-x * b - m).exp());
    }
    (m, acc.value())
}

/// `ln Z` for the finite partition sum; never overflows.
pub fn log_partition_sum(bset: &BSet, x: f64) -> Result<f64, ModelError> {
    check_x(x)?;
    let (m, s) = scaled_sum(bset, x);
    Ok(m + s.ln())
}

/// `Z = sum_j exp(-x * B_j)`, summed relative to the largest term.
pub fn partition_sum(bset: &BSet, x: f64) -> Result<f64, ModelError> {
    check_x(x)?;
    let (m, s) = scaled_sum(bset, x);
    let log_value = m + s.ln();
    if log_value > f64::MAX.ln() {
        return Err(ModelError::Overflow { log_value });
    }
    Ok(m.exp() * s)
}

/// Normalized Boltzmann weights `exp(-x * B_j) / Z`; they sum to one.
pub fn mb_weights(bset: &BSet, x: f64) -> Result<Vec<f64>, ModelError> {
    check_x(x)?;
    let (m, s) = scaled_sum(bset, x);
    Ok(bset.values().iter().map(|&b| (-x * b - m).exp() / s).collect())
}

fn uniform_closed(b_min: f64, b_max: f64, x: f64) -> f64 {
    let width = b_max - b_min;
    (-x * b_min).exp() * width * one_minus_exp_neg_over(x * width)
}

/// Continuum partition function over multipliers uniform on `[b_min, b_max]`:
/// `(exp(-x b_min) - exp(-x b_max)) / x`, which tends to `b_max - b_min` as
/// `x -> 0` and to `1/x` for large `x` when `b_min = 0`.
///
/// Evaluated as `exp(-x b_min) * w * (1 - exp(-x w)) / (x w)` with `w` the
/// interval width; the last factor switches to a four-term series when
/// `|x w| < 1e-4` to avoid cancellation.
pub fn z_uniform_closed(b_min: f64, b_max: f64, x: f64) -> Result<f64, ModelError> {
    if !(b_min.is_finite() && b_max.is_finite() && b_max > b_min) {
        return Err(invalid(format!("need finite b_max > b_min, got [{b_min}, {b_max}]")));
    }
    check_x(x)?;
    Ok(uniform_closed(b_min, b_max, x))
}

pub(crate) fn z_uniform_unchecked(b_min: f64, b_max: f64, x: f64) -> f64 {
    uniform_closed(b_min, b_max, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometricTerms {
    Finite(u64),
    Infinite,
}

/// Partition sum over linear multipliers `B_j = j * step`, in closed form.
///
/// With `r = exp(-x step)` the finite case is `r (1 - r^J) / (1 - r)` and the
/// infinite case `1 / (exp(x step) - 1)`; both are evaluated through `expm1`
/// so they stay accurate for tiny `x * step`.
pub fn z_geometric_closed(step: f64, x: f64, terms: GeometricTerms) -> Result<f64, ModelError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("step must be positive, got {step}")));
    }
    check_x(x)?;
    let xb = x * step;
    let value = match terms {
        GeometricTerms::Finite(0) => return Err(invalid("need at least one term")),
        GeometricTerms::Finite(count) if xb == 0.0 => count as f64,
        GeometricTerms::Finite(count) => (-xb).exp() * (-(count as f64) * xb).exp_m1() / (-xb).exp_m1(),
        GeometricTerms::Infinite if xb > 0.0 => 1.0 / xb.exp_m1(),
        GeometricTerms::Infinite => return Err(ModelError::SeriesDiverges(xb)),
    };
    if !value.is_finite() {
        return Err(ModelError::Overflow {
            log_value: f64::INFINITY,
        });
    }
    Ok(value)
}

/// Picks the infinite form when it is indistinguishable from the finite one
/// (`x * step > 0`, `count >= 1000` and `r^count < 1e-15`), the finite form otherwise.
pub fn z_geometric_auto(step: f64, x: f64, count: u64) -> Result<f64, ModelError> {
    let xb = x * step;
    let terms = if xb > 0.0 && count >= 1000 && (-(count as f64) * xb).exp() < 1e-15 {
        GeometricTerms::Infinite
    } else {
        GeometricTerms::Finite(count)
    };
    z_geometric_closed(step, x, terms)
}

/// Integral of the Bose-like form over `B` in `[b_min, b_max]`:
/// `(1/x) [ln(1 - exp(-x b_max)) - ln(1 - exp(-x b_min))]`.
///
/// The integrand diverges logarithmically at `B = 0`, so `b_min` must be positive.
pub fn z_integral_bose(b_min: f64, b_max: f64, x: f64) -> Result<f64, ModelError> {
    if !(b_min > 0.0 && b_min.is_finite()) {
        return Err(ModelError::OutsideIntegralDomain(format!("b_min must be positive, got {b_min}")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(ModelError::OutsideIntegralDomain(format!("X must be positive, got {x}")));
    }
    if !(b_max >= b_min && b_max.is_finite()) {
        return Err(invalid(format!("need finite b_max >= b_min, got [{b_min}, {b_max}]")));
    }
    Ok((ln_one_minus_exp_neg(x * b_max) - ln_one_minus_exp_neg(x * b_min)) / x)
}
