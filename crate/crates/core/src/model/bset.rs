use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BSetKind {
    UniformSorted { seed: u64 },
    Linear { step: f64 },
}

/// An immutable, non-decreasing set of Boltzmann multipliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSet {
    kind: BSetKind,
    values: Vec<f64>,
    b_min: f64,
    b_max: f64,
}

impl BSet {
    pub fn kind(&self) -> BSetKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }
}

/// `count` multipliers `B_j = (b_max - b_min) * u_j + b_min` from sorted uniform
/// draws `u_j` in `[0, 1)`.
///
/// The draws come from ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`,
/// one 53-bit `f64` per multiplier, so a seed fixes the set bit for bit.
pub fn sample_bset_uniform(count: usize, b_min: f64, b_max: f64, seed: u64) -> Result<BSet, ModelError> {
    if count == 0 {
        return Err(invalid("a B-set needs at least one multiplier"));
    }
    if !(b_min.is_finite() && b_max.is_finite() && b_max > b_min) {
        return Err(invalid(format!("need finite b_max > b_min, got [{b_min}, {b_max})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gammas: Vec<f64> = (0..count).map(|_| rng.gen::<f64>()).collect();
    gammas.sort_by(f64::total_cmp);
    let width = b_max - b_min;
    // rounding can land exactly on b_max; keep the half-open interval
    let top = b_max.next_down();
    let values = gammas.into_iter().map(|g| (width * g + b_min).min(top)).collect();
    Ok(BSet {
        kind: BSetKind::UniformSorted { seed },
        values,
        b_min,
        b_max,
    })
}

/// Linear multipliers `B_j = j * step` for `j = 1..=count`.
pub fn make_bset_linear(count: usize, step: f64) -> Result<BSet, ModelError> {
    if count == 0 {
        return Err(invalid("a B-set needs at least one multiplier"));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(format!("linear step must be positive, got {step}")));
    }
    let values: Vec<f64> = (1..=count).map(|j| j as f64 * step).collect();
    Ok(BSet {
        kind: BSetKind::Linear { step },
        b_min: values[0],
        b_max: values[count - 1],
        values,
    })
}
