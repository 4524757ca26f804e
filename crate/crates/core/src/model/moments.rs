use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::dist::Density;
use crate::numeric::NeumaierSum;

/// Location and spread of a density: the mean `y` and the standard deviation `1/beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std_dev: f64,
}

impl Moments {
    pub fn beta(&self) -> f64 {
        1.0 / self.std_dev
    }
}

/// Sums `f(i)` pairing terms from both ends of the grid, so contributions that
/// cancel on a symmetric grid cancel exactly.
fn folded_sum(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = NeumaierSum::new();
    for i in 0..n / 2 {
        acc.add(f(i) + f(n - 1 - i));
    }
    if n % 2 == 1 {
        acc.add(f(n / 2));
    }
    acc.value()
}

/// Mean and standard deviation of `(Y, Z(Y))` samples on an equally spaced grid.
///
/// Self-normalizing, so `Z` need not integrate to one.
pub fn grid_moments(points: &[(f64, f64)]) -> Result<Moments, ModelError> {
    if let Some(&(y, value)) = points.iter().find(|(y, z)| !(z.is_finite() && *z >= 0.0 && y.is_finite())) {
        return Err(ModelError::BadDensity { y, value });
    }
    let n = points.len();
    let mass = folded_sum(n, |i| points[i].1);
    if !(mass > 0.0) {
        return Err(ModelError::ZeroMass);
    }
    let mean = folded_sum(n, |i| points[i].0 * points[i].1) / mass;
    let var = folded_sum(n, |i| {
        let d = points[i].0 - mean;
        d * d * points[i].1
    }) / mass;
    Ok(Moments {
        mean,
        std_dev: var.sqrt(),
    })
}

pub fn density_moments(density: &Density) -> Result<Moments, ModelError> {
    let points: Vec<(f64, f64)> = density.points.iter().map(|p| (p.y, p.density)).collect();
    grid_moments(&points)
}
