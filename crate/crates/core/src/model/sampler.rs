use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, ModelError};

/// Smallest grid the sampler accepts.
pub const MIN_GRID_CELLS: usize = 1 << 16;
/// Grid used by [`sample_from_density`].
pub const DEFAULT_GRID_CELLS: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridSpacing {
    #[default]
    Linear,
    /// Geometric spacing; needs a positive support.
    Log,
}

/// Inverse-CDF sampler over a density tabulated on a fixed grid.
///
/// Each cell carries the mass `f(midpoint) * width`, so the tabulated CDF is
/// piecewise linear and inverting it places draws uniformly inside the
/// chosen cell.
#[derive(Debug, Clone)]
pub struct TabulatedSampler {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TabulatedSampler {
    pub fn new<F>(density: F, lo: f64, hi: f64, cells: usize, spacing: GridSpacing) -> Result<Self, ModelError>
    where
        F: Fn(f64) -> f64,
    {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(format!("support must be a finite interval, got [{lo}, {hi}]")));
        }
        if cells < MIN_GRID_CELLS {
            return Err(invalid(format!("grid needs at least {MIN_GRID_CELLS} cells, got {cells}")));
        }
        let edges: Vec<f64> = match spacing {
            GridSpacing::Linear => (0..=cells)
                .map(|i| if i == cells { hi } else { lo + (hi - lo) * (i as f64 / cells as f64) })
                .collect(),
            GridSpacing::Log => {
                if lo <= 0.0 {
                    return Err(invalid("log-spaced grid needs a positive lower bound"));
                }
                let (a, b) = (lo.ln(), hi.ln());
                (0..=cells)
                    .map(|i| match i {
                        0 => lo,
                        i if i == cells => hi,
                        i => (a + (b - a) * (i as f64 / cells as f64)).exp(),
                    })
                    .collect()
            }
        };
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut running = 0.0;
        for w in edges.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let value = density(mid);
            if !(value.is_finite() && value >= 0.0) {
                return Err(ModelError::BadDensity { y: mid, value });
            }
            running += value * (w[1] - w[0]);
            cumulative.push(running);
        }
        if !(running > 0.0 && running.is_finite()) {
            return Err(ModelError::ZeroMass);
        }
        for c in &mut cumulative {
            *c /= running;
        }
        Ok(Self { edges, cumulative })
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Tabulated CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let cell = self.edges.partition_point(|&e| e <= x) - 1;
        let (a, b) = (self.edges[cell], self.edges[cell + 1]);
        let (ca, cb) = (self.cumulative[cell], self.cumulative[cell + 1]);
        ca + (cb - ca) * (x - a) / (b - a)
    }

    /// Inverse of the tabulated CDF for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let last_cell = self.cumulative.len() - 2;
        let j = self.cumulative.partition_point(|&c| c <= u);
        let cell = if j >= self.cumulative.len() {
            // u at or above the rounded total: last cell with mass
            (0..=last_cell)
                .rev()
                .find(|&i| self.cumulative[i + 1] > self.cumulative[i])
                .unwrap_or(last_cell)
        } else {
            j - 1
        };
        let (ca, cb) = (self.cumulative[cell], self.cumulative[cell + 1]);
        let frac = ((u - ca) / (cb - ca)).clamp(0.0, 1.0);
        let (a, b) = (self.edges[cell], self.edges[cell + 1]);
        (a + frac * (b - a)).min(b)
    }

    /// `count` draws from a ChaCha8 generator seeded with `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.quantile(rng.gen::<f64>())).collect()
    }
}

/// Draws `count` values from `density` restricted to `[lo, hi]`, using a
/// linear grid of [`DEFAULT_GRID_CELLS`] cells.
pub fn sample_from_density<F>(density: F, lo: f64, hi: f64, count: usize, seed: u64) -> Result<Vec<f64>, ModelError>
where
    F: Fn(f64) -> f64,
{
    Ok(TabulatedSampler::new(density, lo, hi, DEFAULT_GRID_CELLS, GridSpacing::Linear)?.sample(count, seed))
}
