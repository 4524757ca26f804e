//! Random-multiplier Maxwell–Boltzmann ensemble.
//!
//! A set of multipliers `B_j` (random sorted-uniform, or linear `j * B`)
//! defines the partition sum `Z(X) = sum_j exp(-X B_j)`. Its continuum
//! limit over uniform multipliers, its geometric (Bose-like) closed form and
//! the integral of the latter are available in closed form, and substituting
//! `X = (beta |Y - y|)^n` turns them into densities over a value `Y`.

mod bset;
mod density;
mod moments;
mod partition;
mod sampler;

pub use bset::{make_bset_linear, sample_bset_uniform, BSet, BSetKind};
pub use density::{bose_density, model_density, model_density_tau, ModelParams, ScalingLaw};
pub use moments::{density_moments, grid_moments, Moments};
pub use partition::{
    log_partition_sum, mb_weights, partition_sum, z_geometric_auto, z_geometric_closed, z_integral_bose,
    z_uniform_closed, GeometricTerms,
};
pub use sampler::{sample_from_density, GridSpacing, TabulatedSampler, DEFAULT_GRID_CELLS, MIN_GRID_CELLS};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("partition sum overflows f64 (ln Z = {log_value})")]
    Overflow { log_value: f64 },
    #[error("series diverges: X*B = {0} must be positive for infinitely many terms")]
    SeriesDiverges(f64),
    #[error("outside integral domain: {0}")]
    OutsideIntegralDomain(String),
    #[error("outside domain: {0}")]
    OutsideDomain(String),
    #[error("density is not finite and non-negative at Y = {y} ({value})")]
    BadDensity { y: f64, value: f64 },
    #[error("density has zero total mass")]
    ZeroMass,
}

pub(crate) fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter(msg.into())
}
