//! Financial derivative series, their empirical distributions, and a
//! random-multiplier Maxwell–Boltzmann model for those distributions.
//!
//! The modules follow the analysis pipeline:
//!
//! * [`ingest`]: OHLCV bar files to validated [`ingest::PriceSeries`].
//! * [`derive`]: plain and relative returns, volume changes and their ratios.
//! * [`dist`]: mergeable fixed-width histograms, densities, rank and
//!   cumulative distributions.
//! * [`model`]: partition sums over multiplier sets, their closed forms, the
//!   model densities and an inverse-CDF sampler.
//! * [`fit`]: log-log least squares, mode-height extraction and the
//!   `b_max = C / tau^alpha` scaling fit.
//! * [`collapse`]: the two collapse transformations and a flatness score.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collapse;
pub mod derive;
pub mod dist;
pub mod fit;
pub mod ingest;
pub mod model;
pub mod numeric;
