//! Fixed-width histograms and the distributions built from them.
//!
//! Histograms are sparse (keyed by signed bin index) and mergeable: shards
//! can be binned independently and combined with [`merge`] in any order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("bin width must be positive and finite, got {0}")]
    InvalidBinWidth(f64),
    #[error("origin must be finite, got {0}")]
    InvalidOrigin(f64),
    #[error("value at index {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("value at index {index} ({value}) falls outside the addressable bin range")]
    OutOfRange { index: usize, value: f64 },
    #[error("histograms have different bin geometry ({a:?} vs {b:?})")]
    GeometryMismatch { a: BinGeometry, b: BinGeometry },
    #[error("histogram is empty")]
    Empty,
}

/// Bin `i` covers `[origin + i * bin_width, origin + (i + 1) * bin_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGeometry {
    pub bin_width: f64,
    pub origin: f64,
}

impl BinGeometry {
    pub fn new(bin_width: f64, origin: f64) -> Result<Self, DistError> {
        if !(bin_width.is_finite() && bin_width > 0.0) {
            return Err(DistError::InvalidBinWidth(bin_width));
        }
        if !origin.is_finite() {
            return Err(DistError::InvalidOrigin(origin));
        }
        Ok(Self { bin_width, origin })
    }

    /// Geometry whose bin 0 is centred on zero.
    pub fn zero_centered(bin_width: f64) -> Result<Self, DistError> {
        Self::new(bin_width, -bin_width / 2.0)
    }

    /// Bin index of a finite value, or `None` if it does not fit in an `i64`.
    #[inline]
    pub fn index_of(&self, value: f64) -> Option<i64> {
        let q = ((value - self.origin) / self.bin_width).floor();
        // i64::MAX as f64 rounds up to 2^63, which is itself out of range
        (q >= i64::MIN as f64 && q < i64::MAX as f64).then_some(q as i64)
    }

    pub fn left_edge(&self, index: i64) -> f64 {
        self.origin + index as f64 * self.bin_width
    }

    pub fn center(&self, index: i64) -> f64 {
        self.origin + (index as f64 + 0.5) * self.bin_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    geometry: BinGeometry,
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl Histogram {
    pub fn new(geometry: BinGeometry) -> Self {
        Self {
            geometry,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    /// Rebuilds a histogram from stored counts; zero counts are dropped.
    pub fn from_counts(geometry: BinGeometry, counts: impl IntoIterator<Item = (i64, u64)>) -> Self {
        let mut h = Self::new(geometry);
        for (i, c) in counts {
            if c > 0 {
                *h.counts.entry(i).or_insert(0) += c;
                h.total += c;
            }
        }
        h
    }

    pub fn geometry(&self) -> BinGeometry {
        self.geometry
    }

    pub fn bin_width(&self) -> f64 {
        self.geometry.bin_width
    }

    pub fn origin(&self) -> f64 {
        self.geometry.origin
    }

    /// Populated bins in ascending index order.
    pub fn counts(&self) -> &BTreeMap<i64, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Adds one value; `index` is only used to label errors.
    #[inline]
    fn add_at(&mut self, index: usize, value: f64) -> Result<(), DistError> {
        if !value.is_finite() {
            return Err(DistError::NonFinite { index, value });
        }
        let bin = self
            .geometry
            .index_of(value)
            .ok_or(DistError::OutOfRange { index, value })?;
        *self.counts.entry(bin).or_insert(0) += 1;
        self.total += 1;
        Ok(())
    }

    pub fn add(&mut self, value: f64) -> Result<(), DistError> {
        self.add_at(self.total as usize, value)
    }

    /// Adds every value; on error the histogram keeps the values before the bad one.
    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, values: I) -> Result<(), DistError> {
        for (i, v) in values.into_iter().enumerate() {
            self.add_at(i, v)?;
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &Histogram) -> Result<(), DistError> {
        if self.geometry != other.geometry {
            return Err(DistError::GeometryMismatch {
                a: self.geometry,
                b: other.geometry,
            });
        }
        for (&i, &c) in &other.counts {
            *self.counts.entry(i).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }
}

pub fn histogram(values: &[f64], bin_width: f64, origin: f64) -> Result<Histogram, DistError> {
    let mut h = Histogram::new(BinGeometry::new(bin_width, origin)?);
    h.extend(values.iter().copied())?;
    Ok(h)
}

/// Histogram of `|v|` with bins starting at zero.
pub fn magnitude_histogram(values: &[f64], bin_width: f64) -> Result<Histogram, DistError> {
    let mut h = Histogram::new(BinGeometry::new(bin_width, 0.0)?);
    h.extend(values.iter().map(|v| v.abs()))?;
    Ok(h)
}

pub fn merge(a: &Histogram, b: &Histogram) -> Result<Histogram, DistError> {
    let mut out = a.clone();
    out.merge_from(b)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub y: f64,
    pub density: f64,
}

/// Density values at equally spaced bin centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub bin_width: f64,
    pub points: Vec<DensityPoint>,
}

impl Density {
    /// Wraps values on an equally spaced grid, e.g. an analytic curve.
    pub fn from_points(bin_width: f64, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            bin_width,
            points: points.into_iter().map(|(y, density)| DensityPoint { y, density }).collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        crate::numeric::stable_sum(self.points.iter().map(|p| p.density)) * self.bin_width
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bin_width: self.bin_width,
            points: self
                .points
                .iter()
                .map(|p| DensityPoint {
                    y: p.y,
                    density: p.density * factor,
                })
                .collect(),
        }
    }

    /// The same density with every `y` negated, in ascending order.
    pub fn mirrored(&self) -> Self {
        Self {
            bin_width: self.bin_width,
            points: self
                .points
                .iter()
                .rev()
                .map(|p| DensityPoint { y: -p.y, density: p.density })
                .collect(),
        }
    }
}

/// Normalized density: count / (total * bin_width) at each bin centre, with
/// empty bins between the outermost populated ones reported as zero.
pub fn to_density(h: &Histogram) -> Result<Density, DistError> {
    let (&first, &last) = match (h.counts.keys().next(), h.counts.keys().next_back()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(DistError::Empty),
    };
    let scale = h.total as f64 * h.bin_width();
    let points = (first..=last)
        .map(|i| DensityPoint {
            y: h.geometry.center(i),
            density: h.counts.get(&i).copied().unwrap_or(0) as f64 / scale,
        })
        .collect();
    Ok(Density {
        bin_width: h.bin_width(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: u64,
    pub frequency: u64,
    /// Centre of the bin the frequency was counted in.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub entries: Vec<RankEntry>,
}

/// Bin frequencies in decreasing order; equal frequencies keep ascending bin order.
pub fn rank_order(h: &Histogram) -> Result<RankDistribution, DistError> {
    if h.is_empty() {
        return Err(DistError::Empty);
    }
    let mut bins: Vec<(i64, u64)> = h.counts.iter().map(|(&i, &c)| (i, c)).collect();
    bins.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let entries = bins
        .into_iter()
        .enumerate()
        .map(|(k, (i, c))| RankEntry {
            rank: k as u64 + 1,
            frequency: c,
            value: h.geometry.center(i),
        })
        .collect();
    Ok(RankDistribution { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CumulativeDirection {
    Above,
    Below,
}

/// Cumulative counts at the edges of populated bins.
///
/// `Above` pairs each bin's left edge with the number of values at or above
/// it. Read from the top, that count is the rank of the bin's values in
/// decreasing order, so its log-log slope is the rank/size exponent.
/// `Below` pairs each bin's right edge with the number of values below it.
pub fn cumulative(h: &Histogram, direction: CumulativeDirection) -> Result<Vec<(f64, u64)>, DistError> {
    if h.is_empty() {
        return Err(DistError::Empty);
    }
    let g = h.geometry;
    let out = match direction {
        CumulativeDirection::Above => {
            let mut remaining = h.total;
            h.counts
                .iter()
                .map(|(&i, &c)| {
                    let here = (g.left_edge(i), remaining);
                    remaining -= c;
                    here
                })
                .collect()
        }
        CumulativeDirection::Below => {
            let mut seen = 0;
            h.counts
                .iter()
                .map(|(&i, &c)| {
                    seen += c;
                    (g.left_edge(i + 1), seen)
                })
                .collect()
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_binning() {
        let h = histogram(&[0.0, 0.00004, 0.00012], 0.0001, -0.00005).unwrap();
        assert_eq!(h.counts().iter().map(|(&i, &c)| (i, c)).collect::<Vec<_>>(), vec![(0, 2), (1, 1)]);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn empty_values() {
        let h = histogram(&[], 1.0, 0.0).unwrap();
        assert_eq!(h.total(), 0);
        assert!(h.counts().is_empty());
        assert_eq!(to_density(&h), Err(DistError::Empty));
        assert_eq!(rank_order(&h), Err(DistError::Empty));
    }

    #[test]
    fn non_finite_value_names_index() {
        let err = histogram(&[1.0, f64::NAN], 1.0, 0.0).unwrap_err();
        assert!(matches!(err, DistError::NonFinite { index: 1, .. }));
        assert!(matches!(histogram(&[1e300], 1e-300, 0.0), Err(DistError::OutOfRange { index: 0, .. })));
        assert!(histogram(&[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let a = histogram(&[0.1, 0.2, 3.0], 0.5, 0.0).unwrap();
        let empty = Histogram::new(a.geometry());
        assert_eq!(merge(&a, &empty).unwrap(), a);
        let other = histogram(&[0.1], 0.25, 0.0).unwrap();
        assert!(matches!(merge(&a, &other), Err(DistError::GeometryMismatch { .. })));
    }

    #[test]
    fn density_examples() {
        let h = Histogram::from_counts(BinGeometry::new(0.5, 0.0).unwrap(), [(3, 7)]);
        let d = to_density(&h).unwrap();
        assert_eq!(d.points, vec![DensityPoint { y: 1.75, density: 2.0 }]);

        let h = Histogram::from_counts(BinGeometry::zero_centered(1.0).unwrap(), [(-2, 3), (0, 5), (2, 3)]);
        let d = to_density(&h).unwrap();
        let ds: Vec<f64> = d.points.iter().map(|p| p.density).collect();
        assert_eq!(ds, vec![3.0 / 11.0, 0.0, 5.0 / 11.0, 0.0, 3.0 / 11.0]);
        assert_eq!(d.points[0].y, -2.0);
        assert!((d.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_examples() {
        let h = magnitude_histogram(&[-1.0, 1.0], 0.5).unwrap();
        assert_eq!(h.counts().iter().map(|(&i, &c)| (i, c)).collect::<Vec<_>>(), vec![(2, 2)]);
    }

    #[test]
    fn rank_examples() {
        let g = BinGeometry::new(1.0, 0.0).unwrap();
        let r = rank_order(&Histogram::from_counts(g, [(0, 5), (1, 9), (2, 5)])).unwrap();
        let pairs: Vec<_> = r.entries.iter().map(|e| (e.rank, e.frequency, e.value)).collect();
        assert_eq!(pairs, vec![(1, 9, 1.5), (2, 5, 0.5), (3, 5, 2.5)]);
        let r = rank_order(&Histogram::from_counts(g, [(4, 11)])).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!((r.entries[0].rank, r.entries[0].frequency), (1, 11));
    }

    #[test]
    fn cumulative_examples() {
        let g = BinGeometry::new(1.0, 0.0).unwrap();
        let h = Histogram::from_counts(g, [(0, 1), (1, 2)]);
        assert_eq!(cumulative(&h, CumulativeDirection::Above).unwrap(), vec![(0.0, 3), (1.0, 2)]);
        assert_eq!(cumulative(&h, CumulativeDirection::Below).unwrap(), vec![(1.0, 1), (2.0, 3)]);
    }
}
