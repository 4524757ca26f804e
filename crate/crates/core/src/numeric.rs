//! Small numerical helpers shared by the other modules.

/// Compensated (Neumaier) summation accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator of values.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}

/// Below this magnitude of `t`, [`one_minus_exp_neg_over`] switches to its series.
pub const SERIES_CROSSOVER: f64 = 1e-4;

/// `(1 - exp(-t)) / t`, with the removable singularity at `t = 0` filled in.
///
/// Uses a four-term alternating series for `|t| < 1e-4` and the `expm1` form
/// above, which are continuous to within a few ulps at the crossover.
#[inline]
pub fn one_minus_exp_neg_over(t: f64) -> f64 {
    if t.abs() < SERIES_CROSSOVER {
        1.0 - t / 2.0 + t * t / 6.0 - t * t * t / 24.0
    } else {
        -(-t).exp_m1() / t
    }
}

/// `ln(1 - exp(-a))` for `a > 0`, accurate for both small and large `a`.
#[inline]
pub fn ln_one_minus_exp_neg(a: f64) -> f64 {
    if a < std::f64::consts::LN_2 {
        (-(-a).exp_m1()).ln()
    } else {
        (-(-a).exp()).ln_1p()
    }
}

/// Linear-interpolation quantile (Hyndman–Fan type 7) of already sorted data.
///
/// `q` is clamped to `[0, 1]`. Panics on empty input.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Shortest decimal representation of `v` that parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        let mut buf = ryu::Buffer::new();
        buf.format_finite(v).to_owned()
    } else if v.is_nan() {
        "NaN".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}
