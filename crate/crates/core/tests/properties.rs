use proptest::collection::vec;
use proptest::prelude::*;
use returnlaw::collapse::{collapse_ratio, collapse_unity, flatness};
use returnlaw::derive::{derive, DerivativeKind};
use returnlaw::dist::{
    cumulative, histogram, merge, rank_order, to_density, CumulativeDirection, Density, Histogram,
};
use returnlaw::fit::{extract_bmax, fit_bmax_scaling, fit_loglog_slope};
use returnlaw::ingest::{build_series, parse_bars, resample, write_bars, FormatOptions, GapPolicy, OhlcvBar, PriceSeries};
use returnlaw::model::{
    make_bset_linear, mb_weights, model_density, model_density_tau, partition_sum, sample_bset_uniform,
    z_geometric_closed, z_uniform_closed, GeometricTerms, ModelParams, ScalingLaw,
};

const KINDS: [DerivativeKind; 6] = [
    DerivativeKind::PlainReturn,
    DerivativeKind::RelativeReturn,
    DerivativeKind::VolumeChange,
    DerivativeKind::RelativeVolumeChange,
    DerivativeKind::SimultaneousRatio,
    DerivativeKind::GeneralRatio { theta: -2, phi: 3 },
];

fn bar(timestamp: i64, open: f64, close: f64, spread: f64, volume: f64) -> OhlcvBar {
    OhlcvBar {
        timestamp,
        open,
        high: open.max(close) + spread,
        low: (open.min(close) - spread).max(0.0),
        close,
        volume,
    }
}

/// Gap-free bars every 60 s; closes and volumes include zeros.
fn bars(max: usize) -> impl Strategy<Value = Vec<OhlcvBar>> {
    let price = prop_oneof![1 => Just(0.0), 6 => 0.01f64..10.0, 2 => Just(1.5)];
    let volume = prop_oneof![1 => Just(0.0), 5 => (1u32..500).prop_map(f64::from)];
    vec((price.clone(), price, 0.0f64..0.5, volume), 2..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (o, c, s, v))| bar(60 * i as i64, o, c, s, v))
            .collect()
    })
}

fn series(bars: Vec<OhlcvBar>) -> PriceSeries {
    build_series(bars, "P", 60, 1e-5, GapPolicy::Strict).unwrap()
}

fn closes_series(closes: &[f64]) -> PriceSeries {
    series(closes.iter().enumerate().map(|(i, &c)| bar(60 * i as i64, c, c, 0.0, 1.0)).collect())
}

fn hist(values: &[f64]) -> Histogram {
    histogram(values, 0.25, -0.125).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_lossless(b in bars(60)) {
        let mut text = Vec::new();
        write_bars(&mut text, &b, b',').unwrap();
        let parsed = parse_bars(&text[..], &FormatOptions::default()).unwrap();
        prop_assert!(parsed.errors.is_empty());
        prop_assert_eq!(&parsed.bars, &b);
        let mut again = Vec::new();
        write_bars(&mut again, &parsed.bars, b',').unwrap();
        prop_assert_eq!(text, again);
    }

    #[test]
    fn resample_at_same_tau_is_identity(b in bars(60)) {
        let s = series(b);
        prop_assert_eq!(resample(&s, 60).unwrap(), s);
    }

    #[test]
    fn resample_conserves_volume(b in bars(200), factor in 1i64..20, drop in vec(any::<bool>(), 200)) {
        // knock out some bars to leave partial windows
        let kept: Vec<OhlcvBar> = b.iter().zip(&drop).enumerate()
            .filter(|(i, (_, d))| *i == 0 || !**d)
            .map(|(_, (bar, _))| *bar)
            .collect();
        let s = build_series(kept.clone(), "P", 60, 1e-5, GapPolicy::Lenient).unwrap();
        let r = resample(&s, 60 * factor).unwrap();
        let total: f64 = kept.iter().map(|b| b.volume).sum();
        prop_assert_eq!(r.bars().iter().map(|b| b.volume).sum::<f64>(), total);
        let windows: std::collections::BTreeSet<i64> = kept.iter().map(|b| b.timestamp.div_euclid(60 * factor)).collect();
        prop_assert_eq!(r.len(), windows.len());
    }

    #[test]
    fn every_pair_is_a_value_or_a_tally(b in bars(80)) {
        let n = b.len() as u64;
        let s = series(b);
        for kind in KINDS {
            let d = derive(&s, kind);
            prop_assert_eq!(d.points.len() as u64 + d.skipped.total(), n - 1, "{}", kind);
            prop_assert_eq!(d.skipped.gap, 0);
        }
    }

    #[test]
    fn plain_returns_flip_sign_under_price_mirror(ticks in vec(1u32..100_000, 2..80)) {
        // dyadic prices keep every difference exact
        let closes: Vec<f64> = ticks.iter().map(|&k| f64::from(k) / 1024.0).collect();
        let mirrored: Vec<f64> = closes.iter().map(|c| 256.0 - c).collect();
        let d = derive(&closes_series(&closes), DerivativeKind::PlainReturn);
        let m = derive(&closes_series(&mirrored), DerivativeKind::PlainReturn);
        let negated: Vec<f64> = d.points.iter().map(|p| -p.value).collect();
        prop_assert_eq!(negated, m.points.iter().map(|p| p.value).collect::<Vec<_>>());
    }

    #[test]
    fn plain_and_relative_returns_vanish_together(b in bars(80)) {
        let s = series(b);
        let d = derive(&s, DerivativeKind::PlainReturn);
        let r = derive(&s, DerivativeKind::RelativeReturn);
        let plain: std::collections::HashMap<i64, f64> = d.points.iter().map(|p| (p.timestamp, p.value)).collect();
        for p in &r.points {
            prop_assert_eq!(p.value == 0.0, plain[&p.timestamp] == 0.0);
        }
    }

    #[test]
    fn horizontal_trend_makes_returns_proportional(
        level in 0.5f64..2000.0,
        eps in 1e-4f64..1e-2,
        wiggle in vec(-1.0f64..1.0, 3..100),
    ) {
        let closes: Vec<f64> = wiggle.iter().map(|w| level * (1.0 + eps * w)).collect();
        let s = closes_series(&closes);
        let d = derive(&s, DerivativeKind::PlainReturn);
        let r = derive(&s, DerivativeKind::RelativeReturn);
        let max_r = r.points.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
        for (pd, pr) in d.points.iter().zip(&r.points) {
            prop_assert!((pr.value - pd.value / level).abs() <= 2.0 * eps * max_r);
        }
    }

    #[test]
    fn merge_is_commutative_associative_with_identity(
        a in vec(-5.0f64..5.0, 0..200),
        b in vec(-5.0f64..5.0, 0..200),
        c in vec(-5.0f64..5.0, 0..200),
    ) {
        let (ha, hb, hc) = (hist(&a), hist(&b), hist(&c));
        let empty = Histogram::new(ha.geometry());
        prop_assert_eq!(merge(&ha, &empty).unwrap(), ha.clone());
        prop_assert_eq!(merge(&ha, &hb).unwrap(), merge(&hb, &ha).unwrap());
        let left = merge(&merge(&ha, &hb).unwrap(), &hc).unwrap();
        prop_assert_eq!(&left, &merge(&ha, &merge(&hb, &hc).unwrap()).unwrap());
        prop_assert_eq!(left, hist(&[a, b, c].concat()));
    }

    #[test]
    fn rank_order_keeps_the_frequencies(v in vec(-3.0f64..3.0, 1..300)) {
        let h = hist(&v);
        let ranks = rank_order(&h).unwrap();
        let mut expected: Vec<u64> = h.counts().values().copied().collect();
        expected.sort_unstable_by(|a, b| b.cmp(a));
        let got: Vec<u64> = ranks.entries.iter().map(|e| e.frequency).collect();
        prop_assert_eq!(got, expected);
        prop_assert!(ranks.entries.iter().enumerate().all(|(i, e)| e.rank == i as u64 + 1));
    }

    #[test]
    fn sign_flip_mirrors_the_histogram(cells in vec((-40i64..40, -0.45f64..0.45), 1..300)) {
        // values kept away from bin edges
        let w = 0.25;
        let v: Vec<f64> = cells.iter().map(|&(k, f)| (k as f64 + f) * w).collect();
        let flipped: Vec<f64> = v.iter().map(|x| -x).collect();
        let (h, g) = (histogram(&v, w, -w / 2.0).unwrap(), histogram(&flipped, w, -w / 2.0).unwrap());
        let mirrored: Vec<(i64, u64)> = h.counts().iter().rev().map(|(&k, &c)| (-k, c)).collect();
        prop_assert_eq!(g.counts().iter().map(|(&k, &c)| (k, c)).collect::<Vec<_>>(), mirrored);
        let (dh, dg) = (to_density(&h).unwrap().mirrored(), to_density(&g).unwrap());
        for (p, q) in dh.points.iter().zip(&dg.points) {
            prop_assert!((p.y - q.y).abs() < 1e-12 && p.density == q.density);
        }
    }

    #[test]
    fn densities_integrate_to_one_and_cumulatives_complement(v in vec(-3.0f64..3.0, 1..300)) {
        let h = hist(&v);
        prop_assert!((to_density(&h).unwrap().mass() - 1.0).abs() < 1e-12);
        let above = cumulative(&h, CumulativeDirection::Above).unwrap();
        let below = cumulative(&h, CumulativeDirection::Below).unwrap();
        prop_assert_eq!(above[0].1, h.total());
        prop_assert!(above.windows(2).all(|w| w[0].1 >= w[1].1));
        for i in 1..above.len() {
            prop_assert_eq!(above[i].1 + below[i - 1].1, h.total());
        }
    }

    #[test]
    fn weights_sum_to_one(count in 1usize..3000, b_min in 0.0f64..5.0, width in 1e-3f64..10.0, x in -20.0f64..20.0, seed: u64) {
        let b = sample_bset_uniform(count, b_min, b_min + width, seed).unwrap();
        let s: f64 = mb_weights(&b, x).unwrap().iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_sum_equals_geometric_form(j in 1usize..2000, step in 1e-3f64..5.0, log_xb in -8.0f64..1.0) {
        let x = 10f64.powf(log_xb) / step;
        let sum = partition_sum(&make_bset_linear(j, step).unwrap(), x).unwrap();
        let closed = z_geometric_closed(step, x, GeometricTerms::Finite(j as u64)).unwrap();
        prop_assert!(((sum - closed) / closed).abs() < 1e-12);
    }

    #[test]
    fn uniform_form_plateau_and_power_tail(small in 0.0f64..1e-3, b_max in 0.1f64..10.0, xb in 10.0f64..1e4) {
        let z = z_uniform_closed(0.0, 1.0, small).unwrap();
        prop_assert!((0.999..=1.0).contains(&z));
        let x = xb / b_max;
        let tail = x * z_uniform_closed(0.0, b_max, x).unwrap();
        prop_assert!((tail - 1.0).abs() <= (-xb).exp() + 1e-12);
    }

    #[test]
    fn bose_form_tracks_inverse_for_small_argument(log_x in -9.0f64..-2.0) {
        let x = 10f64.powf(log_x);
        let z = z_geometric_closed(1.0, x, GeometricTerms::Infinite).unwrap();
        prop_assert!((z * x - 1.0).abs() <= x);
    }

    #[test]
    fn even_model_is_symmetric_and_monotone(
        half_n in 1u32..4,
        centre in -256i32..256,
        offset in 0i32..2048,
        beta in 0.1f64..5.0,
        b_max in 0.1f64..5.0,
    ) {
        let n = 2.0 * f64::from(half_n);
        let y = f64::from(centre) / 64.0;
        let d = f64::from(offset) / 64.0;
        let p = ModelParams::new(n, y, beta, 0.0, b_max).unwrap();
        prop_assert_eq!(model_density(y + d, &p), model_density(y - d, &p));
        prop_assert!(model_density(y + d + 1.0 / 64.0, &p) <= model_density(y + d, &p));
        prop_assert!(model_density(y + d, &p) <= b_max);
    }

    #[test]
    fn slope_ignores_rescaling(slope in -5.0f64..5.0, log_k in -10.0f64..10.0, log_s in -5.0f64..5.0) {
        let pts: Vec<(f64, f64)> = (1..40).map(|i| {
            let x = 1.2f64.powi(i);
            (x, x.powf(slope) * (1.0 + 0.1 * ((i * 7 % 5) as f64)))
        }).collect();
        let base = fit_loglog_slope(&pts, (1.0, 1e4)).unwrap();
        let k = log_k.exp();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, f)| (x, k * f)).collect();
        let r = fit_loglog_slope(&scaled, (1.0, 1e4)).unwrap();
        prop_assert!((r.param("slope") - base.param("slope")).abs() < 1e-12);
        prop_assert!((r.param("intercept") - base.param("intercept") - log_k).abs() < 1e-10);
        let s = log_s.exp();
        let stretched: Vec<(f64, f64)> = pts.iter().map(|&(x, f)| (s * x, f)).collect();
        let r = fit_loglog_slope(&stretched, (s, s * 1e4)).unwrap();
        prop_assert!((r.param("slope") - base.param("slope")).abs() < 1e-12);
    }

    #[test]
    fn scaling_law_is_recovered(c in 0.01f64..100.0, alpha in 0.1f64..3.0) {
        let samples: Vec<(f64, f64)> = [1.0f64, 5.0, 10.0, 60.0, 100.0, 250.0].iter().map(|&t| (t, c / t.powf(alpha))).collect();
        let r = fit_bmax_scaling(&samples).unwrap();
        prop_assert!((r.param("C") / c - 1.0).abs() < 1e-9);
        prop_assert!((r.param("alpha") / alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mode_height_ignores_mirroring(values in vec(0.0f64..5.0, 1..100), start in -50i32..50) {
        let d = Density::from_points(0.1, values.iter().enumerate().map(|(i, &v)| ((start + i as i32) as f64 * 0.1, v)));
        prop_assert_eq!(extract_bmax(&d).unwrap(), extract_bmax(&d.mirrored()).unwrap());
    }

    #[test]
    fn ratio_collapse_is_linear_and_flatness_scale_free(
        values in vec(0.1f64..5.0, 10..100),
        power in -20i32..20,
        factor in 0.01f64..100.0,
    ) {
        let d = Density::from_points(0.1, values.iter().enumerate().map(|(i, &v)| (0.05 + i as f64 * 0.1, v)));
        let z = |y: f64| (-y).exp() + 0.5;
        let region = Some((0.0, 100.0));
        let base = collapse_ratio(&d, z, region).unwrap();
        // a power of two scales every quotient exactly
        let c = 2f64.powi(power);
        let scaled = collapse_ratio(&d.scaled(c), z, region).unwrap();
        for (p, q) in base.points.iter().zip(&scaled.points) {
            prop_assert_eq!(c * p.1, q.1);
        }
        prop_assert_eq!(base.flatness, scaled.flatness);
        let other: Vec<(f64, f64)> = base.points.iter().map(|&(y, v)| (y, factor * v)).collect();
        let f = flatness(&other, (0.0, 100.0)).unwrap();
        prop_assert!((f - base.flatness).abs() <= 1e-12 * base.flatness.max(1.0));
    }

    #[test]
    fn analytic_densities_collapse_onto_one_constant(tau_a in 1.0f64..1e5, tau_b in 1.0f64..1e5) {
        let mut levels = Vec::new();
        for tau in [tau_a, tau_b] {
            let p = ModelParams::with_scaling(4.0, 1.0, ScalingLaw { c: 8.99124, alpha: 1.4481, tau }).unwrap();
            let half = 8.0 * p.b_max.powf(-0.25);
            let w = half / 500.0;
            let d = Density::from_points(w, (-500..=500).map(|i| (i as f64 * w, model_density_tau(i as f64 * w, &p).unwrap())));
            let u = collapse_unity(&d, &p, None).unwrap();
            let r = collapse_ratio(&d, |y| model_density_tau(y, &p).unwrap(), None).unwrap();
            prop_assert!(u.flatness < 1e-9 && r.flatness < 1e-9);
            levels.push((u.level(), r.level()));
        }
        prop_assert!((levels[0].0 - levels[1].0).abs() < 1e-9);
        prop_assert!((levels[0].1 - levels[1].1).abs() < 1e-9);
    }
}
