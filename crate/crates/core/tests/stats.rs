use dehum::stats::{
    linear_trend, linear_trend_range, lowess, mean_ci, wilcoxon_signed_rank, wilcoxon_with_method, CiMethod,
    TestMethod,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{t_critical, trend_oracle, wilcoxon_enumerate};

// ---- wilcoxon ------------------------------------------------------------

#[test]
fn wilcoxon_shift_of_ten_is_smallest_attainable_p() {
    let y: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    let x: Vec<f64> = y.iter().map(|v| v + 1.0).collect();
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    let (stat, p) = wilcoxon_enumerate(&x, &y);
    assert_eq!(r.statistic, stat);
    assert_eq!(r.statistic, 0.0);
    assert!((r.p_value - p).abs() < 1e-15);
    assert!((r.p_value - 0.001953125).abs() < 1e-12);
}

#[test]
fn wilcoxon_alternating_differences() {
    let y = vec![0.0; 30];
    let x: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    assert_eq!(r.method, TestMethod::NormalApprox);
    assert!(r.p_value > 0.95, "p = {}", r.p_value);
    let (_, p_sub) = wilcoxon_enumerate(&x[..20], &y[..20]);
    let approx = wilcoxon_with_method(&x[..20], &y[..20], Some(TestMethod::NormalApprox)).unwrap();
    assert!(p_sub > 0.95 && approx.p_value > 0.95);
}

#[test]
fn wilcoxon_exact_and_approx_agree_for_20_to_25() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 20 + trial % 6;
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.1).collect();
        let e = wilcoxon_with_method(&x, &y, Some(TestMethod::Exact)).unwrap();
        let a = wilcoxon_with_method(&x, &y, Some(TestMethod::NormalApprox)).unwrap();
        worst = worst.max((e.p_value - a.p_value).abs());
    }
    assert!(worst <= 0.02, "worst disagreement {worst}");
}

proptest! {
    #[test]
    fn wilcoxon_matches_enumeration(
        pairs in prop::collection::vec((-5i32..5, -5i32..5), 5..14)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        prop_assume!(x.iter().zip(&y).any(|(a, b)| a != b));
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        let (stat, p) = wilcoxon_enumerate(&x, &y);
        prop_assert_eq!(r.statistic, stat);
        prop_assert!((r.p_value - p).abs() < 1e-12);
    }

    #[test]
    fn p_values_are_probabilities(
        x in prop::collection::vec(-1e3f64..1e3, 5..60),
        shift in -10.0f64..10.0,
    ) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * 0.9 + shift + i as f64 * 0.01).collect();
        if let Ok(r) = wilcoxon_signed_rank(&x, &y) {
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
        let years: Vec<i32> = (0..x.len() as i32).collect();
        let t = linear_trend(&years, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&t.p_value));
    }
}

// ---- trend ---------------------------------------------------------------

#[test]
fn trend_matches_normal_equations_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..20 {
        let years: Vec<i32> = (1986..2016).collect();
        let values: Vec<f64> = years
            .iter()
            .map(|&y| 0.001 * f64::from(y - 2000) + rng.random_range(-0.05..0.05))
            .collect();
        let t = linear_trend(&years, &values).unwrap();
        let (slope, se, intercept, p) = trend_oracle(&years, &values);
        assert!((t.slope - slope).abs() < 1e-10);
        assert!((t.slope_se - se).abs() < 1e-10);
        assert!((t.intercept - intercept).abs() < 1e-6 * intercept.abs().max(1.0));
        assert!((t.p_value - p).abs() < 1e-10, "{} vs {p}", t.p_value);
        assert_eq!(t.n, 30);
        assert_eq!(t.range, (1986, 2015));
    }
}

#[test]
fn trend_range_and_errors() {
    let years: Vec<i32> = (1986..2016).collect();
    let values: Vec<f64> = years.iter().map(|&y| if y < 2001 { 0.0 } else { f64::from(y) }).collect();
    let late = linear_trend_range(&years, &values, 2001, 2015).unwrap();
    assert!((late.slope - 1.0).abs() < 1e-9);
    assert_eq!(late.range, (2001, 2015));
    assert!(linear_trend(&[2000, 2000, 2000], &[1.0, 2.0, 3.0]).is_err());
    assert!(linear_trend(&[2000, 2001], &[1.0, 2.0]).is_err());
}

proptest! {
    #[test]
    fn trend_shift_and_scale(values in prop::collection::vec(-1.0f64..1.0, 5..30), shift in -500i32..500) {
        let years: Vec<i32> = (0..values.len() as i32).collect();
        let base = linear_trend(&years, &values).unwrap();
        let shifted: Vec<i32> = years.iter().map(|y| y + shift).collect();
        let s = linear_trend(&shifted, &values).unwrap();
        prop_assert!((s.slope - base.slope).abs() < 1e-9);
        let scaled: Vec<i32> = years.iter().map(|y| y * 3).collect();
        let c = linear_trend(&scaled, &values).unwrap();
        prop_assert!((c.slope - base.slope / 3.0).abs() < 1e-9);
    }
}

// ---- lowess --------------------------------------------------------------

#[test]
fn lowess_matches_reference_fixture() {
    let text = include_str!("fixtures/lowess_sine.tsv");
    let rows: Vec<[f64; 3]> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l.split('\t').map(|s| s.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    assert_eq!(rows.len(), 50);
    let x: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let y: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let fit = lowess(&x, &y, 0.3, 3).unwrap();
    let worst = fit
        .iter()
        .zip(&rows)
        .map(|(f, r)| (f - r[2]).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-8, "max deviation {worst}");
}

#[test]
fn lowess_full_span_on_a_line_is_global_ols() {
    let x: Vec<f64> = (0..12).map(|i| (i * i) as f64 * 0.1).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.5 - 0.4 * v).collect();
    let fit = lowess(&x, &y, 1.0, 0).unwrap();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let b = x.iter().zip(&y).map(|(a, c)| (a - mx) * (c - my)).sum::<f64>()
        / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    for (f, xi) in fit.iter().zip(&x) {
        assert!((f - (my + b * (xi - mx))).abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn lowess_is_order_invariant(
        pts in prop::collection::vec((0.0f64..100.0, -1.0f64..1.0), 8..40),
        seed in any::<u64>(),
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let base = lowess(&x, &y, 0.5, 2).unwrap();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let perm = lowess(&xs, &ys, 0.5, 2).unwrap();
        for (k, &i) in order.iter().enumerate() {
            prop_assert!((perm[k] - base[i]).abs() < 1e-12);
        }
    }
}

// ---- confidence intervals -------------------------------------------------

#[test]
fn t_interval_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    // Box-Muller standard normals
    let values: Vec<f64> = (0..100)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.random(), rng.random());
            (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        })
        .collect();
    let ci = mean_ci(&values, 0.95, CiMethod::StudentT).unwrap();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let s = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let tc = t_critical(0.05, n - 1.0);
    assert!((tc - 1.984).abs() < 1e-3);
    let half = tc * s / n.sqrt();
    assert!((ci.high - mean - half).abs() < 1e-9);
    assert!((mean - ci.low - half).abs() < 1e-9);
}

#[test]
fn bootstrap_is_deterministic() {
    let v: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
    let m = CiMethod::Bootstrap { resamples: 2000, seed: 3 };
    assert_eq!(mean_ci(&v, 0.95, m).unwrap(), mean_ci(&v, 0.95, m).unwrap());
    assert!(mean_ci(&[1.0], 0.95, m).is_err());
}

proptest! {
    #[test]
    fn bootstrap_contains_mean(values in prop::collection::vec(-10.0f64..10.0, 2..40), seed in any::<u64>()) {
        let ci = mean_ci(&values, 0.95, CiMethod::Bootstrap { resamples: 200, seed }).unwrap();
        prop_assert!(ci.low <= ci.mean && ci.mean <= ci.high);
    }
}
