//! Paired tests, trend regression, smoothing and confidence intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Largest sample (after dropping zero differences) tested exactly.
pub const EXACT_MAX_N: usize = 25;

/// p-values below this are printed as `<1e-15`.
pub const P_FLOOR: f64 = 1e-15;

pub fn format_p(p: f64) -> String {
    if p < P_FLOOR {
        "<1e-15".to_string()
    } else {
        format!("{p:.6e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

impl TestMethod {
    pub fn name(self) -> &'static str {
        match self {
            TestMethod::Exact => "exact",
            TestMethod::NormalApprox => "normal_approx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedTestResult {
    /// `min(W+, W-)`
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub method: TestMethod,
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired samples: exact for up to
/// [`EXACT_MAX_N`] non-zero differences, normal approximation above.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<PairedTestResult> {
    wilcoxon_with_method(x, y, None)
}

/// [`wilcoxon_signed_rank`] with the method forced. Exact enumeration is
/// limited to 50 differences.
pub fn wilcoxon_with_method(x: &[f64], y: &[f64], method: Option<TestMethod>) -> Result<PairedTestResult> {
    if x.len() != y.len() {
        return Err(Error::invalid("paired samples differ in length"));
    }
    if x.len() < 5 {
        return Err(Error::invalid("wilcoxon test needs at least 5 pairs"));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(Error::invalid("all paired differences are zero"));
    }
    let n = diffs.len();
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let method = method.unwrap_or(if n <= EXACT_MAX_N {
        TestMethod::Exact
    } else {
        TestMethod::NormalApprox
    });
    if method == TestMethod::Exact {
        if n > 50 {
            return Err(Error::invalid("exact wilcoxon is limited to 50 differences"));
        }
        // Midranks are multiples of 1/2, so doubled ranks are integers.
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut ways = vec![0.0f64; max + 1];
        ways[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                ways[s] += ways[s - r];
            }
        }
        let cutoff = (statistic * 2.0).round() as usize;
        let tail: f64 = ways[..=cutoff].iter().sum();
        let p = (2.0 * tail / 2f64.powi(n as i32)).min(1.0);
        return Ok(PairedTestResult {
            statistic,
            p_value: p,
            n,
            method: TestMethod::Exact,
        });
    }

    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(PairedTestResult {
        statistic,
        p_value: p,
        n,
        method: TestMethod::NormalApprox,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendResult {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub p_value: f64,
    pub n: usize,
    pub range: (i32, i32),
}

/// Ordinary least squares of `values` on `years` with a two-sided t-test on
/// the slope. With zero residual variance the p-value is 1 for a flat line
/// and 0 otherwise.
pub fn linear_trend(years: &[i32], values: &[f64]) -> Result<TrendResult> {
    if years.len() != values.len() {
        return Err(Error::invalid("years and values differ in length"));
    }
    let n = years.len();
    if n < 3 {
        return Err(Error::invalid("trend needs at least 3 points"));
    }
    let nf = n as f64;
    let xs: Vec<f64> = years.iter().map(|&y| f64::from(y)).collect();
    let mx = xs.iter().sum::<f64>() / nf;
    let my = values.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("all years are identical"));
    }
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(values)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let df = nf - 2.0;
    let slope_se = (sse / df / sxx).sqrt();
    let p_value = if slope_se == 0.0 {
        if slope == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        let t = slope / slope_se;
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
        (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
    };
    Ok(TrendResult {
        slope,
        slope_se,
        intercept,
        p_value,
        n,
        range: (*years.iter().min().unwrap(), *years.iter().max().unwrap()),
    })
}

/// [`linear_trend`] restricted to `from..=to`.
pub fn linear_trend_range(years: &[i32], values: &[f64], from: i32, to: i32) -> Result<TrendResult> {
    let (ys, vs): (Vec<i32>, Vec<f64>) = years
        .iter()
        .zip(values)
        .filter(|(y, _)| (from..=to).contains(*y))
        .map(|(y, v)| (*y, *v))
        .unzip();
    linear_trend(&ys, &vs)
}

fn bisquare_cut(r: f64) -> f64 {
    if r <= 0.001 {
        1.0
    } else if r <= 0.999 {
        (1.0 - r * r).powi(2)
    } else {
        0.0
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len().is_multiple_of(2) {
        (s[m - 1] + s[m]) / 2.0
    } else {
        s[m]
    }
}

/// Locally weighted linear regression with tricube distance weights and
/// bisquare robustness iterations. Returns fitted values in input order.
pub fn lowess(x: &[f64], y: &[f64], frac: f64, iterations: usize) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y differ in length"));
    }
    let n = x.len();
    if n < 4 {
        return Err(Error::invalid("lowess needs at least 4 points"));
    }
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::invalid("frac must be in (0, 1]"));
    }
    let k = (frac * n as f64 + 1e-10) as usize;
    if k < 2 {
        return Err(Error::invalid(format!("frac {frac} covers fewer than 2 of {n} points")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let range = xs[n - 1] - xs[0];

    let mut fit = vec![0.0; n];
    let mut robust = vec![1.0; n];
    let mut w = vec![0.0; n];
    for iter in 0..=iterations {
        let (mut left, mut right) = (0usize, k);
        for i in 0..n {
            while right < n && xs[i] - xs[left] > xs[right] - xs[i] {
                left += 1;
                right += 1;
            }
            let radius = (xs[i] - xs[left]).max(xs[right - 1] - xs[i]);
            let (h9, h1) = (0.999 * radius, 0.001 * radius);
            let mut total = 0.0;
            for j in left..right {
                let r = (xs[j] - xs[i]).abs();
                w[j] = if r <= h1 {
                    1.0
                } else if r <= h9 {
                    (1.0 - (r / radius).powi(3)).powi(3)
                } else {
                    0.0
                };
                if iter > 0 {
                    w[j] *= robust[j];
                }
                total += w[j];
            }
            if total <= 0.0 {
                fit[i] = ys[i];
                continue;
            }
            for wj in &mut w[left..right] {
                *wj /= total;
            }
            if radius > 0.0 {
                let center: f64 = (left..right).map(|j| w[j] * xs[j]).sum();
                let spread: f64 = (left..right).map(|j| w[j] * (xs[j] - center).powi(2)).sum();
                if spread.sqrt() > 0.001 * range {
                    let b = (xs[i] - center) / spread;
                    for j in left..right {
                        w[j] *= b * (xs[j] - center) + 1.0;
                    }
                }
            }
            fit[i] = (left..right).map(|j| w[j] * ys[j]).sum();
        }
        if iter == iterations {
            break;
        }
        let resid: Vec<f64> = ys.iter().zip(&fit).map(|(a, b)| (a - b).abs()).collect();
        let m = median(&resid);
        if m == 0.0 {
            for (r, &e) in robust.iter_mut().zip(&resid) {
                *r = if e == 0.0 { 1.0 } else { 0.0 };
            }
        } else {
            for (r, &e) in robust.iter_mut().zip(&resid) {
                *r = bisquare_cut(e / (6.0 * m));
            }
        }
    }
    let mut out = vec![0.0; n];
    for (pos, &i) in order.iter().enumerate() {
        out[i] = fit[pos];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CiMethod {
    Bootstrap { resamples: usize, seed: u64 },
    StudentT,
}

impl Default for CiMethod {
    fn default() -> Self {
        CiMethod::Bootstrap {
            resamples: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean with a two-sided confidence interval at `level`. Bootstrap bounds
/// are widened if needed so the interval always contains the mean.
pub fn mean_ci(values: &[f64], level: f64, method: CiMethod) -> Result<MeanCi> {
    let n = values.len();
    if n < 2 {
        return Err(Error::invalid("confidence interval needs at least 2 values"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level must be in (0, 1)"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let alpha = 1.0 - level;
    match method {
        CiMethod::Bootstrap { resamples, seed } => {
            if resamples < 2 {
                return Err(Error::invalid("bootstrap needs at least 2 resamples"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut means: Vec<f64> = (0..resamples)
                .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
                .collect();
            means.sort_by(f64::total_cmp);
            let low = quantile(&means, alpha / 2.0).min(mean);
            let high = quantile(&means, 1.0 - alpha / 2.0).max(mean);
            Ok(MeanCi { mean, low, high })
        }
        CiMethod::StudentT => {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::invalid(e.to_string()))?;
            let half = dist.inverse_cdf(1.0 - alpha / 2.0) * (var / n as f64).sqrt();
            Ok(MeanCi {
                mean,
                low: mean - half,
                high: mean + half,
            })
        }
    }
}
