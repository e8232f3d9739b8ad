//! Brute-force oracles shared by the integration tests. Each one is written
//! from the definition, not from the library code it checks.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

// ---- special functions ----------------------------------------------------

pub fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let clamp = |v: f64| if v.abs() < tiny { tiny } else { v };
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 / clamp(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / clamp(1.0 + aa * d);
        c = clamp(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-sided tail probability of Student's t.
pub fn t_two_sided(t: f64, df: f64) -> f64 {
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
}

pub fn t_critical(p_two_sided: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1000.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if t_two_sided(mid, df) > p_two_sided {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

// ---- statistics -----------------------------------------------------------

/// Signed-rank statistic and two-sided p over all 2^n sign assignments.
pub fn wilcoxon_enumerate(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total: f64 = ranks.iter().sum();
    let stat = w_plus.min(total - w_plus);
    let mut count = 0u64;
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= stat + 1e-9 {
            count += 1;
        }
    }
    (stat, (2.0 * count as f64 / (1u64 << n) as f64).min(1.0))
}

/// OLS by the 2x2 normal equations: (slope, slope SE, intercept, p).
pub fn trend_oracle(years: &[i32], values: &[f64]) -> (f64, f64, f64, f64) {
    let n = years.len() as f64;
    let x: Vec<f64> = years.iter().map(|&y| f64::from(y)).collect();
    let (sx, sxx) = (x.iter().sum::<f64>(), x.iter().map(|v| v * v).sum::<f64>());
    let sy: f64 = values.iter().sum();
    let sxy: f64 = x.iter().zip(values).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let b0 = (sxx * sy - sx * sxy) / det;
    let b1 = (n * sxy - sx * sy) / det;
    let sse: f64 = x.iter().zip(values).map(|(a, b)| (b - b0 - b1 * a).powi(2)).sum();
    let s2 = sse / (n - 2.0);
    let se = (s2 * n / det).sqrt();
    let p = t_two_sided(b1 / se, n - 2.0);
    (b1, se, b0, p)
}

// ---- linear algebra -------------------------------------------------------

/// Solves a dense square system by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Ridge with intercept: centered normal equations solved by elimination.
pub fn ridge_oracle(rows: &[Vec<f64>], y: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let d = rows[0].len();
    let mx: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let my = y.iter().sum::<f64>() / n as f64;
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (r, yi) in rows.iter().zip(y) {
        for i in 0..d {
            b[i] += (r[i] - mx[i]) * (yi - my);
            for j in 0..d {
                a[i][j] += (r[i] - mx[i]) * (r[j] - mx[j]);
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += alpha;
    }
    let w = gauss_solve(a, b).expect("singular ridge oracle system");
    let intercept = my - mx.iter().zip(&w).map(|(m, wi)| m * wi).sum::<f64>();
    (w, intercept)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues and the matching eigenvectors (as columns, one Vec each).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    (values, vectors)
}

/// Leading eigenvector of the covariance of the mean-centered rows.
pub fn first_pc_oracle(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| rows.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum())
                .collect()
        })
        .collect();
    let (values, vectors) = jacobi_eigen(cov);
    let top = (0..d).max_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    vectors[top].clone()
}

// ---- embeddings and measures ----------------------------------------------

/// Full scan: cosine of every non-excluded row against a unit query, sorted
/// descending with ties by index.
pub fn neighbors_oracle(rows: &[Vec<f64>], words: &[String], query: &[f64], k: usize, exclude: &HashSet<&str>) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if exclude.contains(words[i].as_str()) {
            continue;
        }
        let mut c = 0.0;
        for (a, b) in r.iter().zip(query) {
            c += a * b;
        }
        all.push((i, c));
    }
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Mean score over tokens found in the lexicon, trying each token first and
/// its lemma second.
pub fn paragraph_affect_oracle(tokens: &[String], lemmas: &[String], lexicon: &HashMap<String, f64>) -> Option<f64> {
    let mut hits = Vec::new();
    for i in 0..tokens.len() {
        if let Some(v) = lexicon.get(&tokens[i]) {
            hits.push(*v);
        } else if let Some(v) = lexicon.get(&lemmas[i]) {
            hits.push(*v);
        }
    }
    if hits.is_empty() {
        return None;
    }
    let mut s = 0.0;
    for h in &hits {
        s += h;
    }
    Some(s / hits.len() as f64)
}

/// Postprocessing redone in f64 from the raw input vectors, compared with
/// the model's rows.
pub struct PostprocessGaps {
    /// Largest |column mean| of the centered matrix, before normalization.
    pub centered_mean: f64,
    /// Largest |column mean| of the final unit rows.
    pub final_mean: f64,
    /// Largest | ||row|| - 1 | of the model's rows.
    pub norm: f64,
    /// Largest elementwise difference from the recomputed rows.
    pub rows: f64,
}

pub fn postprocess_gaps(m: &dehum::embeddings::EmbeddingModel) -> PostprocessGaps {
    let (n, dim) = (m.len(), m.dim());
    let raw = m.raw_input_matrix();
    let mut mean = vec![0.0; dim];
    for i in 0..n {
        for j in 0..dim {
            mean[j] += f64::from(raw[i * dim + j]);
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let centered: Vec<Vec<f64>> = (0..n).map(|i| (0..dim).map(|j| f64::from(raw[i * dim + j]) - mean[j]).collect()).collect();
    let col_mean = |rows: &dyn Fn(usize) -> Vec<f64>| {
        let mut sums = vec![0.0; dim];
        for i in 0..n {
            for (s, x) in sums.iter_mut().zip(rows(i)) {
                *s += x;
            }
        }
        sums.iter().map(|s| (s / n as f64).abs()).fold(0.0, f64::max)
    };
    let mut gaps = PostprocessGaps {
        centered_mean: col_mean(&|i| centered[i].clone()),
        final_mean: col_mean(&|i| m.row(i).to_vec()),
        norm: 0.0,
        rows: 0.0,
    };
    for (i, c) in centered.iter().enumerate() {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let want: Vec<f64> = c.iter().map(|x| x / norm).collect();
        gaps.rows = gaps.rows.max(max_abs_diff(m.row(i), &want));
        gaps.norm = gaps.norm.max((m.row(i).iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs());
    }
    gaps
}

// ---- small helpers --------------------------------------------------------

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
