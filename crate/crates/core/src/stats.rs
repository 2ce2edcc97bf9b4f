//! Small statistics helpers: deterministic summation, moments, Kendall's
//! tau trend test and ordinary least squares.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how work was split across threads.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() as f64 - 1.0)
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolated empirical quantile, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Two-sided standard normal quantile, e.g. `z(0.95) = 1.95996...`.
pub fn normal_z(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTest {
    pub tau_b: f64,
    /// Normal-approximation z statistic with tie-corrected variance.
    pub z: f64,
    /// One-sided p-value for an increasing trend.
    pub p_increasing: f64,
}

/// Kendall's tau-b between `x` and `y`, with the tie-corrected variance of
/// the S statistic.
pub fn kendall(x: &[f64], y: &[f64]) -> KendallTest {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[j] - x[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            let b = (y[j] - y[i]).partial_cmp(&0.0).map_or(0, |o| o as i64);
            s += a * b;
        }
    }
    let ties = |v: &[f64]| -> Vec<f64> {
        let mut w = v.to_vec();
        w.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        let mut i = 0;
        while i < w.len() {
            let mut j = i;
            while j + 1 < w.len() && w[j + 1] == w[i] {
                j += 1;
            }
            if j > i {
                out.push((j - i + 1) as f64);
            }
            i = j + 1;
        }
        out
    };
    let tx = ties(x);
    let ty = ties(y);
    let nf = n as f64;
    let n0 = nf * (nf - 1.0) / 2.0;
    let n1: f64 = tx.iter().map(|t| t * (t - 1.0) / 2.0).sum();
    let n2: f64 = ty.iter().map(|t| t * (t - 1.0) / 2.0).sum();
    let tau_b = s as f64 / ((n0 - n1) * (n0 - n2)).sqrt();
    let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
    let vt: f64 = tx.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
    let vu: f64 = ty.iter().map(|t| t * (t - 1.0) * (2.0 * t + 5.0)).sum();
    let v1 = tx.iter().map(|t| t * (t - 1.0)).sum::<f64>() * ty.iter().map(|t| t * (t - 1.0)).sum::<f64>()
        / (2.0 * nf * (nf - 1.0));
    let v2 = tx.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum::<f64>()
        * ty.iter().map(|t| t * (t - 1.0) * (t - 2.0)).sum::<f64>()
        / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    let var_s = (v0 - vt - vu) / 18.0 + v1 + v2;
    let z = if var_s > 0.0 { s as f64 / var_s.sqrt() } else { 0.0 };
    let p_increasing = 1.0 - Normal::standard().cdf(z);
    KendallTest {
        tau_b,
        z,
        p_increasing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Ordinary least squares `y = intercept + slope * x`. `None` when `x` has
/// no spread.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 1e-300) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some(LinearFit {
        slope,
        intercept,
        rms_residual: (ss / x.len() as f64).sqrt(),
    })
}
