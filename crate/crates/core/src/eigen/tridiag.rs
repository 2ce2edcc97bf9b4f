//! Symmetric tridiagonal kernels: Sturm counts, QL eigenvalues and
//! shifted LDL^T solves.

use crate::error::{Error, Result};

/// Number of eigenvalues strictly below `x`.
pub fn sturm_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let q_prev = if q == 0.0 { tiny } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / q_prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let m = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < m { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

/// Largest eigenvalue by bisection on the Sturm count, to the last bit the
/// count can resolve.
pub fn top_by_bisection(diag: &[f64], off: &[f64]) -> (f64, usize) {
    let m = diag.len();
    let (mut lo, mut hi) = gershgorin(diag, off);
    let pad = 1e-12 * (lo.abs().max(hi.abs()).max(1.0));
    lo -= pad;
    hi += pad;
    let mut it = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || it > 200 {
            return (0.5 * (lo + hi), it);
        }
        if sturm_below(diag, off, mid) == m {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
}

/// All eigenvalues by implicit-shift QL (no vectors), unordered.
pub fn ql_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < n {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence(format!("QL stalled at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = mm;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(d)
}

/// Pivots of `sigma I - T = L D L^T`; `None` unless every pivot is positive,
/// i.e. unless `sigma` lies strictly above the spectrum.
pub fn factor_above(diag: &[f64], off: &[f64], sigma: f64) -> Option<Vec<f64>> {
    let mut piv = Vec::with_capacity(diag.len());
    let mut p = sigma - diag[0];
    if !(p > 0.0) {
        return None;
    }
    piv.push(p);
    for i in 1..diag.len() {
        p = sigma - diag[i] - off[i - 1] * off[i - 1] / p;
        if !(p > 0.0) {
            return None;
        }
        piv.push(p);
    }
    Some(piv)
}

/// Solve `(sigma I - T) x = b` from [`factor_above`] pivots. With `off ≥ 0`
/// and `b ≥ 0` every operation is a sum of nonnegative terms, so the
/// solution is nonnegative in floating point too.
pub fn solve_above(off: &[f64], piv: &[f64], b: &mut [f64]) {
    let n = piv.len();
    // forward: L y = b, L has -off/p below the diagonal
    for i in 1..n {
        b[i] += off[i - 1] / piv[i - 1] * b[i - 1];
    }
    for i in 0..n {
        b[i] /= piv[i];
    }
    for i in (0..n - 1).rev() {
        b[i] += off[i] / piv[i] * b[i + 1];
    }
}
