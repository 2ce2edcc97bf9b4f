//! The standard bump `l(x) = c exp(-1/(1-x^2)) 1{|x|<1}` and its rescalings
//! `l_eps(x) = l(x/eps)/eps`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Trapezoid rule on `[-1, 1]` with `n` panels for an even integrand that
/// vanishes to all orders at the endpoints. Converges faster than any power.
fn bump_trapezoid(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 / n as f64;
    let half: f64 = (1..n / 2).map(|j| f(j as f64 * h)).sum();
    h * (f(0.0) + 2.0 * half)
}

fn raw_bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Normalizing constant `c` making `l` a probability density.
pub fn bump_normalizer() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| 1.0 / bump_trapezoid(4096, raw_bump))
}

pub fn bump(x: f64) -> f64 {
    bump_normalizer() * raw_bump(x)
}

/// Above this frequency `|F l| < 1e-17`.
const FOURIER_CUTOFF: f64 = 1700.0;

/// `F l(omega) = int cos(omega x) l(x) dx` (real, even, `F l(0) = 1`).
///
/// Trapezoid error is the aliased value `F l(pi N - omega)`, so the panel
/// count grows with `omega` to keep that below double precision.
pub fn bump_fourier(omega: f64) -> f64 {
    let w = omega.abs();
    if w > FOURIER_CUTOFF {
        return 0.0;
    }
    let n = 2 * ((FOURIER_CUTOFF + w) / (2.0 * std::f64::consts::PI)).ceil() as usize;
    bump_trapezoid(n.max(64), |x| bump(x) * (w * x).cos())
}

/// `l_eps` sampled on `grid`, centred at the origin.
pub fn mollifier_kernel(epsilon: f64, grid: &GridSpec) -> Result<GridFunction> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    if grid.dx() > epsilon / 8.0 {
        return Err(Error::Resolution(format!(
            "dx = {} does not resolve a bump of radius {epsilon} (need dx <= eps/8)",
            grid.dx()
        )));
    }
    Ok(GridFunction::from_fn(*grid, |x| bump(x / epsilon) / epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_at_zero_is_one() {
        assert!((bump_fourier(0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fourier_is_bounded_by_one_and_decays() {
        for i in 0..4000 {
            let w = i as f64 * 0.5;
            assert!(bump_fourier(w).abs() <= 1.0 + 1e-12);
        }
        assert!(bump_fourier(800.0).abs() < 1e-13);
    }

    #[test]
    fn kernel_rejects_bad_input() {
        let g = GridSpec::centered(1.0, 64).unwrap();
        assert!(matches!(mollifier_kernel(0.0, &g), Err(Error::Domain(_))));
        assert!(matches!(mollifier_kernel(0.1, &g), Err(Error::Resolution(_))));
    }

    #[test]
    fn kernel_support() {
        let g = GridSpec::centered(1.0, 1024).unwrap();
        let k = mollifier_kernel(0.25, &g).unwrap();
        for (x, v) in g.points().zip(&k.values) {
            if x.abs() >= 0.25 {
                assert_eq!(*v, 0.0);
            }
        }
    }
}
