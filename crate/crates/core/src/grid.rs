//! Uniform periodic grids, sampled functions and the discrete Fourier
//! conventions shared by every module.
//!
//! The continuous transform is `F f(xi) = int exp(-i xi x) f(x) dx`. On a
//! grid with points `x_j = x_min + j dx` it is approximated by
//! `dx * exp(-i xi_k x_min) * FFT(f)_k` at the frequencies
//! `xi_k = 2 pi k / L`, `k = -n/2 .. n/2 - 1` (stored in FFT order).

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized forward FFT, `X_k = sum_j x_j exp(-2 pi i j k / n)`.
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}

/// Unnormalized inverse FFT, `x_j = sum_k X_k exp(2 pi i j k / n)`.
pub fn fft_inverse(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// Signed frequency index of FFT slot `k` for a transform of length `n`.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Uniform periodic grid on `[x_min, x_max)` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Domain(format!(
                "grid extent [{x_min}, {x_max}) is empty"
            )));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "grid needs an even point count >= 2, got {n}"
            )));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.point(j))
    }

    /// Frequency spacing `2 pi / L`.
    pub fn freq_step(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Frequency of FFT slot `k`.
    pub fn freq(&self, k: usize) -> f64 {
        signed_index(k, self.n) as f64 * self.freq_step()
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.dx()
    }

    /// The physical window: the middle half of the periodic box. The outer
    /// quarters on each side act as a buffer against wrap-around.
    pub fn interior(&self) -> (f64, f64) {
        let q = 0.25 * self.length();
        (self.x_min + q, self.x_max - q)
    }

    pub fn in_interior(&self, x: f64) -> bool {
        let (a, b) = self.interior();
        x >= a && x <= b
    }

    /// Stable 64-bit tag of the grid geometry.
    pub fn tag(&self) -> u64 {
        let mut h = crate::rng::splitmix64(self.x_min.to_bits());
        h = crate::rng::splitmix64(h ^ self.x_max.to_bits());
        crate::rng::splitmix64(h ^ self.n as u64)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!(
                "grid mismatch: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// Real function sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.n
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `dx * sum f_j`, the trapezoid rule on a periodic grid.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * crate::stats::pairwise_sum(&self.values)
    }

    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v * v).collect();
        (self.grid.dx() * crate::stats::pairwise_sum(&sq)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    /// `a * self + b * other` on the same grid.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Continuous Fourier transform at the grid frequencies, FFT order.
    pub fn fourier(&self) -> Vec<Complex64> {
        let g = self.grid;
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        let dx = g.dx();
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= Complex64::from_polar(dx, -g.freq(k) * g.x_min);
        }
        buf
    }

    /// Multiply the spectrum by `m(xi)` and transform back.
    pub fn apply_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        let g = self.grid;
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= m(g.freq(k));
        }
        fft_inverse(&mut buf);
        let scale = 1.0 / g.n as f64;
        Self {
            grid: g,
            values: buf.iter().map(|c| c.re * scale).collect(),
        }
    }

    /// Four-point Lagrange interpolation, periodic in the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.n as i64;
        let s = (x - g.x_min) / g.dx();
        let i = s.floor();
        let u = s - i;
        let i = i as i64;
        let at = |k: i64| self.values[k.rem_euclid(n) as usize];
        let (fm, f0, f1, f2) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        let wm = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
        wm * fm + w0 * f0 + w1 * f1 + w2 * f2
    }
}

/// Real samples `f_j = sum_k s_k exp(i xi_k x_j)` of a field given by its
/// (Hermitian) spectral amplitudes in FFT order. Returns the samples and the
/// largest discarded imaginary part.
pub fn synthesize_real(grid: &GridSpec, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
    let mut buf: Vec<Complex64> = spectrum
        .iter()
        .enumerate()
        .map(|(k, &s)| s * Complex64::from_polar(1.0, grid.freq(k) * grid.x_min))
        .collect();
    fft_inverse(&mut buf);
    let imag = buf.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    (buf.iter().map(|c| c.re).collect(), imag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 1.0, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 7).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn fourier_of_gaussian_matches_closed_form() {
        let g = GridSpec::centered(20.0, 512).unwrap();
        let f = GridFunction::from_fn(g, |x| (-0.5 * x * x).exp());
        let ff = f.fourier();
        for k in 0..g.n {
            let xi = g.freq(k);
            let exact = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
            assert!((ff[k] - Complex64::new(exact, 0.0)).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn interpolation_is_exact_for_cubics_and_nodes() {
        let g = GridSpec::new(0.0, 1.0, 64).unwrap();
        let f = GridFunction::from_fn(g, |x| (2.0 * PI * x).sin());
        for j in 0..g.n {
            assert!((f.interpolate(g.point(j)) - f.values[j]).abs() < 1e-14);
        }
        let c = GridFunction::from_fn(g, |x| x * x * x - 0.3 * x);
        let x = 0.4137;
        assert!((c.interpolate(x) - (x * x * x - 0.3 * x)).abs() < 1e-12);
    }

    #[test]
    fn synthesize_inverts_fourier() {
        let g = GridSpec::centered(10.0, 256).unwrap();
        let f = GridFunction::from_fn(g, |x| (-(x - 1.0) * (x - 1.0)).exp() * x);
        let ff = f.fourier();
        let spec: Vec<Complex64> = ff.iter().map(|c| c / g.length()).collect();
        let (back, imag) = synthesize_real(&g, &spec);
        assert!(imag < 1e-12);
        for (a, b) in back.iter().zip(&f.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
