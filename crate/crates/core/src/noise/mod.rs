//! Spectral synthesis of the centered Gaussian noise with spectral measure
//! `mu(d xi) = c_H |xi|^(1-2H) d xi`, its pairing with test functions,
//! mollification and the two covariance formulas.
//!
//! A realization lives on a periodic [`GridSpec`]. Its state is the list of
//! complex amplitudes `c_k`, one per grid frequency, with
//! `E|c_k|^2 = mu(cell_k)` and `c_{-k} = conj(c_k)`. The zero mode and the
//! Nyquist mode are zero. Pairing with a test function is
//! `W(phi) = sum_k conj(F phi(xi_k)) c_k`, which reproduces
//! `E[W(phi) W(psi)] = int F phi conj(F psi) d mu` on the resolved band.

mod covariance;
mod field;
mod mollifier;

pub use covariance::{covariance_spectral, increment_integral, DirectCovariance};
pub use field::{mollify, mollify_with, spectral_energy, FieldSource, MollifiedField, MollifierSpectrum};
pub use mollifier::{bump, bump_fourier, bump_normalizer, mollifier_kernel};

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{synthesize_real, GridFunction, GridSpec};
use crate::rng::make_rng;
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Hurst index, in `(0, 1/2)`.
    #[serde(rename = "H")]
    pub hurst: f64,
    /// Spectral amplitude `c_H`.
    #[serde(rename = "cH")]
    pub c_h: f64,
    pub seed: u64,
}

impl NoiseParams {
    pub fn new(hurst: f64, c_h: f64, seed: u64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 0.5) {
            return Err(Error::Domain(format!("H = {hurst} must lie in (0, 1/2)")));
        }
        if !(c_h > 0.0 && c_h.is_finite()) {
            return Err(Error::Domain(format!("cH = {c_h} must be positive")));
        }
        Ok(Self { hurst, c_h, seed })
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Exponent `1 - 2H` of the spectral density.
    pub fn density_exponent(&self) -> f64 {
        1.0 - 2.0 * self.hurst
    }

    /// `mu([a, b])` for `0 <= a <= b`.
    pub fn band_mass(&self, a: f64, b: f64) -> f64 {
        let p = 2.0 - 2.0 * self.hurst;
        self.c_h * (b.powf(p) - a.powf(p)) / p
    }

    /// `mu` mass of the frequency cell of width `step` centred on
    /// `k * step`. The zero cell is `[-step/2, step/2]`.
    pub fn cell_mass(&self, k: i64, step: f64) -> f64 {
        if k == 0 {
            2.0 * self.band_mass(0.0, 0.5 * step)
        } else {
            let c = k.unsigned_abs() as f64 * step;
            self.band_mass(c - 0.5 * step, c + 0.5 * step)
        }
    }
}

/// One realization of the noise on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNoise {
    pub params: NoiseParams,
    pub grid: GridSpec,
    /// Amplitudes in FFT order.
    pub coeffs: Vec<Complex64>,
}

impl SpectralNoise {
    /// Wrap externally produced amplitudes, checking the realness and
    /// zero-mode constraints.
    pub fn from_coeffs(params: NoiseParams, grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n {
            return Err(Error::Shape(format!(
                "{} coefficients for {} grid points",
                coeffs.len(),
                grid.n
            )));
        }
        let n = grid.n;
        if coeffs[0] != Complex64::new(0.0, 0.0) {
            return Err(Error::Format("zero mode must vanish".into()));
        }
        if coeffs[n / 2].im != 0.0 {
            return Err(Error::Format("Nyquist mode must be real".into()));
        }
        for k in 1..n / 2 {
            if coeffs[n - k] != coeffs[k].conj() {
                return Err(Error::Format(format!("coefficients not Hermitian at k = {k}")));
            }
        }
        Ok(Self { params, grid, coeffs })
    }

    /// `(seed, grid tag)` identifying the realization.
    pub fn tag(&self) -> (u64, u64) {
        (self.params.seed, self.grid.tag())
    }

    /// `W(phi) = sum_k conj(F phi(xi_k)) c_k`.
    pub fn pair(&self, phi: &GridFunction) -> Result<f64> {
        self.grid.check_same(&phi.grid)?;
        let fphi = phi.fourier();
        let terms: Vec<f64> = fphi
            .iter()
            .zip(&self.coeffs)
            .map(|(f, c)| (f.conj() * c).re)
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Grid samples of the field whose spectrum is `c_k m(xi_k)`.
    pub fn filtered_samples(&self, m: impl Fn(f64) -> f64) -> Vec<f64> {
        let spec: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * m(self.grid.freq(k)))
            .collect();
        synthesize_real(&self.grid, &spec).0
    }

    /// Samples of the band-limited field (grid truncation acts as a
    /// mollifier at scale ~ dx).
    pub fn samples(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.filtered_samples(|_| 1.0),
        }
    }

    /// Same realization with every amplitude multiplied by `p`.
    pub fn scaled(&self, p: f64) -> Self {
        Self {
            params: NoiseParams {
                c_h: self.params.c_h * p * p,
                ..self.params
            },
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * p).collect(),
        }
    }
}

/// Coordinate-space covariance `E[W(phi)^2]`, with the direct-form
/// constant calibrated on this grid.
pub fn covariance_direct(phi: &GridFunction, params: &NoiseParams) -> Result<f64> {
    DirectCovariance::calibrate(params, &phi.grid)?.covariance(phi)
}

/// Draw one realization. Deterministic in `(params, grid)`: amplitudes for
/// `k = 1 .. n/2 - 1` are drawn in order from `ChaCha8Rng(seed)`.
pub fn synthesize(params: &NoiseParams, grid: &GridSpec) -> SpectralNoise {
    let n = grid.n;
    let step = grid.freq_step();
    let mut rng = make_rng(params.seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..n / 2 {
        let s = (0.5 * params.cell_mass(k as i64, step)).sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let c = Complex64::new(s * re, s * im);
        coeffs[k] = c;
        coeffs[n - k] = c.conj();
    }
    SpectralNoise {
        params: *params,
        grid: *grid,
        coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::centered(32.0, 1024).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(NoiseParams::new(0.0, 1.0, 0).is_err());
        assert!(NoiseParams::new(0.5, 1.0, 0).is_err());
        assert!(NoiseParams::new(0.3, 0.0, 0).is_err());
        assert!(NoiseParams::new(0.3, 1.0, 0).is_ok());
    }

    #[test]
    fn cell_masses_tile_the_band() {
        let p = NoiseParams::new(0.3, 1.7, 0).unwrap();
        let step = 0.37;
        let total: f64 = (-20..=20).map(|k| p.cell_mass(k, step)).sum();
        let exact = 2.0 * p.band_mass(0.0, 20.5 * step);
        assert!((total - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn synthesis_is_deterministic_and_hermitian() {
        let p = NoiseParams::new(0.25, 1.0, 42).unwrap();
        let a = synthesize(&p, &grid());
        let b = synthesize(&p, &grid());
        assert_eq!(a.coeffs, b.coeffs);
        let n = a.grid.n;
        assert_eq!(a.coeffs[0], Complex64::new(0.0, 0.0));
        for k in 1..n / 2 {
            assert_eq!(a.coeffs[n - k], a.coeffs[k].conj());
        }
        let c = synthesize(&p.with_seed(43), &grid());
        assert_ne!(a.coeffs, c.coeffs);
        assert!(SpectralNoise::from_coeffs(p, a.grid, a.coeffs.clone()).is_ok());
    }

    #[test]
    fn samples_are_real() {
        let p = NoiseParams::new(0.25, 1.0, 3).unwrap();
        let w = synthesize(&p, &grid());
        let spec = w.coeffs.clone();
        let (_, imag) = synthesize_real(&w.grid, &spec);
        assert!(imag < 1e-10);
    }

    #[test]
    fn pair_of_zero_is_zero_and_grid_checked() {
        let p = NoiseParams::new(0.25, 1.0, 3).unwrap();
        let w = synthesize(&p, &grid());
        assert_eq!(w.pair(&GridFunction::zeros(grid())).unwrap(), 0.0);
        let other = GridSpec::centered(16.0, 1024).unwrap();
        assert!(matches!(w.pair(&GridFunction::zeros(other)), Err(Error::Shape(_))));
    }

    #[test]
    fn pair_matches_direct_frequency_sum() {
        // independent O(n^2) evaluation of F phi and the pairing sum
        let g = GridSpec::centered(8.0, 128).unwrap();
        let p = NoiseParams::new(0.3, 1.0, 11).unwrap();
        let w = synthesize(&p, &g);
        let phi = GridFunction::from_fn(g, |x| (-(x - 0.5) * (x - 0.5)).exp() * (1.0 + x));
        let mut direct = 0.0;
        for k in 0..g.n {
            let xi = g.freq(k);
            let mut f = Complex64::new(0.0, 0.0);
            for j in 0..g.n {
                let x = g.point(j);
                f += Complex64::from_polar(phi.values[j] * g.dx(), -xi * x);
            }
            direct += (f.conj() * w.coeffs[k]).re;
        }
        let fast = w.pair(&phi).unwrap();
        assert!((fast - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }

    #[test]
    fn amplitude_variance_matches_cell_mass() {
        let g = GridSpec::centered(4.0, 16).unwrap();
        let p = NoiseParams::new(0.2, 1.0, 0).unwrap();
        let k = 3;
        let reps = 20_000;
        let mean_sq: f64 = (0..reps)
            .map(|s| synthesize(&p.with_seed(s), &g).coeffs[k].norm_sqr())
            .sum::<f64>()
            / reps as f64;
        let expect = p.cell_mass(k as i64, 2.0 * PI / 8.0);
        // |c_k|^2 is exponential: relative sd 1/sqrt(reps)
        assert!((mean_sq / expect - 1.0).abs() < 4.0 / (reps as f64).sqrt());
    }
}
