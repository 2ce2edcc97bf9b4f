use serde::{Deserialize, Serialize};

use super::mollifier::bump_fourier;
use super::{NoiseParams, SpectralNoise};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// `F l(eps xi_k)` for every frequency of a grid, in FFT order. Building it
/// is the expensive part of mollification; reuse it across realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSpectrum {
    pub epsilon: f64,
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl MollifierSpectrum {
    pub fn new(epsilon: f64, grid: &GridSpec) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
        }
        let n = grid.n;
        let mut values = vec![0.0; n];
        for k in 0..=n / 2 {
            let v = bump_fourier(epsilon * k as f64 * grid.freq_step());
            values[k] = v;
            if k > 0 && k < n / 2 {
                values[n - k] = v;
            }
        }
        Ok(Self {
            epsilon,
            grid: *grid,
            values,
        })
    }
}

/// Where a mollified field came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSource {
    pub params: NoiseParams,
    pub grid_tag: u64,
}

/// Samples of `W^eps = W * l_eps` on the noise grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedField {
    /// `None` for fields injected by hand (zero or constant potentials).
    pub source: Option<FieldSource>,
    pub epsilon: f64,
    pub samples: GridFunction,
}

impl MollifiedField {
    /// A deterministic potential given directly by its samples.
    pub fn injected(samples: GridFunction, epsilon: f64) -> Self {
        Self {
            source: None,
            epsilon,
            samples,
        }
    }

    pub fn zero(grid: GridSpec) -> Self {
        Self::injected(GridFunction::zeros(grid), 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::injected(GridFunction::from_fn(grid, |_| c), 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.samples.grid
    }

    pub fn params(&self) -> Option<&NoiseParams> {
        self.source.as_ref().map(|s| &s.params)
    }

    /// Local cubic interpolation between grid points.
    pub fn at(&self, x: f64) -> f64 {
        self.samples.interpolate(x)
    }

    /// Same field with the potential shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            source: self.source,
            epsilon: self.epsilon,
            samples: GridFunction {
                grid: self.samples.grid,
                values: self.samples.values.iter().map(|v| v + c).collect(),
            },
        }
    }

    /// Empirical variance of the samples over the physical window.
    pub fn window_variance(&self) -> f64 {
        let g = self.grid();
        let v: Vec<f64> = g
            .points()
            .zip(&self.samples.values)
            .filter(|(x, _)| g.in_interior(*x))
            .map(|(_, v)| *v)
            .collect();
        crate::stats::variance(&v)
    }
}

/// `W^eps` by multiplying the amplitudes with `F l(eps xi)`.
pub fn mollify(noise: &SpectralNoise, epsilon: f64) -> Result<MollifiedField> {
    let spec = MollifierSpectrum::new(epsilon, &noise.grid)?;
    mollify_with(noise, &spec)
}

pub fn mollify_with(noise: &SpectralNoise, spec: &MollifierSpectrum) -> Result<MollifiedField> {
    noise.grid.check_same(&spec.grid)?;
    let dx = noise.grid.dx();
    if spec.epsilon < 4.0 * dx * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "epsilon = {} below 4 dx = {}",
            spec.epsilon,
            4.0 * dx
        )));
    }
    let spectrum: Vec<_> = noise
        .coeffs
        .iter()
        .zip(&spec.values)
        .map(|(c, f)| c * f)
        .collect();
    let (values, _) = crate::grid::synthesize_real(&noise.grid, &spectrum);
    Ok(MollifiedField {
        source: Some(FieldSource {
            params: noise.params,
            grid_tag: noise.grid.tag(),
        }),
        epsilon: spec.epsilon,
        samples: GridFunction {
            grid: noise.grid,
            values,
        },
    })
}

/// `sum_k |F l(eps xi_k) c_k|^2`, the spectral energy of `W^eps`.
pub fn spectral_energy(noise: &SpectralNoise, spec: &MollifierSpectrum) -> f64 {
    let terms: Vec<f64> = noise
        .coeffs
        .iter()
        .zip(&spec.values)
        .map(|(c, f)| c.norm_sqr() * f * f)
        .collect();
    crate::stats::pairwise_sum(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::synthesize;

    #[test]
    fn under_resolved_epsilon_rejected() {
        let g = GridSpec::centered(8.0, 256).unwrap();
        let p = NoiseParams::new(0.3, 1.0, 1).unwrap();
        let w = synthesize(&p, &g);
        assert!(matches!(mollify(&w, 2.0 * g.dx()), Err(Error::Resolution(_))));
        assert!(mollify(&w, 4.0 * g.dx()).is_ok());
    }

    #[test]
    fn field_is_finite_and_tagged() {
        let g = GridSpec::centered(8.0, 1024).unwrap();
        let p = NoiseParams::new(0.3, 1.0, 5).unwrap();
        let w = synthesize(&p, &g);
        let f = mollify(&w, 0.1).unwrap();
        assert!(f.samples.values.iter().all(|v| v.is_finite()));
        assert_eq!(f.source.unwrap().params.seed, 5);
        assert_eq!(f.source.unwrap().grid_tag, g.tag());
    }
}
