use rustfft::num_complex::Complex64;

use super::NoiseParams;
use crate::error::{Error, Result};
use crate::grid::{fft_forward, signed_index, GridFunction, GridSpec};
use crate::stats::pairwise_sum;

/// Frequency refinement of the spectral quadrature (zero padding factor).
const REFINE: usize = 8;

/// Transform of `f` zero-padded to `REFINE` times the box, FFT order.
fn padded_fourier(f: &GridFunction) -> Vec<Complex64> {
    let g = f.grid;
    let m = REFINE * g.n;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (b, v) in buf.iter_mut().zip(&f.values) {
        *b = Complex64::new(*v, 0.0);
    }
    fft_forward(&mut buf);
    let step = g.freq_step() / REFINE as f64;
    for (k, c) in buf.iter_mut().enumerate() {
        let xi = signed_index(k, m) as f64 * step;
        *c *= Complex64::from_polar(g.dx(), -xi * g.x_min);
    }
    buf
}

/// `int F phi conj(F psi) c_H |xi|^(1-2H) d xi` over the resolved band.
///
/// The transforms are evaluated on a frequency lattice `REFINE` times finer
/// than the grid's, each lattice cell weighted by its exact `mu` mass, so the
/// singular density at the origin is integrated exactly cell by cell.
pub fn covariance_spectral(phi: &GridFunction, psi: &GridFunction, params: &NoiseParams) -> Result<f64> {
    phi.grid.check_same(&psi.grid)?;
    let g = phi.grid;
    let fa = padded_fourier(phi);
    let fb = if phi == psi { fa.clone() } else { padded_fourier(psi) };
    let m = REFINE * g.n;
    let step = g.freq_step() / REFINE as f64;
    let kmax = (m / 2 - REFINE / 2) as i64;
    let terms: Vec<f64> = (0..m)
        .filter_map(|k| {
            let s = signed_index(k, m);
            (s.abs() < kmax).then(|| {
                // Re(a conj b) is symmetric in (a, b), so the result is too
                let (a, b) = (fa[k], fb[k]);
                (a.re * b.re + a.im * b.im) * params.cell_mass(s, step)
            })
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// The coordinate-space form
/// `c~_H int int |phi(x+y) - phi(x)|^2 / |y|^(2-2H) dx dy`
/// with the constant `c~_H` calibrated against [`covariance_spectral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectCovariance {
    pub params: NoiseParams,
    /// Calibrated `c~_H`.
    pub factor: f64,
}

impl DirectCovariance {
    /// Reference function used for calibration: a Gaussian of width
    /// `min(1, L/32)` centred in the box.
    pub fn reference_bump(grid: &GridSpec) -> GridFunction {
        let s = (grid.length() / 32.0).min(1.0);
        let c = 0.5 * (grid.x_min + grid.x_max);
        GridFunction::from_fn(*grid, |x| (-0.5 * ((x - c) / s).powi(2)).exp())
    }

    pub fn calibrate(params: &NoiseParams, grid: &GridSpec) -> Result<Self> {
        let r = Self::reference_bump(grid);
        let spectral = covariance_spectral(&r, &r, params)?;
        let raw = increment_integral(&r, params.hurst)?;
        Ok(Self {
            params: *params,
            factor: spectral / raw,
        })
    }

    pub fn covariance(&self, phi: &GridFunction) -> Result<f64> {
        Ok(self.factor * increment_integral(phi, self.params.hurst)?)
    }
}

/// `int int |phi(x+y) - phi(x)|^2 |y|^(2H-2) dx dy` for `phi` supported in
/// the middle half of its grid.
///
/// With `D(y) = int |phi(x+y) - phi(x)|^2 dx` evaluated at grid shifts, the
/// smooth ratio `g = D / y^2` is integrated against `y^(2H)` by product
/// integration on each panel. The singular first panel uses the even Taylor
/// extrapolation `g(0) = (4 g(dx) - g(2 dx)) / 3`. Beyond the support
/// diameter `D` is the constant `2 |phi|^2` and the tail is exact.
pub fn increment_integral(phi: &GridFunction, hurst: f64) -> Result<f64> {
    let g = phi.grid;
    let (a, b) = g.interior();
    for (x, v) in g.points().zip(&phi.values) {
        if (x < a || x > b) && v.abs() > 1e-12 {
            return Err(Error::Truncation(format!(
                "test function is {v:e} at x = {x}, outside the window [{a}, {b}]"
            )));
        }
    }
    let peak = phi.max_abs();
    if peak == 0.0 {
        return Ok(0.0);
    }
    let cut = 1e-17 * peak;
    let lo = phi.values.iter().position(|v| v.abs() > cut).unwrap_or(0);
    let hi = phi.values.iter().rposition(|v| v.abs() > cut).unwrap_or(0);
    let f = &phi.values[lo..=hi];
    let w = f.len();
    let dx = g.dx();

    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    let norm2 = dx * pairwise_sum(&sq);
    // D(m dx) for m = 1 ..= w; shifts of w or more do not overlap
    let at = |j: isize| -> f64 {
        if j >= 0 && (j as usize) < w {
            f[j as usize]
        } else {
            0.0
        }
    };
    let mut d = vec![0.0; w + 1];
    let mut diff = Vec::with_capacity(2 * w);
    for (m, dm) in d.iter_mut().enumerate().skip(1) {
        diff.clear();
        let m = m as isize;
        diff.extend((-m..w as isize).map(|j| {
            let e = at(j + m) - at(j);
            e * e
        }));
        *dm = dx * pairwise_sum(&diff);
    }
    let ratio: Vec<f64> = (0..=w)
        .map(|m| {
            if m == 0 {
                0.0
            } else {
                d[m] / (m as f64 * dx).powi(2)
            }
        })
        .collect();
    let mut r = ratio;
    r[0] = if w >= 2 {
        (4.0 * r[1] - r[2]) / 3.0
    } else {
        r[1]
    };

    let p = 2.0 * hurst;
    let m0 = |y: f64| y.powf(p + 1.0) / (p + 1.0);
    let m1 = |y: f64| y.powf(p + 2.0) / (p + 2.0);
    let panels: Vec<f64> = (0..w)
        .map(|m| {
            let y0 = m as f64 * dx;
            let y1 = y0 + dx;
            let i0 = m0(y1) - m0(y0);
            let i1 = m1(y1) - m1(y0);
            (r[m] * (y1 * i0 - i1) + r[m + 1] * (i1 - y0 * i0)) / dx
        })
        .collect();
    let big_y = w as f64 * dx;
    let tail = 2.0 * norm2 * big_y.powf(p - 1.0) / (1.0 - p);
    Ok(2.0 * (pairwise_sum(&panels) + tail))
}
