//! The variational constant
//! `E = sup { int |F g^2(l)|^2 |l|^{1-2H} dl : ||g||^2 + ||g'||^2 / 2 = 1 }`
//! and the growth constant `(2 c_H E)^{1/(1+H)}` it predicts.
//!
//! Functions live on a periodic grid large enough that `g` has decayed at
//! the edge. The frequency integral is a cell sum over the grid lattice with
//! the exact `|l|^{1-2H}` mass of each cell.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, signed_index, GridFunction, GridSpec};
use crate::stats::pairwise_sum;

/// Edge values above this (relative to the peak) violate the decay
/// precondition.
pub const EDGE_DECAY: f64 = 1e-12;

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::Domain(format!("H = {h} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// `int_a^b |l|^{1-2H} dl` for `0 <= a <= b`.
fn power_mass(h: f64, a: f64, b: f64) -> f64 {
    let p = 2.0 - 2.0 * h;
    (b.powf(p) - a.powf(p)) / p
}

/// Spectral weights in FFT order, scaled by `scale`.
fn weights(h: f64, grid: &GridSpec, scale: f64) -> Vec<f64> {
    let step = grid.freq_step();
    (0..grid.n)
        .map(|k| {
            let m = signed_index(k, grid.n).unsigned_abs() as f64;
            let w = if m == 0.0 {
                2.0 * power_mass(h, 0.0, 0.5 * step)
            } else {
                power_mass(h, (m - 0.5) * step, (m + 0.5) * step)
            };
            scale * w
        })
        .collect()
}

fn check_decay(g: &GridFunction) -> Result<()> {
    let peak = g.max_abs();
    let edge = g.values[0].abs().max(g.values[g.len() - 1].abs());
    if edge > EDGE_DECAY * peak {
        return Err(Error::Truncation(format!(
            "|g| at the grid edge is {edge:.3e}, peak {peak:.3e}: enlarge the box"
        )));
    }
    Ok(())
}

/// Unnormalized FFT of `g^2`; `F g^2(xi_k) = dx exp(-i xi_k x_min) * this`.
fn square_spectrum(g: &GridFunction) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = g.values.iter().map(|v| Complex64::new(v * v, 0.0)).collect();
    fft_forward(&mut buf);
    buf
}

struct Objective {
    grid: GridSpec,
    weights: Vec<f64>,
}

impl Objective {
    fn new(h: f64, grid: &GridSpec, scale: f64) -> Self {
        Self {
            grid: *grid,
            weights: weights(h, grid, scale),
        }
    }

    fn energy(&self, g: &GridFunction) -> f64 {
        let dx = self.grid.dx();
        let s = square_spectrum(g);
        let terms: Vec<f64> = s.iter().zip(&self.weights).map(|(c, w)| w * c.norm_sqr()).collect();
        dx * dx * pairwise_sum(&terms)
    }

    /// L2 gradient: `dE/dg(x) = 4 g(x) sum_k w_k F g^2(xi_k) exp(i xi_k x)`.
    fn gradient(&self, g: &GridFunction) -> GridFunction {
        let dx = self.grid.dx();
        let mut s = square_spectrum(g);
        for (c, w) in s.iter_mut().zip(&self.weights) {
            *c *= *w;
        }
        fft_inverse(&mut s);
        GridFunction {
            grid: self.grid,
            values: g.values.iter().zip(&s).map(|(v, p)| 4.0 * dx * v * p.re).collect(),
        }
    }
}

/// Spectral energy of `g` (no `c_H`).
pub fn energy(g: &GridFunction, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    check_decay(g)?;
    Ok(Objective::new(hurst, &g.grid, 1.0).energy(g))
}

/// L2 gradient of [`energy`]: `<gradient(g), d> = dE(g)[d]`.
pub fn gradient(g: &GridFunction, hurst: f64) -> Result<GridFunction> {
    check_hurst(hurst)?;
    check_decay(g)?;
    Ok(Objective::new(hurst, &g.grid, 1.0).gradient(g))
}

/// `||g'||^2` by spectral differentiation.
pub fn derivative_norm_sq(g: &GridFunction) -> f64 {
    let n = g.len();
    let mut buf: Vec<Complex64> = g.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_forward(&mut buf);
    let terms: Vec<f64> = buf
        .iter()
        .enumerate()
        .map(|(k, c)| g.grid.freq(k).powi(2) * c.norm_sqr())
        .collect();
    g.grid.dx() * pairwise_sum(&terms) / n as f64
}

/// `||g||^2 + ||g'||^2 / 2`.
pub fn constraint(g: &GridFunction) -> f64 {
    g.l2_norm().powi(2) + 0.5 * derivative_norm_sq(g)
}

/// `g / sqrt(||g||^2 + ||g'||^2 / 2)`.
pub fn project(g: &GridFunction) -> Result<GridFunction> {
    let k = constraint(g);
    if !(k > 0.0) {
        return Err(Error::Domain("cannot project the zero function".into()));
    }
    Ok(g.scaled(1.0 / k.sqrt()))
}

/// `(1 - Laplacian / 2)^{-1} f`, the Riesz map of the constraint metric.
fn precondition(f: &GridFunction) -> GridFunction {
    f.apply_multiplier(|xi| 1.0 / (1.0 + 0.5 * xi * xi))
}

/// `<a, b>_M = <a, b> + <a', b'> / 2`.
fn metric_inner(a: &GridFunction, b: &GridFunction) -> f64 {
    let dx = a.grid.dx();
    let n = a.len();
    let to = |f: &GridFunction| {
        let mut v: Vec<Complex64> = f.values.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        fft_forward(&mut v);
        v
    };
    let (fa, fb) = (to(a), to(b));
    let terms: Vec<f64> = fa
        .iter()
        .zip(&fb)
        .enumerate()
        .map(|(k, (x, y))| (1.0 + 0.5 * a.grid.freq(k).powi(2)) * (x.conj() * y).re)
        .collect();
    dx * pairwise_sum(&terms) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizeConfig {
    pub max_iters: usize,
    /// Stop once an accepted step gains less than this, relatively.
    pub tol: f64,
    /// Multiplies the spectral weight (noise amplitude squared).
    pub weight_scale: f64,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-13,
            weight_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub hurst: f64,
    pub energy: f64,
    pub g: GridFunction,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub initial_energy: f64,
    pub init: GridFunction,
    /// Accepted energies, starting with the initial one.
    pub trace: Vec<f64>,
    pub stalled: bool,
    /// Upper bound on the energy beyond the resolved band.
    pub tail_bound: f64,
    pub config: MaximizeConfig,
}

/// Exported solution summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    #[serde(rename = "H")]
    pub hurst: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub tail_bound: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub stalled: bool,
    pub n: usize,
    #[serde(rename = "box")]
    pub half_width: f64,
}

impl VariationalSolution {
    pub fn summary(&self) -> SolutionSummary {
        SolutionSummary {
            hurst: self.hurst,
            energy: self.energy,
            tail_bound: self.tail_bound,
            constraint_residual: self.constraint_residual,
            iterations: self.iterations,
            stalled: self.stalled,
            n: self.g.grid.n,
            half_width: 0.5 * self.g.grid.length(),
        }
    }
}

/// `int_{|l| > L} |F g^2|^2 |l|^{1-2H}` is at most `4 ||g||^2 ||g'||^2 / (H L^{2H})`,
/// from `|F g^2(l)| <= 2 ||g|| ||g'|| / |l|`.
pub fn tail_bound(g: &GridFunction, hurst: f64, scale: f64) -> f64 {
    let lam = (g.grid.n as f64 / 2.0 - 0.5) * g.grid.freq_step();
    4.0 * scale * g.l2_norm().powi(2) * derivative_norm_sq(g) / (hurst * lam.powf(2.0 * hurst))
}

/// Standard Gaussian bump of the given width, projected.
pub fn gaussian_init(grid: &GridSpec, width: f64) -> Result<GridFunction> {
    project(&GridFunction::from_fn(*grid, |x| (-0.5 * (x / width).powi(2)).exp()))
}

/// Projected gradient ascent in the constraint metric: `g + s r`, projected,
/// where `r = M^{-1} grad - 4 E g` is the tangent gradient.
///
/// The step is capped at `s = 1 / (4E)`, where the update becomes the
/// fixed-point map `g <- M^{-1} grad / 4E`; beyond it, components the
/// gradient does not act on are multiplied by `1 - 4 E s < 0`.
pub fn maximize(hurst: f64, init: &GridFunction, cfg: &MaximizeConfig) -> Result<VariationalSolution> {
    check_hurst(hurst)?;
    if !(cfg.weight_scale > 0.0) {
        return Err(Error::Domain(format!("weight scale {} must be positive", cfg.weight_scale)));
    }
    check_decay(init)?;
    let obj = Objective::new(hurst, &init.grid, cfg.weight_scale);
    let mut g = project(init)?;
    let mut e = obj.energy(&g);
    let e0 = e;
    let mut trace = vec![e];
    // step as a fraction of the cap
    let mut frac: f64 = 1.0;
    let mut stalled = true;
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let grad = obj.gradient(&g);
        let r = precondition(&grad).combine(1.0, &g, -4.0 * e)?;
        if !(metric_inner(&r, &r) > 1e-300) {
            stalled = false;
            break;
        }
        let cap = 1.0 / (4.0 * e);
        let mut accepted = None;
        while frac > 1e-15 {
            let trial = project(&g.combine(1.0, &r, frac * cap)?)?;
            let et = obj.energy(&trial);
            if et > e {
                accepted = Some((trial, et));
                break;
            }
            frac *= 0.5;
        }
        let Some((trial, et)) = accepted else {
            break;
        };
        let gain = (et - e) / e;
        g = trial;
        e = et;
        trace.push(e);
        frac = (2.0 * frac).min(1.0);
        if gain < cfg.tol {
            stalled = false;
            break;
        }
    }
    if stalled {
        log::warn!("variational ascent stopped after {iters} iterations without meeting tol");
    }
    check_decay(&g)?;
    Ok(VariationalSolution {
        hurst,
        energy: e,
        constraint_residual: (constraint(&g) - 1.0).abs(),
        iterations: iters,
        initial_energy: e0,
        init: init.clone(),
        trace,
        stalled,
        tail_bound: tail_bound(&g, hurst, cfg.weight_scale),
        g,
        config: *cfg,
    })
}

/// Re-run the maximization with the weight multiplied by `p^2` and return
/// `|E_p - p^2 E| / (p^2 E)`.
pub fn amplitude_scaling_check(solution: &VariationalSolution, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Domain(format!("p = {p} must be positive")));
    }
    let cfg = MaximizeConfig {
        weight_scale: solution.config.weight_scale * p * p,
        ..solution.config
    };
    let again = maximize(solution.hurst, &solution.init, &cfg)?;
    let target = p * p * solution.energy;
    Ok((again.energy - target).abs() / target)
}

/// `(2 c_H E)^{1/(1+H)}`.
pub fn predicted_constant(hurst: f64, c_h: f64, e: f64) -> Result<f64> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(Error::Domain(format!("E = {e} must be positive")));
    }
    if !(c_h > 0.0) {
        return Err(Error::Domain(format!("cH = {c_h} must be positive")));
    }
    Ok((2.0 * c_h * e).powf(1.0 / (1.0 + hurst)))
}

/// For `g_hat = g / ||g||`: the energy of `g_hat` and the explicit bound
/// `1/(1-H) + 4 ||g_hat'||^2 / H`.
pub fn energy_bound(g: &GridFunction, hurst: f64) -> Result<(f64, f64)> {
    let n2 = g.l2_norm().powi(2);
    if !(n2 > 0.0) {
        return Err(Error::Domain("zero function".into()));
    }
    let gh = g.scaled(1.0 / n2.sqrt());
    let e = energy(&gh, hurst)?;
    Ok((e, 1.0 / (1.0 - hurst) + 4.0 * derivative_norm_sq(&gh) / hurst))
}

/// Maximize on boxes of growing size until the energy changes by less than
/// `rel` between doublings.
pub fn maximize_exhausting(
    hurst: f64,
    half_width: f64,
    dx: f64,
    cfg: &MaximizeConfig,
    rel: f64,
    max_doublings: usize,
) -> Result<Vec<VariationalSolution>> {
    let mut out: Vec<VariationalSolution> = Vec::new();
    let mut hw = half_width;
    for _ in 0..=max_doublings {
        let n = ((2.0 * hw / dx).round() as usize).next_power_of_two();
        let grid = GridSpec::centered(hw, n)?;
        let init = gaussian_init(&grid, 1.0)?;
        let s = maximize(hurst, &init, cfg)?;
        let done = out
            .last()
            .map(|p| (s.energy - p.energy).abs() <= rel * s.energy)
            .unwrap_or(false);
        out.push(s);
        if done {
            break;
        }
        hw *= 2.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_the_density() {
        let g = GridSpec::centered(4.0, 64).unwrap();
        let w = weights(0.3, &g, 1.0);
        // the lattice tiles (-n/2 - 1/2, n/2 - 1/2) cells; symmetric part
        let top = (g.n as f64 / 2.0 - 0.5) * g.freq_step();
        let sym: f64 = w.iter().sum::<f64>() - w[g.n / 2];
        assert!((sym - 2.0 * power_mass(0.3, 0.0, top)).abs() < 1e-10 * sym);
    }

    #[test]
    fn constraint_of_gaussian() {
        // ||g||^2 = sqrt(pi) s, ||g'||^2 = sqrt(pi) / (2 s) for exp(-x^2 / (2 s^2))
        let g = GridSpec::centered(20.0, 1024).unwrap();
        let s = 1.3;
        let f = GridFunction::from_fn(g, |x| (-0.5 * (x / s).powi(2)).exp());
        let exact = std::f64::consts::PI.sqrt() * (s + 0.25 / s);
        assert!((constraint(&f) - exact).abs() < 1e-12 * exact);
    }
}
