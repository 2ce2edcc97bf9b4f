//! Feynman-Kac Monte Carlo for `u_t(x) = E_x[exp(int_0^t W(B_s) ds)]`.
//!
//! Two estimators are provided. The naive one samples (noise, path) pairs
//! and averages `exp(V)`. The conditional one uses that, given the path,
//! `V` is centred Gaussian with variance
//! `int |int_0^t exp(i xi B_s) ds|^2 mu(d xi)`, and averages
//! `exp(Var / 2)` over paths only.
//!
//! Frequency integrals are cell sums: the nodes are `k * step`, each carrying
//! the exact `mu` mass of its cell. With the field lattice as the node set
//! ([`SpectralRule::for_field`]) this is exactly the variance of the
//! synthesized field, so both estimators target the same number.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{assemble, principal_eigenvalue, BoxDomain, Method};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::noise::{bump_fourier, mollify_with, synthesize, MollifiedField, MollifierSpectrum, NoiseParams};
use crate::par;
use crate::rng::{derive_seed, make_rng};
use crate::stats::{mean, normal_z, pairwise_sum, variance};

/// Largest admissible argument of `exp`.
pub const EXP_GUARD: f64 = 700.0;

/// Below this `|F l|` a lattice node is dropped from the conditional rule.
const FL_FLOOR: f64 = 1e-10;

/// Phase recursions are resynchronized with an exact `exp` this often.
const RESYNC: usize = 128;

/// Brownian path on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub x0: f64,
    pub dt: f64,
    pub positions: Vec<f64>,
    pub seed: u64,
}

impl BrownianPath {
    /// Constant path at `x0` (the `B = 0` limit used by closed-form checks).
    pub fn frozen(x0: f64, horizon: f64, dt: f64) -> Result<Self> {
        let (steps, dt) = time_steps(horizon, dt)?;
        Ok(Self {
            x0,
            dt,
            positions: vec![x0; steps + 1],
            seed: 0,
        })
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.positions.len()).map(|i| self.time(i)).collect()
    }

    /// `sum (B_{i+1} - B_i)^2`.
    pub fn quadratic_variation(&self) -> f64 {
        let d: Vec<f64> = self.positions.windows(2).map(|w| (w[1] - w[0]).powi(2)).collect();
        pairwise_sum(&d)
    }

    /// `max B - min B`.
    pub fn span(&self) -> f64 {
        let (lo, hi) = self
            .positions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)));
        hi - lo
    }

    /// Trapezoid weights on the time grid.
    fn weights(&self) -> Vec<f64> {
        let k = self.steps();
        (0..=k)
            .map(|i| if i == 0 || i == k { 0.5 * self.dt } else { self.dt })
            .collect()
    }
}

fn time_steps(horizon: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt = {dt} must be positive")));
    }
    if !(horizon >= dt * (1.0 - 1e-12) && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} shorter than dt = {dt}")));
    }
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, horizon / steps as f64))
}

/// Brownian path from `x` over `[0, horizon]`. The step is `horizon / K`
/// with `K = ceil(horizon / dt)`, so the path ends exactly at `horizon`.
pub fn sample_path(x: f64, horizon: f64, dt: f64, seed: u64) -> Result<BrownianPath> {
    let (steps, dt) = time_steps(horizon, dt)?;
    let mut rng = make_rng(seed);
    let s = dt.sqrt();
    let mut positions = Vec::with_capacity(steps + 1);
    let mut b = x;
    positions.push(b);
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        b += s * z;
        positions.push(b);
    }
    Ok(BrownianPath { x0: x, dt, positions, seed })
}

/// `int_0^T W^eps(B_r) dr` by the trapezoid rule, with the field read by
/// local cubic interpolation.
pub fn v_eps(path: &BrownianPath, field: &MollifiedField) -> Result<f64> {
    let g = field.grid();
    let w = path.weights();
    let mut terms = Vec::with_capacity(w.len());
    for (i, (&b, wi)) in path.positions.iter().zip(&w).enumerate() {
        if !g.in_interior(b) {
            return Err(Error::PathExit { time: path.time(i) });
        }
        terms.push(wi * field.at(b));
    }
    Ok(pairwise_sum(&terms))
}

/// Frequency nodes `k * step` for `k = k_min ..= k_max`, each standing for
/// the pair of cells at `+-k * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralRule {
    pub step: f64,
    pub k_min: usize,
    pub k_max: usize,
    /// When set, node weights carry `|F l(eps xi)|^2`.
    pub epsilon: Option<f64>,
}

impl SpectralRule {
    /// Cells tiling `[-xi_cut, xi_cut]` exactly, zero cell included, with
    /// spacing at most `max_step`.
    pub fn band(xi_cut: f64, max_step: f64) -> Result<Self> {
        if !(xi_cut > 0.0 && xi_cut.is_finite()) {
            return Err(Error::Domain(format!("xi_cut = {xi_cut} must be positive")));
        }
        if !(max_step > 0.0) {
            return Err(Error::Domain(format!("frequency step {max_step} must be positive")));
        }
        let k_max = (xi_cut / max_step - 0.5).ceil().max(0.0) as usize;
        Ok(Self {
            step: xi_cut / (k_max as f64 + 0.5),
            k_min: 0,
            k_max,
            epsilon: None,
        })
    }

    /// Band rule whose spacing resolves `|int exp(i xi B) ds|^2` along
    /// `path`: that function of `xi` oscillates on the scale `1 / span`.
    pub fn band_for_path(xi_cut: f64, path: &BrownianPath) -> Result<Self> {
        let scale = path.span() + path.horizon().sqrt();
        Self::band(xi_cut, PI / (8.0 * scale))
    }

    /// The lattice of a synthesized field mollified at `epsilon`: nonzero
    /// modes below Nyquist, dropping those where `F l` has died out.
    pub fn for_field(grid: &GridSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
        }
        let step = grid.freq_step();
        let top = grid.n / 2 - 1;
        let mut k_max = 1;
        for k in 1..=top {
            if bump_fourier(epsilon * k as f64 * step).abs() >= FL_FLOOR {
                k_max = k;
            }
            if epsilon * k as f64 * step > 1700.0 {
                break;
            }
        }
        Ok(Self {
            step,
            k_min: 1,
            k_max,
            epsilon: Some(epsilon),
        })
    }

    pub fn len(&self) -> usize {
        self.k_max + 1 - self.k_min
    }

    pub fn is_empty(&self) -> bool {
        self.k_max < self.k_min
    }

    /// Upper edge of the outermost cell.
    pub fn xi_cut(&self) -> f64 {
        (self.k_max as f64 + 0.5) * self.step
    }

    /// Two-sided node weights: `mu` mass of the cells at `+-k * step`,
    /// times `|F l|^2` when a mollifier is attached.
    pub fn weights(&self, params: &NoiseParams) -> Vec<f64> {
        (self.k_min..=self.k_max)
            .map(|k| {
                let m = params.cell_mass(k as i64, self.step);
                let m = if k == 0 { m } else { 2.0 * m };
                match self.epsilon {
                    Some(e) => m * bump_fourier(e * k as f64 * self.step).powi(2),
                    None => m,
                }
            })
            .collect()
    }
}

/// Running transforms `I_j(xi_k) = int_0^{t_j} exp(i xi_k (B_s - x0)) ds`
/// (trapezoid), for every time index `j` when `cumulative`, else only the
/// final one. The phase advances by complex multiplication across nodes.
fn path_transforms(path: &BrownianPath, rule: &SpectralRule, cumulative: bool) -> Vec<Vec<Complex64>> {
    let nk = rule.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = vec![zero; nk];
    let mut out = Vec::with_capacity(if cumulative { path.positions.len() } else { 1 });
    if cumulative {
        out.push(acc.clone());
    }
    let mut prev = vec![zero; nk];
    let mut cur = vec![zero; nk];
    let half = 0.5 * path.dt;
    for (j, &b) in path.positions.iter().enumerate() {
        let y = b - path.x0;
        let z = Complex64::from_polar(1.0, rule.step * y);
        let mut p = zero;
        for (i, c) in cur.iter_mut().enumerate() {
            if i % RESYNC == 0 {
                p = Complex64::from_polar(1.0, (rule.k_min + i) as f64 * rule.step * y);
            }
            *c = p;
            p *= z;
        }
        if j > 0 {
            for ((a, p0), p1) in acc.iter_mut().zip(&prev).zip(&cur) {
                *a += (p0 + p1) * half;
            }
            if cumulative {
                out.push(acc.clone());
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    if !cumulative {
        out.push(acc);
    }
    out
}

fn weighted_energy(weights: &[f64], values: &[Complex64]) -> f64 {
    let terms: Vec<f64> = weights.iter().zip(values).map(|(w, v)| w * v.norm_sqr()).collect();
    pairwise_sum(&terms)
}

/// `int_{|xi| <= xi_cut} |int_0^T exp(i xi B_s) ds|^2 mu(d xi)` with a band
/// rule adapted to the path.
pub fn conditional_variance(path: &BrownianPath, params: &NoiseParams, xi_cut: f64) -> Result<f64> {
    let rule = SpectralRule::band_for_path(xi_cut, path)?;
    Ok(conditional_variance_with(path, params, &rule))
}

/// Conditional variance on an explicit node set.
pub fn conditional_variance_with(path: &BrownianPath, params: &NoiseParams, rule: &SpectralRule) -> f64 {
    let w = rule.weights(params);
    let t = path_transforms(path, rule, false);
    weighted_energy(&w, &t[0])
}

/// `Z_t = t^{-1} int |int_0^t exp(i l B_u) du|^2 mu(dl)` along one path, at
/// every grid time.
#[derive(Debug, Clone)]
pub struct ZSample {
    pub horizon: f64,
    pub times: Vec<f64>,
    /// `Z` at each grid time; `Z_0 = 0`.
    pub values: Vec<f64>,
    pub xi_cut: f64,
    pub rule: SpectralRule,
    weights: Vec<f64>,
    prefix: Vec<Vec<Complex64>>,
}

impl ZSample {
    /// `Z'` over the window `[t_a, t_b]`: the same functional for the path
    /// restarted at `t_a`.
    pub fn window(&self, a: usize, b: usize) -> f64 {
        assert!(a < b && b < self.times.len(), "window [{a}, {b}] out of range");
        let d: Vec<Complex64> = self.prefix[b].iter().zip(&self.prefix[a]).map(|(x, y)| x - y).collect();
        weighted_energy(&self.weights, &d) / (self.times[b] - self.times[a])
    }

    /// `max_{s <= t} Z_s` at each grid time.
    pub fn running_max(&self) -> Vec<f64> {
        self.values
            .iter()
            .scan(0.0f64, |m, &z| {
                *m = m.max(z);
                Some(*m)
            })
            .collect()
    }
}

pub fn z_functional(path: &BrownianPath, params: &NoiseParams, xi_cut: f64) -> Result<ZSample> {
    let rule = SpectralRule::band_for_path(xi_cut, path)?;
    let weights = rule.weights(params);
    let prefix = path_transforms(path, &rule, true);
    let times = path.times();
    let values = prefix
        .iter()
        .zip(&times)
        .map(|(p, &t)| if t > 0.0 { weighted_energy(&weights, p) / t } else { 0.0 })
        .collect();
    Ok(ZSample {
        horizon: path.horizon(),
        times,
        values,
        xi_cut: rule.xi_cut(),
        rule,
        weights,
        prefix,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Naive,
    Conditional,
    /// Paths only, one given field.
    FixedNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FkEstimate {
    pub variant: Variant,
    pub t: f64,
    pub x: f64,
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    #[serde(rename = "cH")]
    pub c_h: Option<f64>,
    pub epsilon: Option<f64>,
    pub xi_cut: Option<f64>,
    pub dt: f64,
    pub n_paths: usize,
    pub n_noise: Option<usize>,
    pub mean: f64,
    pub stderr: f64,
    /// Variance of the per-sample statistic (`exp(V)` or `exp(Var/2)`).
    pub sample_variance: f64,
    pub seed: u64,
    pub seed_schedule: String,
}

impl FkEstimate {
    /// Two-sided normal interval.
    pub fn interval(&self, confidence: f64) -> (f64, f64) {
        let z = normal_z(confidence);
        (self.mean - z * self.stderr, self.mean + z * self.stderr)
    }

    pub fn overlaps(&self, other: &FkEstimate, confidence: f64) -> bool {
        let (a0, a1) = self.interval(confidence);
        let (b0, b1) = other.interval(confidence);
        a0 <= b1 && b0 <= a1
    }
}

fn guarded_exp(arg: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if arg > EXP_GUARD || !arg.is_finite() {
        return Err(Error::Overflow(format!("exp({arg}) at {}", what())));
    }
    Ok(arg.exp())
}

fn check_budget(name: &str, n: usize) -> Result<()> {
    if n < 100 {
        return Err(Error::Domain(format!("{name} = {n}; at least 100 required")));
    }
    Ok(())
}

/// Naive estimator settings. `n_paths` paths are drawn for each of the
/// `n_noise` field realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveConfig {
    pub t: f64,
    pub x: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub n_noise: usize,
    pub params: NoiseParams,
    pub grid: GridSpec,
    /// Replace every realization by the zero field.
    pub zero_noise: bool,
}

/// Seed of noise realization `i` under global seed `s`.
pub fn naive_noise_seed(s: u64, i: u64) -> u64 {
    derive_seed(s, &[0, i])
}

/// Seed of path `p` paired with noise realization `i`.
pub fn naive_path_seed(s: u64, i: u64, p: u64) -> u64 {
    derive_seed(s, &[1, i, p])
}

pub fn conditional_path_seed(s: u64, p: u64) -> u64 {
    derive_seed(s, &[2, p])
}

pub fn fixed_path_seed(s: u64, p: u64) -> u64 {
    derive_seed(s, &[3, p])
}

/// Double Monte Carlo over (noise, path) pairs. The standard error uses
/// batch means over noise realizations, since paths sharing a field are
/// correlated.
pub fn u_fk_naive(cfg: &NaiveConfig) -> Result<FkEstimate> {
    check_budget("n_paths", cfg.n_paths)?;
    check_budget("n_noise", cfg.n_noise)?;
    let (_, dt) = time_steps(cfg.t, cfg.dt)?;
    let spec = if cfg.zero_noise {
        None
    } else {
        Some(MollifierSpectrum::new(cfg.epsilon, &cfg.grid)?)
    };
    let s = cfg.params.seed;
    let ids: Vec<u64> = (0..cfg.n_noise as u64).collect();
    let batches = par::map(&ids, |&i| -> Result<Vec<f64>> {
        let noise_seed = naive_noise_seed(s, i);
        let field = match &spec {
            None => MollifiedField::zero(cfg.grid),
            Some(spec) => mollify_with(&synthesize(&cfg.params.with_seed(noise_seed), &cfg.grid), spec)?,
        };
        (0..cfg.n_paths as u64)
            .map(|p| {
                let path_seed = naive_path_seed(s, i, p);
                let path = sample_path(cfg.x, cfg.t, cfg.dt, path_seed)?;
                let v = v_eps(&path, &field)?;
                guarded_exp(v, || format!("noise seed {noise_seed}, path seed {path_seed}"))
            })
            .collect()
    });
    let batches = batches.into_iter().collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = batches.iter().map(|b| mean(b)).collect();
    let all: Vec<f64> = batches.concat();
    Ok(FkEstimate {
        variant: Variant::Naive,
        t: cfg.t,
        x: cfg.x,
        hurst: Some(cfg.params.hurst),
        c_h: Some(cfg.params.c_h),
        epsilon: Some(cfg.epsilon),
        xi_cut: Some(cfg.grid.nyquist()),
        dt,
        n_paths: cfg.n_paths,
        n_noise: Some(cfg.n_noise),
        mean: mean(&means),
        stderr: (variance(&means) / means.len() as f64).sqrt(),
        sample_variance: variance(&all),
        seed: s,
        seed_schedule: "noise i: derive_seed(seed, [0, i]); path (i, p): derive_seed(seed, [1, i, p])".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalConfig {
    pub t: f64,
    pub x: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub params: NoiseParams,
    pub rule: SpectralRule,
}

/// Conditional estimator on the band `|xi| <= xi_cut` (no mollifier), with
/// the node spacing adapted to each path.
pub fn u_fk_conditional(
    t: f64,
    x: f64,
    n_paths: usize,
    params: &NoiseParams,
    xi_cut: f64,
    dt: f64,
) -> Result<FkEstimate> {
    check_budget("n_paths", n_paths)?;
    SpectralRule::band(xi_cut, 1.0)?;
    conditional_impl(t, x, dt, n_paths, params, xi_cut, None, |path| {
        SpectralRule::band_for_path(xi_cut, path)
    })
}

/// Conditional estimator on a fixed node set, e.g. the lattice of a field
/// grid via [`SpectralRule::for_field`].
pub fn u_fk_conditional_with(cfg: &ConditionalConfig) -> Result<FkEstimate> {
    check_budget("n_paths", cfg.n_paths)?;
    let rule = cfg.rule;
    conditional_impl(
        cfg.t,
        cfg.x,
        cfg.dt,
        cfg.n_paths,
        &cfg.params,
        rule.xi_cut(),
        rule.epsilon,
        |_| Ok(rule),
    )
}

#[allow(clippy::too_many_arguments)]
fn conditional_impl(
    t: f64,
    x: f64,
    dt: f64,
    n_paths: usize,
    params: &NoiseParams,
    xi_cut: f64,
    epsilon: Option<f64>,
    rule_for: impl Fn(&BrownianPath) -> Result<SpectralRule> + Sync + Send,
) -> Result<FkEstimate> {
    let (_, dt_used) = time_steps(t, dt)?;
    let s = params.seed;
    let ids: Vec<u64> = (0..n_paths as u64).collect();
    let vals = par::map(&ids, |&p| -> Result<f64> {
        let seed = conditional_path_seed(s, p);
        let path = sample_path(x, t, dt, seed)?;
        let rule = rule_for(&path)?;
        let var = conditional_variance_with(&path, params, &rule);
        guarded_exp(0.5 * var, || format!("path seed {seed}"))
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let sv = variance(&vals);
    Ok(FkEstimate {
        variant: Variant::Conditional,
        t,
        x,
        hurst: Some(params.hurst),
        c_h: Some(params.c_h),
        epsilon,
        xi_cut: Some(xi_cut),
        dt: dt_used,
        n_paths,
        n_noise: None,
        mean: mean(&vals),
        stderr: (sv / n_paths as f64).sqrt(),
        sample_variance: sv,
        seed: s,
        seed_schedule: "path p: derive_seed(seed, [2, p])".into(),
    })
}

/// Path average of `exp(V)` for one given field.
pub fn u_fk_fixed(field: &MollifiedField, t: f64, x: f64, n_paths: usize, dt: f64, seed: u64) -> Result<FkEstimate> {
    check_budget("n_paths", n_paths)?;
    let (_, dt_used) = time_steps(t, dt)?;
    let ids: Vec<u64> = (0..n_paths as u64).collect();
    let vals = par::map(&ids, |&p| -> Result<f64> {
        let ps = fixed_path_seed(seed, p);
        let v = v_eps(&sample_path(x, t, dt, ps)?, field)?;
        guarded_exp(v, || format!("path seed {ps}"))
    });
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let sv = variance(&vals);
    Ok(FkEstimate {
        variant: Variant::FixedNoise,
        t,
        x,
        hurst: field.params().map(|p| p.hurst),
        c_h: field.params().map(|p| p.c_h),
        epsilon: Some(field.epsilon),
        xi_cut: Some(field.grid().nyquist()),
        dt: dt_used,
        n_paths,
        n_noise: None,
        mean: mean(&vals),
        stderr: (sv / n_paths as f64).sqrt(),
        sample_variance: sv,
        seed,
        seed_schedule: "path p: derive_seed(seed, [3, p])".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBudget {
    pub n_paths: usize,
    pub dt: f64,
    /// Mesh of the eigenvalue box.
    pub h: f64,
    pub confidence: f64,
    pub zero_noise: bool,
}

impl Default for RatioBudget {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            dt: 1e-3,
            h: 0.05,
            confidence: 0.95,
            zero_noise: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub t: f64,
    /// Half-width `R` of the eigenvalue box (and of the path window).
    pub box_half_width: f64,
    pub field_n: usize,
    pub epsilon: f64,
    /// `(1/t) log u_t(0)` and its interval.
    pub growth: f64,
    pub growth_ci: (f64, f64),
    pub lambda: f64,
    pub ratio: Option<f64>,
    pub ratio_ci: Option<(f64, f64)>,
    /// Diagnostic: `lambda(Q_t)` on the same realization, when `Q_t` fits in
    /// the window, and the growth rate over it.
    pub lambda_qt: Option<f64>,
    pub ratio_qt: Option<f64>,
    /// Why no ratio was formed.
    pub degenerate: Option<String>,
    pub fk: FkEstimate,
}

/// Box half-width: three times the Brownian range `sqrt(2 t log n)`.
pub fn ratio_box(t: f64, n_paths: usize) -> f64 {
    3.0 * (2.0 * t * (n_paths as f64).ln()).sqrt()
}

/// `(1/t) log u_t(0)` against `lambda(Q_R)` on one shared realization.
pub fn lyapunov_ratio(t: f64, params: &NoiseParams, epsilon: f64, budget: &RatioBudget) -> Result<RatioReport> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    check_budget("n_paths", budget.n_paths)?;
    if !(budget.confidence > 0.0 && budget.confidence < 1.0) {
        return Err(Error::Domain(format!("confidence {} outside (0, 1)", budget.confidence)));
    }
    let r = ratio_box(t, budget.n_paths);
    let dx = (epsilon / 8.0).min(budget.h);
    let n = ((4.0 * r / dx).ceil() as usize).next_power_of_two();
    let grid = GridSpec::centered(2.0 * r, n)?;
    let field = if budget.zero_noise {
        MollifiedField::zero(grid)
    } else {
        let spec = MollifierSpectrum::new(epsilon, &grid)?;
        mollify_with(&synthesize(params, &grid), &spec)?
    };
    let fk = u_fk_fixed(&field, t, 0.0, budget.n_paths, budget.dt, params.seed)?;
    let domain = BoxDomain::with_spacing(r, budget.h)?;
    let lambda = principal_eigenvalue(&assemble(&field, &domain)?, Method::Bisection)?.lambda;
    let lambda_qt = if t <= r {
        let d = BoxDomain::with_spacing(t, budget.h)?;
        Some(principal_eigenvalue(&assemble(&field, &d)?, Method::Bisection)?.lambda)
    } else {
        None
    };

    let (lo, hi) = fk.interval(budget.confidence);
    let growth = fk.mean.ln() / t;
    let growth_ci = (if lo > 0.0 { lo.ln() / t } else { f64::NEG_INFINITY }, hi.ln() / t);
    let degenerate = if budget.zero_noise {
        Some("zero noise: growth is 0 and lambda < 0".to_string())
    } else if lambda <= 0.0 {
        Some(format!("lambda = {lambda} is not positive"))
    } else {
        None
    };
    let (ratio, ratio_ci) = match degenerate {
        None => (Some(growth / lambda), Some((growth_ci.0 / lambda, growth_ci.1 / lambda))),
        Some(_) => (None, None),
    };
    Ok(RatioReport {
        t,
        box_half_width: r,
        field_n: n,
        epsilon,
        growth,
        growth_ci,
        lambda,
        ratio,
        ratio_ci,
        lambda_qt,
        ratio_qt: lambda_qt.filter(|l| degenerate.is_none() && *l > 0.0).map(|l| growth / l),
        degenerate,
        fk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_count_hits_horizon() {
        let p = sample_path(0.0, 1.0, 0.3, 1).unwrap();
        assert_eq!(p.steps(), 4);
        assert!((p.horizon() - 1.0).abs() < 1e-15);
        assert!(sample_path(0.0, 0.1, 0.2, 1).is_err());
        assert!(sample_path(0.0, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn band_rule_tiles_the_band() {
        let r = SpectralRule::band(10.0, 0.3).unwrap();
        assert!(r.step <= 0.3);
        assert!((r.xi_cut() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn phase_recursion_matches_direct_exponentials() {
        let path = sample_path(0.3, 0.5, 0.01, 5).unwrap();
        let rule = SpectralRule::band(400.0, 0.5).unwrap();
        let got = &path_transforms(&path, &rule, false)[0];
        let w = path.weights();
        for (i, g) in got.iter().enumerate().step_by(97) {
            let xi = (rule.k_min + i) as f64 * rule.step;
            let exact: Complex64 = path
                .positions
                .iter()
                .zip(&w)
                .map(|(b, wj)| Complex64::from_polar(*wj, xi * (b - path.x0)))
                .sum();
            assert!((g - exact).norm() < 1e-12, "node {i}");
        }
    }
}
