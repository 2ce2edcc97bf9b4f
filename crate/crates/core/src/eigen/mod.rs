//! Principal eigenvalue of `H = ½Δ + W^eps` on `Q_t = (-t, t)` with
//! Dirichlet boundary.
//!
//! The operator is the second-order finite-difference Laplacian on the `m`
//! interior points `x_i = -t + i h`, `h = 2t/(m+1)`, plus the sampled
//! potential. It is symmetric tridiagonal with constant off-diagonal
//! `1/(2h^2)`, so its top eigenvector is a Perron vector: the solvers below
//! all finish with inverse iteration on `sigma - H`, an M-matrix, which keeps
//! the computed ground state entrywise positive.

mod sweep;
pub mod tridiag;

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_forward, GridFunction, GridSpec};
use crate::noise::{FieldSource, MollifiedField};

pub use sweep::{
    growth_sweep, nested_ladder, refine_until_stable, rerun_cell, NestedLadder, SweepConfig, SweepMode,
};

/// Above this size `Method::Auto` picks Lanczos.
pub const DENSE_LIMIT: usize = 2000;
/// Largest `m` the QL fallback is allowed to take on.
pub const DENSE_FALLBACK_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub half_width: f64,
    pub m: usize,
}

impl BoxDomain {
    pub fn new(half_width: f64, m: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("box half-width {half_width} must be positive")));
        }
        if m < 3 {
            return Err(Error::Domain(format!("need at least 3 interior points, got {m}")));
        }
        Ok(Self { half_width, m })
    }

    /// Box with spacing as close to `h` as an integer point count allows.
    pub fn with_spacing(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("spacing {h} must be positive")));
        }
        let m = ((2.0 * half_width / h).round() as usize).saturating_sub(1);
        Self::new(half_width, m)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.m + 1) as f64
    }

    /// Interior point `i = 0..m`, i.e. `-t + (i+1) h`.
    pub fn point(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.h()
    }

    /// The `m` interior points as a grid.
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            x_min: -self.half_width + self.h(),
            x_max: self.half_width,
            n: self.m,
        }
    }

    /// Interior points plus both endpoints.
    pub fn closed_grid(&self) -> GridSpec {
        GridSpec {
            x_min: -self.half_width,
            x_max: self.half_width + self.h(),
            n: self.m + 2,
        }
    }
}

/// Potential at the box points. Points that fall on field nodes are read
/// directly, the rest by local cubic interpolation.
pub fn sample_potential(field: &MollifiedField, domain: &BoxDomain) -> Result<Vec<f64>> {
    let g = field.grid();
    let (a, b) = g.interior();
    let t = domain.half_width;
    if -t < a - 1e-12 * t || t > b + 1e-12 * t {
        return Err(Error::Truncation(format!(
            "box (-{t}, {t}) exceeds the field window [{a}, {b}]"
        )));
    }
    if g.dx() > domain.h() * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!(
            "field spacing {} is coarser than the box spacing {}",
            g.dx(),
            domain.h()
        )));
    }
    let dx = g.dx();
    Ok((0..domain.m)
        .map(|i| {
            let x = domain.point(i);
            let s = (x - g.x_min) / dx;
            let j = s.round();
            if (s - j).abs() < 1e-9 {
                field.samples.values[(j as i64).rem_euclid(g.n as i64) as usize]
            } else {
                field.samples.interpolate(x)
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianOp {
    pub domain: BoxDomain,
    /// Potential at the interior points.
    pub potential: Vec<f64>,
    pub source: Option<FieldSource>,
    pub epsilon: f64,
}

impl HamiltonianOp {
    pub fn from_potential(domain: BoxDomain, potential: Vec<f64>) -> Result<Self> {
        if potential.len() != domain.m {
            return Err(Error::Shape(format!("{} potential values for m = {}", potential.len(), domain.m)));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite potential".into()));
        }
        Ok(Self {
            domain,
            potential,
            source: None,
            epsilon: 0.0,
        })
    }

    pub fn m(&self) -> usize {
        self.domain.m
    }

    pub fn diag(&self) -> Vec<f64> {
        let h = self.domain.h();
        self.potential.iter().map(|v| v - 1.0 / (h * h)).collect()
    }

    pub fn offdiag_value(&self) -> f64 {
        let h = self.domain.h();
        0.5 / (h * h)
    }

    pub fn offdiag(&self) -> Vec<f64> {
        vec![self.offdiag_value(); self.m() - 1]
    }

    /// `H + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            potential: self.potential.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.m();
        let h = self.domain.h();
        let (dd, o) = (1.0 / (h * h), 0.5 / (h * h));
        for i in 0..m {
            let mut s = (self.potential[i] - dd) * x[i];
            if i > 0 {
                s += o * x[i - 1];
            }
            if i + 1 < m {
                s += o * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Row-major dense copy; for oracles.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.m();
        let d = self.diag();
        let o = self.offdiag_value();
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            a[i * m + i] = d[i];
            if i + 1 < m {
                a[i * m + i + 1] = o;
                a[(i + 1) * m + i] = o;
            }
        }
        a
    }

    /// `x^T H x` for a plain vector.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        dot(x, &y)
    }

    fn norm_bound(&self) -> f64 {
        let h = self.domain.h();
        2.0 / (h * h) + self.potential.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Discretize `½Δ + W^eps` on the box.
pub fn assemble(field: &MollifiedField, domain: &BoxDomain) -> Result<HamiltonianOp> {
    let potential = sample_potential(field, domain)?;
    Ok(HamiltonianOp {
        domain: *domain,
        potential,
        source: field.source,
        epsilon: field.epsilon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dense below [`DENSE_LIMIT`], Lanczos above.
    Auto,
    Dense,
    Lanczos,
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    Lanczos,
    Bisection,
    Ascent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda: f64,
    /// Ground state on the interior points, `h sum g^2 = 1`, positive.
    pub eigfun: GridFunction,
    pub solver: SolverKind,
    /// `‖H v - lambda v‖_2` for the unit coefficient vector `v`.
    pub residual: f64,
    pub iterations: usize,
    /// Ascent only: stopped on the stall rule before reaching tolerance.
    pub stalled: bool,
    /// Ascent only: objective after the start and after every accepted step.
    pub trace: Vec<f64>,
}

impl EigenResult {
    pub fn residual_ok(&self) -> bool {
        self.residual <= 1e-8 * self.lambda.abs().max(1.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
    n
}

fn residual(op: &HamiltonianOp, v: &[f64], lambda: f64) -> f64 {
    let mut y = vec![0.0; v.len()];
    op.apply(v, &mut y);
    y.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// Ground-state vector for an accurate top eigenvalue, by inverse iteration
/// on `sigma - H` with `sigma` just above the spectrum. Starting from the
/// positive constant vector every iterate is positive.
fn perron_vector(op: &HamiltonianOp, lambda: f64) -> Result<(Vec<f64>, f64)> {
    let diag = op.diag();
    let off = op.offdiag();
    let mut delta = 1e-10 * lambda.abs().max(1.0) + 16.0 * f64::EPSILON * op.norm_bound();
    let piv = loop {
        if let Some(p) = tridiag::factor_above(&diag, &off, lambda + delta) {
            break p;
        }
        delta *= 10.0;
        if delta > op.norm_bound() {
            return Err(Error::NoConvergence("could not shift above the spectrum".into()));
        }
    };
    let mut v = vec![1.0; op.m()];
    normalize(&mut v);
    let mut best = (v.clone(), f64::INFINITY);
    for _ in 0..60 {
        tridiag::solve_above(&off, &piv, &mut v);
        normalize(&mut v);
        let r = residual(op, &v, lambda);
        if r < best.1 {
            best = (v.clone(), r);
        } else {
            break;
        }
    }
    Ok(best)
}

fn finish(op: &HamiltonianOp, lambda: f64, solver: SolverKind, iterations: usize) -> Result<EigenResult> {
    let (v, res) = perron_vector(op, lambda)?;
    let scale = 1.0 / op.domain.h().sqrt();
    Ok(EigenResult {
        lambda,
        eigfun: GridFunction {
            grid: op.domain.grid(),
            values: v.iter().map(|x| x * scale).collect(),
        },
        solver,
        residual: res,
        iterations,
        stalled: false,
        trace: Vec::new(),
    })
}

fn dense_top(op: &HamiltonianOp) -> Result<f64> {
    let ev = tridiag::ql_eigenvalues(&op.diag(), &op.offdiag())?;
    Ok(ev.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Shift-invert Lanczos with full reorthogonalization: the top eigenvalue of
/// `H` is the top eigenvalue of `(sigma - H)^{-1}` for `sigma` above the
/// Gershgorin bound. Returns the eigenvalue and the iteration count.
fn lanczos_top(op: &HamiltonianOp, max_iter: usize) -> Result<(f64, usize)> {
    let m = op.m();
    let diag = op.diag();
    let off = op.offdiag();
    let (_, hi) = tridiag::gershgorin(&diag, &off);
    let sigma = hi + 1.0;
    let piv = tridiag::factor_above(&diag, &off, sigma)
        .ok_or_else(|| Error::NoConvergence("Lanczos shift is not above the spectrum".into()))?;
    let k_max = max_iter.min(m);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    let mut alpha = Vec::with_capacity(k_max);
    let mut beta: Vec<f64> = Vec::with_capacity(k_max);
    let mut v = vec![1.0; m];
    normalize(&mut v);
    let mut theta_prev = f64::NAN;
    let mut stable = 0;
    for j in 0..k_max {
        let mut w = v.clone();
        tridiag::solve_above(&off, &piv, &mut w);
        let a = dot(&v, &w);
        alpha.push(a);
        q.push(v);
        for _ in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                w.iter_mut().zip(qi).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let (theta, _) = tridiag::top_by_bisection(&alpha, &beta);
        if (theta - theta_prev).abs() <= 1e-15 * theta.abs() {
            stable += 1;
        } else {
            stable = 0;
        }
        theta_prev = theta;
        if stable >= 2 || b <= 1e-14 * theta.abs() || j + 1 == m {
            return Ok((sigma - 1.0 / theta, j + 1));
        }
        beta.push(b);
        v = w.iter().map(|x| x / b).collect();
    }
    Err(Error::NoConvergence(format!("Lanczos did not settle in {k_max} steps")))
}

/// Largest eigenvalue and ground state.
pub fn principal_eigenvalue(op: &HamiltonianOp, method: Method) -> Result<EigenResult> {
    let method = match method {
        Method::Auto if op.m() > DENSE_LIMIT => Method::Lanczos,
        Method::Auto => Method::Dense,
        m => m,
    };
    match method {
        Method::Dense => finish(op, dense_top(op)?, SolverKind::Dense, 0),
        Method::Bisection => {
            let (l, it) = tridiag::top_by_bisection(&op.diag(), &op.offdiag());
            finish(op, l, SolverKind::Bisection, it)
        }
        Method::Lanczos => match lanczos_top(op, 500) {
            Ok((l, it)) => finish(op, l, SolverKind::Lanczos, it),
            Err(e) if op.m() <= DENSE_FALLBACK_LIMIT => {
                let _ = e;
                finish(op, dense_top(op)?, SolverKind::Dense, 0)
            }
            Err(e) => Err(e),
        },
        Method::Auto => unreachable!(),
    }
}

/// Box-grid coefficients of a trial function given on the interior or the
/// closed grid of `domain`.
fn interior_values(g: &GridFunction, domain: &BoxDomain) -> Result<Vec<f64>> {
    let close = |a: &GridSpec, b: &GridSpec| {
        a.n == b.n && (a.x_min - b.x_min).abs() <= 1e-9 * domain.half_width && (a.x_max - b.x_max).abs() <= 1e-9 * domain.half_width
    };
    if close(&g.grid, &domain.grid()) {
        Ok(g.values.clone())
    } else if close(&g.grid, &domain.closed_grid()) {
        let (a, b) = (g.values[0], g.values[g.len() - 1]);
        if a.abs() > 1e-6 || b.abs() > 1e-6 {
            return Err(Error::Domain(format!("trial function is {a}, {b} at the box edges")));
        }
        Ok(g.values[1..g.len() - 1].to_vec())
    } else {
        Err(Error::Shape("trial function is not on the box grid".into()))
    }
}

/// Unit-normalize in `h sum g^2`; warns when the input was off by > 1e-8.
fn unit(values: &mut [f64], h: f64) -> Result<()> {
    let n2 = h * dot(values, values);
    if !(n2 > 0.0) {
        return Err(Error::Domain("trial function is zero".into()));
    }
    if (n2.sqrt() - 1.0).abs() > 1e-8 {
        log::warn!("trial function has norm {}; normalizing", n2.sqrt());
    }
    let s = n2.sqrt();
    values.iter_mut().for_each(|v| *v /= s);
    Ok(())
}

/// `int |g'|^2` from the sine series of `g` (spectral accuracy).
pub fn dirichlet_energy_spectral(values: &[f64], domain: &BoxDomain) -> f64 {
    let m = values.len();
    let n = 2 * (m + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, &v) in values.iter().enumerate() {
        buf[j + 1] = Complex64::new(v, 0.0);
        buf[n - j - 1] = Complex64::new(-v, 0.0);
    }
    fft_forward(&mut buf);
    let t = domain.half_width;
    (1..=m)
        .map(|k| {
            let b = -buf[k].im / (m + 1) as f64;
            let w = k as f64 * PI / (2.0 * t);
            b * b * w * w * t
        })
        .sum()
}

/// `W^eps(g^2) - ½ int |g'|^2` with a spectral derivative.
pub fn rayleigh_quotient(g: &GridFunction, field: &MollifiedField, domain: &BoxDomain) -> Result<f64> {
    let mut v = interior_values(g, domain)?;
    let h = domain.h();
    unit(&mut v, h)?;
    let pot = sample_potential(field, domain)?;
    let w: f64 = h * v.iter().zip(&pot).map(|(g, p)| g * g * p).sum::<f64>();
    Ok(w - 0.5 * dirichlet_energy_spectral(&v, domain))
}

/// The same functional with the difference quotient of the assembled
/// operator, i.e. `h g^T H g`. Its maximum is exactly the computed eigenvalue.
pub fn rayleigh_quotient_fd(g: &GridFunction, op: &HamiltonianOp) -> Result<f64> {
    let mut v = interior_values(g, &op.domain)?;
    let h = op.domain.h();
    unit(&mut v, h)?;
    Ok(h * op.quadratic_form(&v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub steps: usize,
    /// Initial trial step of the backtracking line search.
    pub lr: f64,
    /// Stop when `‖H v - R(v) v‖ ≤ tol·max(1, |R|)`. Then `R(v)` is within
    /// that distance of an eigenvalue; tighter targets are not reachable by
    /// objective gains alone when wells are nearly degenerate.
    pub tol: f64,
}

impl AscentConfig {
    pub fn new(steps: usize, lr: f64) -> Self {
        Self { steps, lr, tol: 1e-6 }
    }
}

/// Preconditioned projected gradient ascent of the Rayleigh functional on
/// the unit sphere. The search direction is the tangential gradient passed
/// through `(s - ½Δ_h)^{-1}`; steps are accepted only when the objective
/// does not decrease, halving the trial step until it does. Returns the
/// best iterate.
pub fn ascend(op: &HamiltonianOp, init: &[f64], cfg: &AscentConfig) -> Result<EigenResult> {
    let m = op.m();
    if init.len() != m {
        return Err(Error::Shape(format!("init has {} values for m = {m}", init.len())));
    }
    if !(cfg.lr > 0.0) || cfg.steps == 0 {
        return Err(Error::Domain("ascent needs lr > 0 and steps ≥ 1".into()));
    }
    let h = op.domain.h();
    // preconditioner: sigma I - (½Δ_h + c) with c = max V, sigma = c + spread + 1
    let vmax = op.potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let vmin = op.potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let pd: Vec<f64> = vec![-1.0 / (h * h); m];
    let off = op.offdiag();
    let piv = tridiag::factor_above(&pd, &off, (vmax - vmin) + 1.0).expect("Laplacian is negative definite");

    let mut g = init.to_vec();
    if !(dot(&g, &g) > 0.0) {
        return Err(Error::Domain("initial iterate is zero".into()));
    }
    normalize(&mut g);
    let mut hg = vec![0.0; m];
    op.apply(&g, &mut hg);
    // `rho` is g^T H g recomputed each step; `level` accumulates the exact
    // increments, which stay resolvable long after rho stops changing in
    // the last bit.
    let mut rho = dot(&g, &hg);
    let mut level = rho;
    let mut trace = vec![level];
    let mut step = cfg.lr;
    let mut small_gain = 0;
    let mut stalled = false;
    let mut it = 0;
    let mut hd = vec![0.0; m];
    while it < cfg.steps {
        let r: Vec<f64> = hg.iter().zip(&g).map(|(a, b)| a - rho * b).collect();
        if dot(&r, &r).sqrt() <= cfg.tol * rho.abs().max(1.0) {
            break;
        }
        it += 1;
        let mut d = r.clone();
        tridiag::solve_above(&off, &piv, &mut d);
        let c = dot(&g, &d);
        d.iter_mut().zip(&g).for_each(|(x, y)| *x -= c * y);
        let dn = dot(&d, &d).sqrt();
        if !(dn > 0.0) {
            break;
        }
        d.iter_mut().for_each(|x| *x /= dn);
        // on the circle g(tau) = (g + tau d)/sqrt(1 + tau^2), d ⟂ g unit:
        // R(tau) - R(0) = (2 tau r.d + tau^2 (d^T H d - rho)) / (1 + tau^2)
        op.apply(&d, &mut hd);
        let rd = dot(&r, &d);
        let curv = dot(&d, &hd) - rho;
        let gain_at = |tau: f64| (2.0 * tau * rd + tau * tau * curv) / (1.0 + tau * tau);
        let mut tau = step;
        let mut accepted = None;
        for _ in 0..60 {
            let gain = gain_at(tau);
            if gain >= 0.0 {
                accepted = Some((tau, gain));
                break;
            }
            tau *= 0.5;
        }
        match accepted {
            Some((tau, gain)) => {
                let s = 1.0 / (1.0 + tau * tau).sqrt();
                g.iter_mut().zip(&d).for_each(|(a, b)| *a = (*a + tau * b) * s);
                hg.iter_mut().zip(&hd).for_each(|(a, b)| *a = (*a + tau * b) * s);
                // re-anchor to the unit sphere against drift
                let nrm = normalize(&mut g);
                hg.iter_mut().for_each(|v| *v /= nrm);
                rho = dot(&g, &hg);
                level += gain;
                trace.push(level);
                step = (tau * 2.0).min(1e3);
                if gain < 1e-12 {
                    small_gain += 1;
                } else {
                    small_gain = 0;
                }
            }
            None => {
                small_gain += 1;
                step = cfg.lr;
            }
        }
        if small_gain >= 50 {
            stalled = true;
            break;
        }
    }
    op.apply(&g, &mut hg);
    rho = dot(&g, &hg);
    let res = hg.iter().zip(&g).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
    // sign convention: positive mass
    if g.iter().sum::<f64>() < 0.0 {
        g.iter_mut().for_each(|v| *v = -*v);
    }
    let scale = 1.0 / h.sqrt();
    Ok(EigenResult {
        lambda: rho,
        eigfun: GridFunction {
            grid: op.domain.grid(),
            values: g.iter().map(|v| v * scale).collect(),
        },
        solver: SolverKind::Ascent,
        residual: res,
        iterations: it,
        stalled,
        trace,
    })
}

/// [`ascend`] on the assembled operator, started from a trial function on
/// the box grid.
pub fn variational_ascent(
    field: &MollifiedField,
    domain: &BoxDomain,
    init: &GridFunction,
    steps: usize,
    lr: f64,
) -> Result<EigenResult> {
    let op = assemble(field, domain)?;
    let v = interior_values(init, domain)?;
    ascend(&op, &v, &AscentConfig::new(steps, lr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledCheck {
    pub h_t: f64,
    /// Direct eigensolve on `Q_t`.
    pub direct: f64,
    /// `h_t^2` times the ascent optimum of the rescaled problem.
    pub rescaled: f64,
    pub gap: f64,
    pub converged: bool,
}

/// `h_t = sqrt(u) (log t)^{1/(2(1+H))}`.
pub fn scaling_coefficient(t: f64, u: f64, hurst: f64) -> Result<f64> {
    if !(t > 1.0) || !(u > 0.0) {
        return Err(Error::Domain(format!("scaling needs t > 1 and u > 0, got t = {t}, u = {u}")));
    }
    Ok(u.sqrt() * t.ln().powf(0.5 / (1.0 + hurst)))
}

/// Compare `lambda(Q_t)` with `h_t^2 sup_g {h_t^{-2} W(g_t^2) - ½‖g'‖^2}`,
/// where `g_t(x) = sqrt(h_t) g(h_t x)` and `g` ranges over the box
/// `Q_{t h_t}`. The right side is the top eigenvalue of
/// `½Δ_y + h_t^{-2} W^eps(y / h_t)` on `Q_{t h_t}`, found by ascent from the
/// sine ground mode. Returns the relative gap.
pub fn scaled_eigen_check(field: &MollifiedField, domain: &BoxDomain, u: f64, hurst: f64) -> Result<ScaledCheck> {
    let h_t = scaling_coefficient(domain.half_width, u, hurst)?;
    let op = assemble(field, domain)?;
    let direct = principal_eigenvalue(&op, Method::Auto)?.lambda;

    let scaled_domain = BoxDomain::new(domain.half_width * h_t, domain.m)?;
    let pot: Vec<f64> = op.potential.iter().map(|v| v / (h_t * h_t)).collect();
    let scaled = HamiltonianOp::from_potential(scaled_domain, pot)?;
    let init: Vec<f64> = (0..domain.m)
        .map(|i| ((i + 1) as f64 * PI / (domain.m + 1) as f64).sin())
        .collect();
    let r = ascend(&scaled, &init, &AscentConfig::new(200_000, 1.0))?;
    let rescaled = h_t * h_t * r.lambda;
    Ok(ScaledCheck {
        h_t,
        direct,
        rescaled,
        gap: (direct - rescaled).abs() / direct.abs().max(1e-300),
        converged: !r.stalled,
    })
}

/// Discrete Dirichlet top eigenvalue of `½Δ_h` on the box.
pub fn discrete_laplacian_top(domain: &BoxDomain) -> f64 {
    let h = domain.h();
    -(1.0 - (PI * h / (2.0 * domain.half_width)).cos()) / (h * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_geometry() {
        let d = BoxDomain::new(1.0, 3).unwrap();
        assert_eq!(d.h(), 0.5);
        assert_eq!(d.point(0), -0.5);
        assert_eq!(d.grid().dx(), 0.5);
        assert_eq!(d.closed_grid().point(0), -1.0);
        assert_eq!(d.closed_grid().point(4), 1.0);
        assert!(BoxDomain::new(1.0, 2).is_err());
        assert!(BoxDomain::new(0.0, 10).is_err());
        assert_eq!(BoxDomain::with_spacing(2.0, 0.25).unwrap().m, 15);
    }

    #[test]
    fn dirichlet_energy_of_sine() {
        let d = BoxDomain::new(2.0, 63).unwrap();
        let v: Vec<f64> = (0..63).map(|i| (3.0 * PI * (d.point(i) + 2.0) / 4.0).sin()).collect();
        // int_{-2}^{2} (3 pi/4)^2 cos^2 = (3 pi / 4)^2 * 2
        let e = dirichlet_energy_spectral(&v, &d);
        assert!((e - (0.75 * PI).powi(2) * 2.0).abs() < 1e-12);
    }
}
