//! Time stepping of the mollified mild equation
//! `u_t = p_t u_0 + int_0^t p_{t-s}(u_s W^eps) ds` on the periodic box.
//!
//! The heat semigroup is the Fourier multiplier `exp(-t xi^2 / 2)`. The
//! default scheme is Strang splitting
//! `u <- p_{dt/2}[exp(dt W^eps) p_{dt/2} u]`; Lie splitting and a Picard
//! iteration of the mild form are kept as independent checks.

use std::io::Write;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fft_forward, fft_inverse, GridFunction, GridSpec};
use crate::io::TrajectoryData;
use crate::noise::{FieldSource, MollifiedField};

/// Largest `|dt V|` accepted by the multiplicative step.
pub const EXP_GUARD: f64 = 700.0;

/// `p_t f`.
pub fn heat_semigroup(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("negative heat time {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    Ok(f.apply_multiplier(|xi| (-0.5 * t * xi * xi).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Strang,
    Lie,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Keep every `record_every`-th step (the final time is always kept).
    pub record_every: usize,
    /// Iterations when `scheme` is `Picard`.
    pub picard_iters: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            scheme: Scheme::Strang,
            record_every: 1,
            picard_iters: 30,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.horizon >= self.dt) {
            return Err(Error::Domain(format!(
                "need 0 < dt <= T, got dt = {}, T = {}",
                self.dt, self.horizon
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Domain("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Step count and the step actually used (`T / steps`).
    pub fn steps(&self) -> (usize, f64) {
        let k = (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize;
        (k, self.horizon / k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub source: Option<FieldSource>,
    pub epsilon: f64,
    pub scheme: Scheme,
    /// Step actually used.
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.snapshots.last().cloned().unwrap_or_default(),
        }
    }

    pub fn snapshot(&self, i: usize) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.snapshots[i].clone(),
        }
    }

    /// `u(t_last, x)` by local cubic interpolation.
    pub fn value_at(&self, x: f64) -> f64 {
        self.last().interpolate(x)
    }

    pub fn to_data(&self) -> TrajectoryData {
        TrajectoryData {
            grid: self.grid,
            times: self.times.clone(),
            rows: self.snapshots.clone(),
        }
    }

    /// `t,x,u` rows, physical window only.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,u")?;
        for (t, row) in self.times.iter().zip(&self.snapshots) {
            for (j, u) in row.iter().enumerate() {
                let x = self.grid.point(j);
                if self.grid.in_interior(x) {
                    writeln!(w, "{t},{x},{u}")?;
                }
            }
        }
        Ok(())
    }
}

/// Max norm over the physical window; the outer quarters are quarantined.
pub fn window_max_norm(f: &GridFunction) -> f64 {
    let g = f.grid;
    g.points()
        .zip(&f.values)
        .filter(|(x, _)| g.in_interior(*x))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Precomputed spectral multiplier applied in place through a scratch buffer.
struct Propagator {
    mult: Vec<f64>,
    buf: Vec<Complex64>,
}

impl Propagator {
    fn new(grid: &GridSpec, t: f64) -> Self {
        let scale = 1.0 / grid.n as f64;
        Self {
            mult: (0..grid.n).map(|k| scale * (-0.5 * t * grid.freq(k).powi(2)).exp()).collect(),
            buf: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    fn apply(&mut self, u: &mut [f64]) {
        for (b, v) in self.buf.iter_mut().zip(u.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        fft_forward(&mut self.buf);
        for (b, m) in self.buf.iter_mut().zip(&self.mult) {
            *b *= m;
        }
        fft_inverse(&mut self.buf);
        for (v, b) in u.iter_mut().zip(&self.buf) {
            *v = b.re;
        }
    }
}

fn check_inputs(u0: &GridFunction, field: &MollifiedField, dt: f64) -> Result<()> {
    u0.grid.check_same(field.grid())?;
    let vmax = field.samples.max_abs();
    if dt * vmax > EXP_GUARD {
        return Err(Error::Overflow(format!(
            "|dt W^eps| reaches {} > {EXP_GUARD}",
            dt * vmax
        )));
    }
    Ok(())
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("solution left the float range at t = {t}")));
    }
    Ok(())
}

/// Run the configured scheme from `u0` against a fixed potential.
pub fn solve_mild(u0: &GridFunction, field: &MollifiedField, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.scheme == Scheme::Picard {
        let r = picard_iterate(u0, field, cfg.horizon, cfg.picard_iters, cfg.dt)?;
        let mut t = r.trajectory;
        if cfg.record_every > 1 {
            let keep: Vec<usize> = (0..t.times.len())
                .filter(|i| i % cfg.record_every == 0 || *i + 1 == t.times.len())
                .collect();
            t.times = keep.iter().map(|&i| t.times[i]).collect();
            t.snapshots = keep.iter().map(|&i| t.snapshots[i].clone()).collect();
        }
        return Ok(t);
    }
    let (steps, dt) = cfg.steps();
    check_inputs(u0, field, dt)?;
    let grid = u0.grid;
    let growth: Vec<f64> = field.samples.values.iter().map(|v| (dt * v).exp()).collect();
    let mut u = u0.values.clone();
    let mut times = vec![0.0];
    let mut snapshots = vec![u.clone()];
    match cfg.scheme {
        Scheme::Strang => {
            let mut half = Propagator::new(&grid, 0.5 * dt);
            for k in 1..=steps {
                half.apply(&mut u);
                u.iter_mut().zip(&growth).for_each(|(v, e)| *v *= e);
                half.apply(&mut u);
                let t = k as f64 * dt;
                check_finite(&u, t)?;
                if k % cfg.record_every == 0 || k == steps {
                    times.push(t);
                    snapshots.push(u.clone());
                }
            }
        }
        Scheme::Lie => {
            let mut full = Propagator::new(&grid, dt);
            for k in 1..=steps {
                full.apply(&mut u);
                u.iter_mut().zip(&growth).for_each(|(v, e)| *v *= e);
                let t = k as f64 * dt;
                check_finite(&u, t)?;
                if k % cfg.record_every == 0 || k == steps {
                    times.push(t);
                    snapshots.push(u.clone());
                }
            }
        }
        Scheme::Picard => unreachable!(),
    }
    Ok(Trajectory {
        grid,
        times,
        snapshots,
        source: field.source,
        epsilon: field.epsilon,
        scheme: cfg.scheme,
        dt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardResult {
    /// Final iterate at every time step.
    pub trajectory: Trajectory,
    /// `max_{t, x in window} |u^(m+1) - u^(m)|` for each completed iteration.
    pub differences: Vec<f64>,
    /// Max-norm of each iterate over time and window.
    pub norms: Vec<f64>,
    pub iterations: usize,
    /// Iterate norms grew monotonically past `1e6`; iteration stopped.
    pub diverged: bool,
}

/// Iterate `u^(m+1)_t = p_t u0 + int_0^t p_{t-s}(u^(m)_s W^eps) ds` from
/// `u^(0) = u0`. The time integral uses the trapezoid rule on the step
/// grid through the recursion `J_{k+1} = p_dt J_k + dt/2 (p_dt F_k + F_{k+1})`.
pub fn picard_iterate(
    u0: &GridFunction,
    field: &MollifiedField,
    horizon: f64,
    n_iter: usize,
    dt: f64,
) -> Result<PicardResult> {
    if n_iter == 0 {
        return Err(Error::Domain("n_iter must be >= 1".into()));
    }
    let cfg = SolverConfig::new(dt, horizon);
    cfg.validate()?;
    let (steps, dt) = cfg.steps();
    u0.grid.check_same(field.grid())?;
    let grid = u0.grid;
    let v = &field.samples.values;
    let mut prop = Propagator::new(&grid, dt);

    // free evolution p_{t_k} u0
    let mut free = Vec::with_capacity(steps + 1);
    let mut cur = u0.values.clone();
    free.push(cur.clone());
    for _ in 0..steps {
        prop.apply(&mut cur);
        free.push(cur.clone());
    }

    let window: Vec<bool> = grid.points().map(|x| grid.in_interior(x)).collect();
    let sup = |a: &[f64], b: Option<&[f64]>| -> f64 {
        a.iter()
            .enumerate()
            .filter(|(j, _)| window[*j])
            .map(|(j, x)| (x - b.map_or(0.0, |b| b[j])).abs())
            .fold(0.0, f64::max)
    };

    let mut iterate: Vec<Vec<f64>> = vec![u0.values.clone(); steps + 1];
    let mut differences = Vec::new();
    let mut norms = Vec::new();
    let mut diverged = false;
    for _ in 0..n_iter {
        let mut next = Vec::with_capacity(steps + 1);
        let mut j_acc = vec![0.0; grid.n];
        next.push(free[0].clone());
        for k in 0..steps {
            // J <- p_dt (J + dt/2 F_k) + dt/2 F_{k+1}
            for ((a, u), w) in j_acc.iter_mut().zip(&iterate[k]).zip(v) {
                *a += 0.5 * dt * u * w;
            }
            prop.apply(&mut j_acc);
            for ((a, u), w) in j_acc.iter_mut().zip(&iterate[k + 1]).zip(v) {
                *a += 0.5 * dt * u * w;
            }
            next.push(free[k + 1].iter().zip(&j_acc).map(|(f, a)| f + a).collect());
        }
        let diff = next
            .iter()
            .zip(&iterate)
            .map(|(a, b)| sup(a, Some(b)))
            .fold(0.0, f64::max);
        let norm = next.iter().map(|a| sup(a, None)).fold(0.0, f64::max);
        differences.push(diff);
        norms.push(norm);
        iterate = next;
        if !norm.is_finite() {
            return Err(Error::Overflow("Picard iterate left the float range".into()));
        }
        let growing = norms.windows(2).all(|w| w[1] > w[0]);
        if norm > 1e6 && growing {
            diverged = true;
            break;
        }
    }
    let times = (0..=steps).map(|k| k as f64 * dt).collect();
    Ok(PicardResult {
        iterations: differences.len(),
        trajectory: Trajectory {
            grid,
            times,
            snapshots: iterate,
            source: field.source,
            epsilon: field.epsilon,
            scheme: Scheme::Picard,
            dt,
        },
        differences,
        norms,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(2.0, 1.0).validate().is_err());
        let mut c = SolverConfig::new(0.1, 1.0);
        c.record_every = 0;
        assert!(c.validate().is_err());
        let (k, dt) = SolverConfig::new(0.3, 1.0).steps();
        assert_eq!(k, 4);
        assert!((dt - 0.25).abs() < 1e-15);
    }

    #[test]
    fn negative_time_rejected() {
        let g = GridSpec::centered(1.0, 16).unwrap();
        assert!(heat_semigroup(&GridFunction::zeros(g), -1.0).is_err());
    }

    #[test]
    fn overflow_guard() {
        let g = GridSpec::centered(4.0, 64).unwrap();
        let f = MollifiedField::constant(g, 1e5);
        let u0 = GridFunction::from_fn(g, |_| 1.0);
        let r = solve_mild(&u0, &f, &SolverConfig::new(0.01, 0.1));
        assert!(matches!(r, Err(Error::Overflow(_))));
    }
}
