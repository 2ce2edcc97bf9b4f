//! Growth-law sweeps of `lambda(Q_t)` over box sizes and replicas.

use serde::{Deserialize, Serialize};

use super::{assemble, principal_eigenvalue, BoxDomain, Method};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::harness::{RunMetadata, SweepCell, SweepRecord};
use crate::noise::{mollify_with, synthesize, MollifiedField, MollifierSpectrum, NoiseParams};
use crate::rng::derive_seed;
use crate::stats::{linear_fit, median};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Fresh realization per (t, replica).
    Independent,
    /// One realization per replica, shared by every box of the ladder.
    Nested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub params: NoiseParams,
    pub t_list: Vec<f64>,
    pub replicas: usize,
    pub epsilon: f64,
    /// Coarsest box spacing; each box is solved at h, h/2, ... until stable.
    pub h: f64,
    /// Largest number of spacing halvings.
    pub max_refine: u32,
    pub mode: SweepMode,
    pub method: Method,
    /// Replace every realization by the zero potential (analytic check).
    pub zero_noise: bool,
}

impl SweepConfig {
    pub fn new(params: NoiseParams, t_list: Vec<f64>, replicas: usize) -> Self {
        Self {
            params,
            t_list,
            replicas,
            epsilon: 1.0,
            h: 0.125,
            max_refine: 3,
            mode: SweepMode::Independent,
            method: Method::Bisection,
            zero_noise: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_list.len() < 4 {
            return Err(Error::Domain(format!("need at least 4 box sizes, got {}", self.t_list.len())));
        }
        if !self.t_list.windows(2).all(|w| w[1] > w[0]) || !(self.t_list[0] > 1.0) {
            return Err(Error::Domain("t_list must be increasing and above 1".into()));
        }
        if self.replicas < 10 {
            return Err(Error::Domain(format!("need at least 10 replicas, got {}", self.replicas)));
        }
        if !(self.epsilon > 0.0 && self.h > 0.0) {
            return Err(Error::Domain("epsilon and h must be positive".into()));
        }
        Ok(())
    }

    fn finest(&self) -> f64 {
        self.h / 2f64.powi(self.max_refine as i32)
    }

    /// Field grid for box half-width `t`: the box is the physical window and
    /// the finest box spacing falls on grid nodes.
    pub fn field_grid(&self, t: f64) -> Result<GridSpec> {
        let h = self.finest();
        let mut n = (4.0 * t / h).round() as usize;
        n += n % 2;
        let g = GridSpec::centered(2.0 * t, n)?;
        if self.epsilon < 4.0 * g.dx() {
            return Err(Error::Resolution(format!(
                "epsilon = {} needs spacing ≤ {}, have {}",
                self.epsilon,
                self.epsilon / 4.0,
                g.dx()
            )));
        }
        Ok(g)
    }
}

/// Outcome of the spacing-refinement policy on one box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub h: f64,
    pub m: usize,
    /// Value at `2h` (equal to `lambda` when no refinement was possible).
    pub lambda_coarse: f64,
    pub lambda: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Solve at `h0, h0/2, ...` until `|lambda(h) - lambda(h/2)| ≤ 1e-4 max(1, |lambda|)`
/// or `max_refine` halvings have been made.
pub fn refine_until_stable(
    field: &MollifiedField,
    half_width: f64,
    h0: f64,
    max_refine: u32,
    method: Method,
) -> Result<Refined> {
    let mut h = h0;
    let mut d = BoxDomain::with_spacing(half_width, h)?;
    let mut r = principal_eigenvalue(&assemble(field, &d)?, method)?;
    let mut coarse = r.lambda;
    let mut converged = max_refine == 0;
    for _ in 0..max_refine {
        h *= 0.5;
        coarse = r.lambda;
        d = BoxDomain::with_spacing(half_width, h)?;
        r = principal_eigenvalue(&assemble(field, &d)?, method)?;
        if (r.lambda - coarse).abs() <= 1e-4 * r.lambda.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(Refined {
        h: d.h(),
        m: d.m,
        lambda_coarse: coarse,
        lambda: r.lambda,
        residual: r.residual,
        converged,
    })
}

fn realize(cfg: &SweepConfig, seed: u64, grid: &GridSpec, spec: &MollifierSpectrum) -> Result<MollifiedField> {
    if cfg.zero_noise {
        return Ok(MollifiedField::zero(*grid));
    }
    mollify_with(&synthesize(&cfg.params.with_seed(seed), grid), spec)
}

fn normalizer(t: f64, hurst: f64) -> f64 {
    t.ln().powf(1.0 / (1.0 + hurst))
}

fn solve_cell(cfg: &SweepConfig, field: &MollifiedField, t: f64, r: usize, seed: u64) -> SweepCell {
    let mut cell = SweepCell {
        t,
        replica: r,
        seed,
        m: 0,
        h: cfg.h,
        lambda: None,
        lambda_coarse: None,
        h_converged: false,
        residual: None,
        normalized: None,
        error: None,
    };
    match refine_until_stable(field, t, cfg.h, cfg.max_refine, cfg.method) {
        Ok(x) => {
            cell.m = x.m;
            cell.h = x.h;
            cell.lambda = Some(x.lambda);
            cell.lambda_coarse = Some(x.lambda_coarse);
            cell.h_converged = x.converged;
            cell.residual = Some(x.residual);
            cell.normalized = Some(x.lambda / normalizer(t, cfg.params.hurst));
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Recompute one recorded cell from its seed alone.
pub fn rerun_cell(cfg: &SweepConfig, cell: &SweepCell) -> Result<SweepCell> {
    cfg.validate()?;
    let grid_t = match cfg.mode {
        SweepMode::Independent => cell.t,
        SweepMode::Nested => *cfg.t_list.last().unwrap(),
    };
    let grid = cfg.field_grid(grid_t)?;
    let spec = MollifierSpectrum::new(cfg.epsilon, &grid)?;
    let field = realize(cfg, cell.seed, &grid, &spec)?;
    Ok(solve_cell(cfg, &field, cell.t, cell.replica, cell.seed))
}

/// `lambda(Q_t)` over `t_list × replicas`. Failed cells are recorded with
/// their error and the sweep continues.
pub fn growth_sweep(cfg: &SweepConfig) -> Result<SweepRecord> {
    cfg.validate()?;
    let p = cfg.params;
    let t_max = *cfg.t_list.last().unwrap();
    let grids: Vec<GridSpec> = match cfg.mode {
        SweepMode::Independent => cfg.t_list.iter().map(|&t| cfg.field_grid(t)).collect::<Result<_>>()?,
        SweepMode::Nested => vec![cfg.field_grid(t_max)?],
    };
    let spectra: Vec<MollifierSpectrum> = grids
        .iter()
        .map(|g| MollifierSpectrum::new(cfg.epsilon, g))
        .collect::<Result<_>>()?;

    let solve = |field: &MollifiedField, ti: usize, r: usize, seed: u64| solve_cell(cfg, field, cfg.t_list[ti], r, seed);

    let cells: Vec<SweepCell> = match cfg.mode {
        SweepMode::Independent => {
            let jobs: Vec<(usize, usize)> = (0..cfg.t_list.len())
                .flat_map(|ti| (0..cfg.replicas).map(move |r| (ti, r)))
                .collect();
            crate::par::map(&jobs, |&(ti, r)| {
                let seed = derive_seed(p.seed, &[ti as u64, r as u64]);
                match realize(cfg, seed, &grids[ti], &spectra[ti]) {
                    Ok(f) => solve(&f, ti, r, seed),
                    Err(e) => {
                        let mut c = solve(&MollifiedField::zero(grids[ti]), ti, r, seed);
                        c.lambda = None;
                        c.normalized = None;
                        c.error = Some(e.to_string());
                        c
                    }
                }
            })
        }
        SweepMode::Nested => {
            let reps: Vec<usize> = (0..cfg.replicas).collect();
            let per: Vec<Vec<SweepCell>> = crate::par::map(&reps, |&r| {
                let seed = derive_seed(p.seed, &[r as u64]);
                let field = realize(cfg, seed, &grids[0], &spectra[0]);
                (0..cfg.t_list.len())
                    .map(|ti| match &field {
                        Ok(f) => solve(f, ti, r, seed),
                        Err(e) => {
                            let mut c = solve(&MollifiedField::zero(grids[0]), ti, r, seed);
                            c.lambda = None;
                            c.error = Some(e.to_string());
                            c
                        }
                    })
                    .collect()
            });
            // t-major order, as in the independent mode
            let mut out = Vec::with_capacity(cfg.t_list.len() * cfg.replicas);
            for ti in 0..cfg.t_list.len() {
                for row in &per {
                    out.push(row[ti].clone());
                }
            }
            out
        }
    };

    let medians: Vec<f64> = cfg
        .t_list
        .iter()
        .map(|&t| {
            let v: Vec<f64> = cells.iter().filter(|c| c.t == t).filter_map(|c| c.lambda).collect();
            if v.is_empty() {
                f64::NAN
            } else {
                median(&v)
            }
        })
        .collect();
    let loglog_fit = if medians.iter().all(|m| *m > 0.0) {
        let x: Vec<f64> = cfg.t_list.iter().map(|t| t.ln().ln()).collect();
        let y: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
        linear_fit(&x, &y)
    } else {
        None
    };
    Ok(SweepRecord {
        id: format!("sweep-H{}-cH{}-eps{}-seed{}", p.hurst, p.c_h, cfg.epsilon, p.seed),
        hurst: p.hurst,
        c_h: p.c_h,
        epsilon: cfg.epsilon,
        h: cfg.h,
        mode: cfg.mode,
        t_list: cfg.t_list.clone(),
        replicas: cfg.replicas,
        normalized_medians: medians
            .iter()
            .zip(&cfg.t_list)
            .map(|(m, t)| m / normalizer(*t, p.hurst))
            .collect(),
        medians,
        cells,
        loglog_fit,
        metadata: RunMetadata::new(p.seed),
    })
}

/// Nested-domain ladder on one realization: every box shares the sampled
/// potential on common points (same spacing, nodes aligned).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedLadder {
    pub seed: u64,
    pub t_list: Vec<f64>,
    pub h: f64,
    pub lambdas: Vec<f64>,
}

impl NestedLadder {
    pub fn is_monotone(&self) -> bool {
        self.lambdas.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `lambda(Q_t)` for every `t` in `t_list` on one field, at fixed spacing
/// `h`. Each `t / h` must be an integer so the boxes are nested on the grid.
pub fn nested_ladder(field: &MollifiedField, t_list: &[f64], h: f64, method: Method) -> Result<NestedLadder> {
    let mut lambdas = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let k = t / h;
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::Domain(format!("t = {t} is not a multiple of h = {h}")));
        }
        let d = BoxDomain::with_spacing(t, h)?;
        lambdas.push(principal_eigenvalue(&assemble(field, &d)?, method)?.lambda);
    }
    Ok(NestedLadder {
        seed: field.source.map_or(0, |s| s.params.seed),
        t_list: t_list.to_vec(),
        h,
        lambdas,
    })
}
