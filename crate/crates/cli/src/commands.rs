use std::fmt::Write as _;

use rough_pam::eigen::{assemble, growth_sweep, principal_eigenvalue, BoxDomain, Method, SweepConfig};
use rough_pam::fk::{
    u_fk_conditional, u_fk_conditional_with, u_fk_fixed, u_fk_naive, ConditionalConfig, FkEstimate, NaiveConfig,
    SpectralRule, Variant,
};
use rough_pam::harness::{fit_growth, ratio_suite, BootstrapConfig, RatioSuiteConfig, RunMetadata, SweepRecord};
use rough_pam::heat::{solve_mild, window_max_norm, SolverConfig};
use rough_pam::io::{write_noise, write_trajectory, write_vector};
use rough_pam::lpblocks::{noise_regularity_scan, ScanConfig};
use rough_pam::noise::{mollify, synthesize};
use rough_pam::variational::{gaussian_init, maximize, predicted_constant, MaximizeConfig};
use rough_pam::{GridFunction, GridSpec, MollifiedField, NoiseParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::*;
use crate::error::CliError;
use crate::output::Sink;

/// Everything one run needs besides its own parameters.
pub struct Ctx {
    pub command: &'static str,
    pub global: Global,
    /// Resolved configuration, echoed into every output.
    pub echo: Value,
    pub sink: Sink,
}

#[derive(Serialize)]
struct Record<'a, R: Serialize> {
    command: &'a str,
    config: &'a Value,
    metadata: RunMetadata,
    result: R,
}

impl Ctx {
    fn json<R: Serialize>(&mut self, result: R) -> Result<(), CliError> {
        let rec = Record {
            command: self.command,
            config: &self.echo,
            metadata: RunMetadata::new(self.global.seed),
            result,
        };
        let text = serde_json::to_string_pretty(&rec)? + "\n";
        self.sink.emit(&format!("{}.json", self.command), text.as_bytes())?;
        Ok(())
    }

    /// CSV body under two comment lines carrying the command and config.
    fn csv(&mut self, body: &str) -> Result<(), CliError> {
        let text = format!("# rpam {}\n# config: {}\n{body}", self.command, serde_json::to_string(&self.echo)?);
        self.sink.emit(&format!("{}.csv", self.command), text.as_bytes())?;
        Ok(())
    }

    /// Binary payload plus a JSON sidecar with the config.
    fn bin(&mut self, bytes: &[u8]) -> Result<(), CliError> {
        if !self.sink.has_dir() {
            return Err(CliError::field("global.out", "binary output needs an output directory"));
        }
        self.sink.emit(&format!("{}.bin", self.command), bytes)?;
        let side = serde_json::to_string_pretty(&json!({ "command": self.command, "config": self.echo }))? + "\n";
        self.sink.emit(&format!("{}.config.json", self.command), side.as_bytes())?;
        Ok(())
    }

    fn no_bin(&self) -> Result<(), CliError> {
        if self.global.format == Format::Bin {
            return Err(CliError::field("global.format", "bin is only available for noise and pde"));
        }
        Ok(())
    }

    fn params(&self) -> Result<NoiseParams, CliError> {
        NoiseParams::new(self.global.hurst, self.global.c_h, self.global.seed)
            .map_err(|e| CliError::field("global.H / global.cH", e))
    }
}

fn grid(field: &str, half_width: f64, n: usize) -> Result<GridSpec, CliError> {
    GridSpec::centered(half_width, n).map_err(|e| CliError::field(field, e))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::field(field, format!("must be positive, got {v}")))
    }
}

fn xy_csv(head: &str, f: &GridFunction) -> String {
    let mut s = format!("{head}\n");
    for (x, v) in f.grid.points().zip(&f.values) {
        let _ = writeln!(s, "{x},{v}");
    }
    s
}

pub fn noise(ctx: &mut Ctx, c: &NoiseConfig) -> Result<(), CliError> {
    let p = ctx.params()?;
    let g = grid("noise.half_width / noise.n", c.half_width, c.n)?;
    let w = synthesize(&p, &g);
    let values = if c.epsilon > 0.0 {
        mollify(&w, c.epsilon)?.samples
    } else {
        w.samples()
    };
    eprintln!("noise: n = {}, dx = {:.4e}, window variance {:.6e}", c.n, g.dx(), {
        let inner: Vec<f64> = g.points().zip(&values.values).filter(|(x, _)| g.in_interior(*x)).map(|(_, v)| *v).collect();
        rough_pam::stats::variance(&inner)
    });
    match ctx.global.format {
        Format::Bin => {
            let mut buf = Vec::new();
            if c.epsilon > 0.0 {
                write_vector(&mut buf, &values)?;
            } else {
                write_noise(&mut buf, &w)?;
            }
            ctx.bin(&buf)
        }
        Format::Csv => ctx.csv(&xy_csv("x,value", &values)),
        Format::Json => ctx.json(json!({ "grid": g, "epsilon": c.epsilon, "values": values.values })),
    }
}

pub fn besov_scan(ctx: &mut Ctx, c: &BesovConfig) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    let kappas = if c.kappas.is_empty() {
        vec![1.0 - p.hurst + 0.1, 1.0 - p.hurst - 0.2]
    } else {
        c.kappas.clone()
    };
    let mut cfg = ScanConfig::new(p, c.resolutions.clone(), kappas, c.replicas);
    cfg.half_width = c.half_width;
    cfg.xi0 = c.xi0;
    cfg.sigma = c.sigma;
    cfg.alpha = c.alpha;
    let r = noise_regularity_scan(&cfg)?;
    for s in &r.summary {
        eprintln!("kappa {:.3}: {:?} (tau {:.3}, p {:.3e})", s.kappa, s.class, s.trend.tau_b, s.trend.p_increasing);
    }
    match ctx.global.format {
        Format::Csv => {
            let mut s = String::from("n,replica,seed,kappa,sup_block_norm\n");
            for row in &r.rows {
                let _ = writeln!(s, "{},{},{},{},{}", row.n, row.replica, row.seed, row.kappa, row.sup_block_norm);
            }
            ctx.csv(&s)
        }
        _ => ctx.json(&r),
    }
}

pub fn pde(ctx: &mut Ctx, c: &PdeConfig) -> Result<(), CliError> {
    let p = ctx.params()?;
    let g = grid("pde.half_width / pde.n", c.half_width, c.n)?;
    positive("pde.epsilon", c.epsilon)?;
    let mut cfg = SolverConfig::new(c.dt, c.t).with_scheme(parse_enum("pde.scheme", &c.scheme)?);
    cfg.record_every = c.record_every.max(1);
    cfg.validate().map_err(|e| CliError::field("pde.dt / pde.t", e))?;
    let field = mollify(&synthesize(&p, &g), c.epsilon)?;
    let u0 = GridFunction::from_fn(g, |_| 1.0);
    let traj = solve_mild(&u0, &field, &cfg)?;
    let at0: Vec<f64> = (0..traj.times.len()).map(|i| traj.snapshot(i).interpolate(0.0)).collect();
    eprintln!("u_t(0) = {:.6} at t = {}", at0.last().unwrap(), c.t);
    match ctx.global.format {
        Format::Bin => {
            let mut buf = Vec::new();
            write_trajectory(&mut buf, &traj.to_data())?;
            ctx.bin(&buf)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf)?;
            ctx.csv(&String::from_utf8_lossy(&buf))
        }
        Format::Json => {
            let norms: Vec<f64> = (0..traj.times.len()).map(|i| window_max_norm(&traj.snapshot(i))).collect();
            ctx.json(json!({
                "dt": traj.dt,
                "times": traj.times,
                "u_at_0": at0,
                "window_max_norm": norms,
            }))
        }
    }
}

pub fn eigen(ctx: &mut Ctx, c: &EigenConfig) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    positive("eigen.t", c.t)?;
    positive("eigen.epsilon", c.epsilon)?;
    let h = if c.h > 0.0 { c.h } else { 2.0 * c.t / 4096.0 };
    let method: Method = parse_enum("eigen.method", &c.method)?;
    let dx = h.min(c.epsilon / 8.0);
    let n = ((4.0 * c.t / dx).ceil() as usize).next_power_of_two();
    let g = grid("eigen.t / eigen.h", 2.0 * c.t, n)?;
    let field = if c.zero_noise {
        MollifiedField::zero(g)
    } else {
        mollify(&synthesize(&p, &g), c.epsilon)?
    };
    let d = BoxDomain::with_spacing(c.t, h).map_err(|e| CliError::field("eigen.h", e))?;
    let r = principal_eigenvalue(&assemble(&field, &d)?, method)?;
    eprintln!("lambda = {:.6}", r.lambda);
    match ctx.global.format {
        Format::Csv => ctx.csv(&xy_csv("x,ground_state", &r.eigfun)),
        _ => ctx.json(json!({
            "t": c.t,
            "h": d.h(),
            "m": d.m,
            "field_n": n,
            "lambda": r.lambda,
            "residual": r.residual,
            "solver": r.solver,
            "iterations": r.iterations,
            "zero_noise_exact": c.zero_noise.then(|| -std::f64::consts::PI.powi(2) / (8.0 * c.t * c.t)),
        })),
    }
}

fn fk_csv(e: &FkEstimate) -> String {
    format!(
        "variant,t,x,dt,n_paths,n_noise,mean,stderr,sample_variance,seed\n{:?},{},{},{},{},{},{},{},{},{}\n",
        e.variant,
        e.t,
        e.x,
        e.dt,
        e.n_paths,
        e.n_noise.map_or(String::new(), |n| n.to_string()),
        e.mean,
        e.stderr,
        e.sample_variance,
        e.seed,
    )
}

pub fn fk(ctx: &mut Ctx, c: &FkConfig) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    positive("fk.t", c.t)?;
    let variant: Variant = parse_enum("fk.variant", &c.variant)?;
    let dt = if c.dt > 0.0 { c.dt } else { c.t / 128.0 };
    let g = grid("fk.half_width / fk.n", c.half_width, c.n)?;
    let est = match variant {
        Variant::Naive => u_fk_naive(&NaiveConfig {
            t: c.t,
            x: c.x,
            epsilon: c.epsilon,
            dt,
            n_paths: c.paths,
            n_noise: c.noise,
            params: p,
            grid: g,
            zero_noise: false,
        })?,
        Variant::Conditional if c.xi_cut > 0.0 => u_fk_conditional(c.t, c.x, c.paths, &p, c.xi_cut, dt)?,
        Variant::Conditional => u_fk_conditional_with(&ConditionalConfig {
            t: c.t,
            x: c.x,
            dt,
            n_paths: c.paths,
            params: p,
            rule: SpectralRule::for_field(&g, c.epsilon)?,
        })?,
        Variant::FixedNoise => {
            let field = mollify(&synthesize(&p, &g), c.epsilon)?;
            u_fk_fixed(&field, c.t, c.x, c.paths, dt, p.seed)?
        }
    };
    eprintln!("u_{}({}) = {:.6} +- {:.2e}", c.t, c.x, est.mean, est.stderr);
    match ctx.global.format {
        Format::Csv => ctx.csv(&fk_csv(&est)),
        _ => ctx.json(&est),
    }
}

pub fn variational(ctx: &mut Ctx, c: &VariationalConfig) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    let g = grid("variational.half_width / variational.n", c.half_width, c.n)?;
    positive("variational.width", c.width)?;
    let cfg = MaximizeConfig {
        max_iters: c.max_iters,
        tol: c.tol,
        ..MaximizeConfig::default()
    };
    let sol = maximize(p.hurst, &gaussian_init(&g, c.width)?, &cfg)?;
    let pred = predicted_constant(p.hurst, p.c_h, sol.energy)?;
    eprintln!("E = {:.8}, (2 cH E)^(1/(1+H)) = {:.6}", sol.energy, pred);
    match ctx.global.format {
        Format::Csv => ctx.csv(&xy_csv("x,g", &sol.g)),
        _ => ctx.json(json!({ "summary": sol.summary(), "predicted_constant": pred, "trace": sol.trace })),
    }
}

pub fn sweep(ctx: &mut Ctx, c: &SweepParams) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    let mut cfg = SweepConfig::new(p, c.t_list.clone(), c.replicas);
    cfg.epsilon = c.epsilon;
    cfg.h = c.h;
    cfg.max_refine = c.max_refine;
    cfg.mode = parse_enum("sweep.mode", &c.mode)?;
    cfg.method = parse_enum("sweep.method", &c.method)?;
    cfg.zero_noise = c.zero_noise;
    cfg.validate().map_err(|e| CliError::field("sweep", e))?;
    let rec = growth_sweep(&cfg)?;
    for (t, m) in rec.t_list.iter().zip(&rec.medians) {
        eprintln!("t = {t:.4e}: median lambda {m:.6}");
    }
    match ctx.global.format {
        Format::Csv => ctx.csv(&rec.to_csv()),
        _ => ctx.json(&rec),
    }
}

pub fn ratio(ctx: &mut Ctx, c: &RatioParams) -> Result<(), CliError> {
    ctx.no_bin()?;
    let p = ctx.params()?;
    let band = match c.band.as_slice() {
        [lo, hi] => (*lo, *hi),
        _ => return Err(CliError::field("ratio.band", "expected two numbers lo,hi")),
    };
    let mut cfg = RatioSuiteConfig::new(p, c.epsilon, c.t_list.clone());
    cfg.band = band;
    cfg.budget.n_paths = c.paths;
    cfg.budget.dt = c.dt;
    cfg.budget.h = c.h;
    cfg.budget.confidence = c.confidence;
    cfg.budget.zero_noise = c.zero_noise;
    let rep = ratio_suite(&cfg)?;
    if let Some(s) = &rep.skipped {
        eprintln!("skipped: {s}");
    }
    for r in &rep.rows {
        eprintln!(
            "t = {}: growth {:.5}, lambda {:.5}, ratio {:?}; on Q_t: lambda {:?}, ratio {:?}",
            r.t, r.growth, r.lambda, r.ratio, r.lambda_qt, r.ratio_qt
        );
    }
    match ctx.global.format {
        Format::Csv => {
            let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
            let mut s = String::from("t,box_half_width,growth,growth_lo,growth_hi,lambda,ratio,ratio_lo,ratio_hi,seed\n");
            for r in &rep.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    r.t,
                    r.box_half_width,
                    r.growth,
                    r.growth_ci.0,
                    r.growth_ci.1,
                    r.lambda,
                    opt(r.ratio),
                    opt(r.ratio_ci.map(|c| c.0)),
                    opt(r.ratio_ci.map(|c| c.1)),
                    r.fk.seed
                );
            }
            ctx.csv(&s)?;
        }
        _ => ctx.json(&rep)?,
    }
    rep.check()?;
    Ok(())
}

/// Reads either a bare sweep record or the `rpam sweep` JSON wrapper.
pub fn read_sweep(path: &std::path::Path) -> Result<SweepRecord, CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::field("fit.input", "a sweep record is required"));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::field("fit.input", format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::field("fit.input", e))?;
    let v = match v.get("result") {
        Some(r) => r.clone(),
        None => v,
    };
    serde_json::from_value(v).map_err(|e| CliError::field("fit.input", format!("not a sweep record: {e}")))
}

pub fn fit(ctx: &mut Ctx, c: &FitParams, hurst_given: bool) -> Result<(), CliError> {
    ctx.no_bin()?;
    let rec = read_sweep(&c.input)?;
    let hurst = if hurst_given { ctx.global.hurst } else { rec.hurst };
    let energy = if c.energy > 0.0 {
        c.energy
    } else {
        let g = GridSpec::centered(64.0, 2048)?;
        maximize(hurst, &gaussian_init(&g, 1.0)?, &MaximizeConfig::default())?.energy
    };
    let boot = BootstrapConfig {
        resamples: c.resamples,
        confidence: c.confidence,
        seed: ctx.global.seed,
    };
    let f = fit_growth(&rec, hurst, Some(energy), &boot)?;
    eprintln!(
        "slope {:.5} CI [{:.5}, {:.5}]; variational prediction {:.5}",
        f.fit.slope,
        f.slope_ci.0,
        f.slope_ci.1,
        f.predicted_constant.unwrap_or(f64::NAN)
    );
    if let Some(m) = &f.model_mismatch {
        eprintln!("{m}");
    }
    eprintln!("{}", f.disclaimer);
    match ctx.global.format {
        Format::Csv => {
            let mut s = String::from("t,log_t_pow,median_lambda,replicas\n");
            for i in 0..f.t_list.len() {
                let _ = writeln!(s, "{},{},{},{}", f.t_list[i], f.x[i], f.medians[i], f.replicas_used[i]);
            }
            ctx.csv(&s)
        }
        _ => ctx.json(&f),
    }
}
