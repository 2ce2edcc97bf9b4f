//! Experiment records, growth-law fits and the Lyapunov-ratio suite.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::SweepMode;
use crate::error::{Error, Result};
use crate::fk::{lyapunov_ratio, RatioBudget, RatioReport};
use crate::noise::NoiseParams;
use crate::rng::{derive_seed, make_rng};
use crate::stats::{kendall, linear_fit, median, quantile, KendallTest, LinearFit};
use crate::variational::predicted_constant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub code_version: String,
    pub rng: String,
    pub global_seed: u64,
}

impl RunMetadata {
    pub fn new(global_seed: u64) -> Self {
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: crate::rng::RNG_ALGORITHM.to_string(),
            global_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub t: f64,
    pub replica: usize,
    pub seed: u64,
    pub m: usize,
    pub h: f64,
    pub lambda: Option<f64>,
    /// Value at twice the final spacing.
    pub lambda_coarse: Option<f64>,
    pub h_converged: bool,
    pub residual: Option<f64>,
    /// `lambda / (log t)^{1/(1+H)}`.
    pub normalized: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub id: String,
    pub hurst: f64,
    pub c_h: f64,
    pub epsilon: f64,
    pub h: f64,
    pub mode: SweepMode,
    pub t_list: Vec<f64>,
    pub replicas: usize,
    pub cells: Vec<SweepCell>,
    /// Median `lambda` per `t` over successful cells (NaN when none).
    #[serde(deserialize_with = "nan_from_null")]
    pub medians: Vec<f64>,
    #[serde(deserialize_with = "nan_from_null")]
    pub normalized_medians: Vec<f64>,
    /// `log(median lambda)` against `log log t`, when every median is positive.
    pub loglog_fit: Option<LinearFit>,
    pub metadata: RunMetadata,
}

// JSON writes NaN as null
fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    let v: Vec<Option<f64>> = Deserialize::deserialize(d)?;
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

impl SweepRecord {
    /// One row per cell: `t,replica,seed,m,h,lambda,lambda_coarse,h_converged,residual,normalized,error`.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let mut s = String::from("t,replica,seed,m,h,lambda,lambda_coarse,h_converged,residual,normalized,error\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{:e},{},{},{},{:e},{},{},{},{},{},{}\n",
                c.t,
                c.replica,
                c.seed,
                c.m,
                c.h,
                opt(c.lambda),
                opt(c.lambda_coarse),
                c.h_converged,
                opt(c.residual),
                opt(c.normalized),
                c.error.as_deref().unwrap_or("").replace(',', ";"),
            ));
        }
        s
    }

    /// Successful `lambda` values per `t`, in `t_list` order.
    pub fn lambdas_by_t(&self) -> Vec<Vec<f64>> {
        self.t_list
            .iter()
            .map(|&t| self.cells.iter().filter(|c| c.t == t).filter_map(|c| c.lambda).collect())
            .collect()
    }
}

pub const GROWTH_DISCLAIMER: &str = "non-asymptotic: the growth law is an almost-sure t -> infinity limit; \
     the fitted slope is an empirical trend at finite t and is not expected to equal the variational constant";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 2000,
            confidence: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub sweep_id: String,
    #[serde(rename = "H")]
    pub hurst: f64,
    #[serde(rename = "cH")]
    pub c_h: f64,
    pub t_list: Vec<f64>,
    /// Regression axis `(log t)^{1/(1+H)}`.
    pub x: Vec<f64>,
    pub medians: Vec<f64>,
    pub replicas_used: Vec<usize>,
    pub fit: LinearFit,
    pub slope_ci: (f64, f64),
    pub bootstrap: BootstrapConfig,
    pub medians_increasing: bool,
    pub slope_ci_excludes_zero: bool,
    /// Variational energy `E` used for the prediction, if supplied.
    pub energy: Option<f64>,
    /// `(2 c_H E)^{1/(1+H)}`.
    pub predicted_constant: Option<f64>,
    pub model_mismatch: Option<String>,
    pub disclaimer: String,
}

/// Median `lambda(Q_t)` regressed on `(log t)^{1/(1+H)}`, with a percentile
/// bootstrap over replicas (resampled independently per `t`).
pub fn fit_growth(sweep: &SweepRecord, hurst: f64, energy: Option<f64>, boot: &BootstrapConfig) -> Result<GrowthFit> {
    if hurst != sweep.hurst {
        return Err(Error::Domain(format!("H = {hurst} does not match the sweep's H = {}", sweep.hurst)));
    }
    if sweep.t_list.len() < 4 {
        return Err(Error::Domain(format!("need at least 4 t values, got {}", sweep.t_list.len())));
    }
    if boot.resamples < 100 || !(boot.confidence > 0.0 && boot.confidence < 1.0) {
        return Err(Error::Domain("bootstrap needs >= 100 resamples and confidence in (0, 1)".into()));
    }
    let groups = sweep.lambdas_by_t();
    for (t, g) in sweep.t_list.iter().zip(&groups) {
        if g.len() < 10 {
            return Err(Error::Domain(format!("t = {t}: {} successful replicas, need at least 10", g.len())));
        }
    }
    let x: Vec<f64> = sweep
        .t_list
        .iter()
        .map(|&t| {
            if t > 1.0 {
                Ok(t.ln().powf(1.0 / (1.0 + hurst)))
            } else {
                Err(Error::Domain(format!("t = {t} must exceed 1")))
            }
        })
        .collect::<Result<_>>()?;
    let medians: Vec<f64> = groups.iter().map(|g| median(g)).collect();
    let fit = linear_fit(&x, &medians).ok_or_else(|| Error::Domain("degenerate regression: the (log t) axis has no spread".into()))?;

    let mut rng = make_rng(boot.seed);
    let mut slopes = Vec::with_capacity(boot.resamples);
    let mut resampled = vec![0.0; groups.iter().map(Vec::len).max().unwrap_or(0)];
    for _ in 0..boot.resamples {
        let ys: Vec<f64> = groups
            .iter()
            .map(|g| {
                let buf = &mut resampled[..g.len()];
                for v in buf.iter_mut() {
                    *v = g[rng.random_range(0..g.len())];
                }
                median(buf)
            })
            .collect();
        // x is fixed and already checked for spread
        slopes.push(linear_fit(&x, &ys).map_or(f64::NAN, |f| f.slope));
    }
    let a = 0.5 * (1.0 - boot.confidence);
    let slope_ci = (quantile(&slopes, a), quantile(&slopes, 1.0 - a));

    let medians_increasing = medians.windows(2).all(|w| w[1] > w[0]);
    let model_mismatch = if let Some((t, m)) = sweep.t_list.iter().zip(&medians).find(|(_, m)| **m <= 0.0) {
        Some(format!("model mismatch: median lambda = {m} at t = {t} is not positive"))
    } else if !medians_increasing {
        Some("model mismatch: median lambda is not increasing in t".to_string())
    } else {
        None
    };
    let predicted_constant = match energy {
        Some(e) => Some(predicted_constant(hurst, sweep.c_h, e)?),
        None => None,
    };
    Ok(GrowthFit {
        sweep_id: sweep.id.clone(),
        hurst,
        c_h: sweep.c_h,
        t_list: sweep.t_list.clone(),
        x,
        medians,
        replicas_used: groups.iter().map(Vec::len).collect(),
        fit,
        slope_ci,
        bootstrap: *boot,
        medians_increasing,
        slope_ci_excludes_zero: slope_ci.0 > 0.0 || slope_ci.1 < 0.0,
        energy,
        predicted_constant,
        model_mismatch,
        disclaimer: GROWTH_DISCLAIMER.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSuiteConfig {
    pub params: NoiseParams,
    pub epsilon: f64,
    pub t_list: Vec<f64>,
    pub budget: RatioBudget,
    /// Containment band for the ratio at the largest `t`.
    pub band: (f64, f64),
}

impl RatioSuiteConfig {
    pub fn new(params: NoiseParams, epsilon: f64, t_list: Vec<f64>) -> Self {
        Self {
            params,
            epsilon,
            t_list,
            budget: RatioBudget::default(),
            band: (0.2, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSuiteReport {
    pub config: RatioSuiteConfig,
    /// One entry per `t`; the realization for `t_list[i]` uses seed
    /// `derive_seed(params.seed, [i])`.
    pub rows: Vec<RatioReport>,
    pub skipped: Option<String>,
    /// Kendall trend of `|ratio - 1|` against `t`; negative tau means approach.
    pub trend: Option<KendallTest>,
    pub band_ok: Option<bool>,
    pub violation: Option<String>,
    pub disclaimer: String,
}

impl RatioSuiteReport {
    /// `Err(Contract)` naming the offending cell when the band check failed.
    pub fn check(&self) -> Result<()> {
        match &self.violation {
            Some(v) => Err(Error::Contract(v.clone())),
            None => Ok(()),
        }
    }
}

pub const RATIO_DISCLAIMER: &str = "the ratio tends to 1 only as t -> infinity; \
     only containment in a wide band at the largest t is checked";

/// `(1/t) log u_t(0) / lambda` over a t-ladder, each on its own shared
/// realization.
pub fn ratio_suite(cfg: &RatioSuiteConfig) -> Result<RatioSuiteReport> {
    if cfg.t_list.is_empty() || !cfg.t_list.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Domain("t_list must be non-empty and increasing".into()));
    }
    if !(cfg.band.0 < cfg.band.1) {
        return Err(Error::Domain(format!("empty band {:?}", cfg.band)));
    }
    let mut rows = Vec::with_capacity(cfg.t_list.len());
    for (i, &t) in cfg.t_list.iter().enumerate() {
        let params = NoiseParams {
            seed: derive_seed(cfg.params.seed, &[i as u64]),
            ..cfg.params
        };
        rows.push(lyapunov_ratio(t, &params, cfg.epsilon, &cfg.budget)?);
    }
    let mut report = RatioSuiteReport {
        config: cfg.clone(),
        rows,
        skipped: None,
        trend: None,
        band_ok: None,
        violation: None,
        disclaimer: RATIO_DISCLAIMER.to_string(),
    };
    if let Some(row) = report.rows.iter().find(|r| r.degenerate.is_some()) {
        report.skipped = Some(format!("t = {}: {}", row.t, row.degenerate.as_deref().unwrap_or("")));
        return Ok(report);
    }
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio.unwrap()).collect();
    if ratios.len() >= 2 {
        let dist: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
        report.trend = Some(kendall(&cfg.t_list, &dist));
    }
    let last = report.rows.last().unwrap();
    let r = last.ratio.unwrap();
    let ok = r >= cfg.band.0 && r <= cfg.band.1;
    report.band_ok = Some(ok);
    if !ok {
        report.violation = Some(format!(
            "ratio {r} at t = {} (seed {}) outside [{}, {}]",
            last.t, last.fk.seed, cfg.band.0, cfg.band.1
        ));
    }
    Ok(report)
}
