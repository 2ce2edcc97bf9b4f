//! Three operations exported to the browser page in `www/`. Build with
//! `wasm-pack build --target web --out-dir www/pkg`.
//!
//! The plain functions carry the logic so they can be tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use rough_pam::eigen::{assemble, principal_eigenvalue, BoxDomain, Method};
use rough_pam::fk::{u_fk_conditional_with, ConditionalConfig, SpectralRule};
use rough_pam::noise::{mollify, synthesize};
use rough_pam::{GridSpec, MollifiedField, NoiseParams, Result};
use wasm_bindgen::prelude::*;

/// Mollified field samples on the physical window of a `n`-point grid over
/// `(-2 half_width, 2 half_width)`, as `[x0, v0, x1, v1, ...]`.
pub fn field_window(hurst: f64, c_h: f64, seed: u64, n: usize, half_width: f64, epsilon: f64) -> Result<Vec<f64>> {
    let p = NoiseParams::new(hurst, c_h, seed)?;
    let g = GridSpec::centered(2.0 * half_width, n)?;
    let f = mollify(&synthesize(&p, &g), epsilon)?;
    Ok(g.points()
        .zip(&f.samples.values)
        .filter(|(x, _)| g.in_interior(*x))
        .flat_map(|(x, v)| [x, *v])
        .collect())
}

/// `lambda(Q_t)` at spacing `t/256`.
pub fn box_eigenvalue(hurst: f64, c_h: f64, seed: u64, t: f64, epsilon: f64, zero_noise: bool) -> Result<f64> {
    let h = t / 256.0;
    let n = ((4.0 * t / h.min(epsilon / 8.0)).ceil() as usize).next_power_of_two();
    let g = GridSpec::centered(2.0 * t, n)?;
    let field = if zero_noise {
        MollifiedField::zero(g)
    } else {
        mollify(&synthesize(&NoiseParams::new(hurst, c_h, seed)?, &g), epsilon)?
    };
    let d = BoxDomain::with_spacing(t, h)?;
    Ok(principal_eigenvalue(&assemble(&field, &d)?, Method::Bisection)?.lambda)
}

/// Conditional Feynman-Kac estimate of `E u_t(0)`, as `[mean, stderr]`.
pub fn fk_mean(hurst: f64, c_h: f64, seed: u64, t: f64, epsilon: f64, paths: usize) -> Result<Vec<f64>> {
    let g = GridSpec::centered(8.0, 2048)?;
    let e = u_fk_conditional_with(&ConditionalConfig {
        t,
        x: 0.0,
        dt: t / 128.0,
        n_paths: paths,
        params: NoiseParams::new(hurst, c_h, seed)?,
        rule: SpectralRule::for_field(&g, epsilon)?,
    })?;
    Ok(vec![e.mean, e.stderr])
}

fn js(e: rough_pam::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = fieldWindow)]
pub fn field_window_js(hurst: f64, c_h: f64, seed: u32, n: usize, half_width: f64, epsilon: f64) -> std::result::Result<Vec<f64>, JsError> {
    field_window(hurst, c_h, seed as u64, n, half_width, epsilon).map_err(js)
}

#[wasm_bindgen(js_name = boxEigenvalue)]
pub fn box_eigenvalue_js(hurst: f64, c_h: f64, seed: u32, t: f64, epsilon: f64, zero_noise: bool) -> std::result::Result<f64, JsError> {
    box_eigenvalue(hurst, c_h, seed as u64, t, epsilon, zero_noise).map_err(js)
}

#[wasm_bindgen(js_name = fkMean)]
pub fn fk_mean_js(hurst: f64, c_h: f64, seed: u32, t: f64, epsilon: f64, paths: usize) -> std::result::Result<Vec<f64>, JsError> {
    fk_mean(hurst, c_h, seed as u64, t, epsilon, paths).map_err(js)
}
