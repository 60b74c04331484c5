//! Browser front-end: Bloch dynamics of a configured run, the two-time
//! correlation function of a squeezed bath, and sampled noise paths.
//!
//! The `*_values` functions are plain Rust so they can be tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use hops_core::bcf::{single_mode_squeezed, BathModel};
use hops_core::config::{parse_config, MethodKind};
use hops_core::driver::execute;
use hops_core::noise::{EigenSampler, SeedSpec};
use hops_core::series::bloch_row;
use hops_core::{Error, Result};
use wasm_bindgen::prelude::*;

/// Trajectory counts above this are refused; the page runs on the main thread.
pub const MAX_TRAJECTORIES: u64 = 2000;
/// Largest grid accepted by the correlation map and the noise sampler.
pub const MAX_GRID: usize = 400;

/// Columns per row of [`bloch_values`].
pub const BLOCH_STRIDE: usize = 6;

/// Rows `[t, σx, σy, σz, σ̃x, σ̃y]`, flattened, for a two-level configuration.
pub fn bloch_values(config_json: &str) -> Result<Vec<f64>> {
    let cfg = parse_config(config_json)?;
    let r = cfg.resolve()?;
    let omega0 = r.omega0.ok_or_else(|| Error::config("system", "the demo plots two-level systems only"))?;
    if matches!(r.method.kind(), MethodKind::Vector(_)) && r.trajectories > MAX_TRAJECTORIES {
        return Err(Error::config("trajectories", format!("at most {MAX_TRAJECTORIES} in the browser")));
    }
    let series = execute(&cfg)?.mean()?;
    let mut out = Vec::with_capacity(series.len() * BLOCH_STRIDE);
    for (i, &t) in series.times.iter().enumerate() {
        out.push(t);
        out.extend_from_slice(&bloch_row(series.rho(i), t, omega0));
    }
    Ok(out)
}

fn grid(t_end: f64, n: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_GRID).contains(&n) {
        return Err(Error::config("n", format!("grid size must lie in 2..={MAX_GRID}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::config("t_end", "must be positive"));
    }
    Ok((0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect())
}

fn squeezed(gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64) -> Result<BathModel> {
    single_mode_squeezed(gamma, omega0, r, phi, rate)
}

/// `α(t_i, t_j)` on an `n × n` grid over `[0, t_end]`, row-major, as
/// interleaved `(re, im)` pairs.
pub fn bcf_values(gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64, t_end: f64, n: usize) -> Result<Vec<f64>> {
    let model = squeezed(gamma, omega0, r, phi, rate)?;
    let ts = grid(t_end, n)?;
    let mut out = Vec::with_capacity(2 * n * n);
    for &t in &ts {
        for &s in &ts {
            let a = model.eval_bcf(t, s);
            out.push(a.re);
            out.push(a.im);
        }
    }
    Ok(out)
}

/// One sample of the colored noise `z(t)` on `n` points over `[0, t_end]`,
/// as interleaved `(re, im)` pairs.
#[allow(clippy::too_many_arguments)]
pub fn noise_values(gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64, t_end: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let model = squeezed(gamma, omega0, r, phi, rate)?;
    let ts = grid(t_end, n)?;
    let sampler = EigenSampler::from_bcf(&model, &ts, None)?;
    let z = sampler.sample(&mut SeedSpec::new(seed).stream(0));
    Ok(z.iter().flat_map(|c| [c.re, c.im]).collect())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn bloch(config_json: &str) -> std::result::Result<Vec<f64>, JsError> {
    bloch_values(config_json).map_err(js)
}

#[wasm_bindgen]
pub fn bcf_map(gamma: f64, omega0: f64, r: f64, phi: f64, rate: f64, t_end: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    bcf_values(gamma, omega0, r, phi, rate, t_end, n).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn noise_path(
    gamma: f64,
    omega0: f64,
    r: f64,
    phi: f64,
    rate: f64,
    t_end: f64,
    n: usize,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    noise_values(gamma, omega0, r, phi, rate, t_end, n, seed).map_err(js)
}
