//! Browser bindings for the interference alignment toolkit.
//!
//! Every export returns a flat `Float64Array` so the page can plot it without
//! any glue beyond `wasm-bindgen`'s generated module. The plain Rust functions
//! underneath are usable (and tested) natively.

use ia_core::experiment::{seeded_realization, sum_rate_curve};
use ia_core::{build_cascades, closed_form_dof, ChannelModel, Coding, Layer};
use wasm_bindgen::prelude::*;

/// Closed-form DoF for `n = 1..=n_max`.
pub fn dof_series(users: usize, n_max: u32, layer: Layer) -> Result<Vec<f64>, String> {
    (1..=n_max)
        .map(|n| closed_form_dof(users, n, layer).map(|d| d.value()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())
}

/// `[snr..., naive..., double...]`, each block `snr.len()` long, followed by
/// the two high-SNR slopes.
pub fn sum_rate_series(snr: &[f64], trials: usize, seed: u64) -> Result<Vec<f64>, String> {
    let mut out = snr.to_vec();
    let mut slopes = Vec::new();
    for coding in [Coding::Naive, Coding::Double] {
        let r = sum_rate_curve(3, 2, ChannelModel::Constant, coding, snr, trials, seed)
            .map_err(|e| e.to_string())?;
        out.extend(&r.sum_rate);
        slopes.push(r.dof_estimate);
    }
    out.extend(slopes);
    Ok(out)
}

/// Interleaved `re, im` of `λ_32` over the effective slots, then of `κ`,
/// for one K=3, n=2 realization.
pub fn spectrum(coding: Coding, model: ChannelModel, seed: u64) -> Result<Vec<f64>, String> {
    let r = seeded_realization(3, 2, model, coding, seed).map_err(|e| e.to_string())?;
    let cas = build_cascades(&r.effective).map_err(|e| e.to_string())?;
    let lambda = cas.lambda(3, 2).ok_or("missing cascade T_32")?;
    Ok(lambda
        .iter()
        .chain(cas.kappa())
        .flat_map(|z| [z.re, z.im])
        .collect())
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, JsError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = dofCurve)]
pub fn dof_curve(users: usize, n_max: u32, layer: &str) -> Result<Vec<f64>, JsError> {
    dof_series(users, n_max, parse(layer)?).map_err(js)
}

#[wasm_bindgen(js_name = sumRateCurves)]
pub fn sum_rate_curves(lo: f64, hi: f64, step: f64, trials: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    if !(step > 0.0) || hi < lo || (hi - lo) / step > 200.0 {
        return Err(JsError::new("bad SNR sweep"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let snr: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    sum_rate_series(&snr, trials, seed).map_err(js)
}

#[wasm_bindgen(js_name = cascadeSpectrum)]
pub fn cascade_spectrum(coding: &str, channel: &str, seed: u64) -> Result<Vec<f64>, JsError> {
    spectrum(parse(coding)?, parse(channel)?, seed).map_err(js)
}
