//! Browser bindings for three interactive views: regime lookup, finite-n
//! transforms next to their limit, and the MRCA distribution.

use reduced_branching::engine::Engine;
use reduced_branching::limits::{limit_reduced_transform, LimitArgs, LimitPoint};
use reduced_branching::params::classify_regime;
use reduced_branching::prelimit::prelimit_transform;
use reduced_branching::{ModelParams, Result};
use wasm_bindgen::prelude::*;

/// Largest `log2 n` the page may request; keeps table construction interactive.
pub const MAX_LOG2_N: u32 = 18;

pub fn regime_name(alpha1: f64, alpha2: f64, a21: f64) -> Result<String> {
    let p = ModelParams::new(alpha1, alpha2, a21)?;
    Ok(classify_regime(&p).name().to_string())
}

/// Rows `[n, finite, limit]` for `n = 2^4 .. 2^log2_max`, flattened.
pub fn convergence_rows(alpha1: f64, alpha2: f64, a21: f64, point: &str, x: LimitArgs, log2_max: u32) -> Result<Vec<f64>> {
    let p = ModelParams::new(alpha1, alpha2, a21)?;
    let point = LimitPoint::parse(point)?;
    let log2_max = log2_max.clamp(4, MAX_LOG2_N);
    let limit = limit_reduced_transform(&p, point, &x)?.value;
    let engine = Engine::new(p, 1 << log2_max)?;
    let mut out = Vec::new();
    for k in 4..=log2_max {
        let n = 1u64 << k;
        let v = prelimit_transform(&engine, point, n, &x)?;
        out.extend([n as f64, v.value, limit]);
    }
    Ok(out)
}

/// `P(beta_n <= m)` for `m = 0..=n`, then `P(T_n = 2)` as the last entry.
pub fn mrca_cdf(alpha1: f64, alpha2: f64, a21: f64, n: u64) -> Result<Vec<f64>> {
    let p = ModelParams::new(alpha1, alpha2, a21)?;
    let n = n.clamp(1, 1 << MAX_LOG2_N);
    let prof = Engine::new(p, n)?.mrca_profile(n)?;
    let mut out: Vec<f64> = (0..=n).map(|m| prof.beta_cdf(m)).collect();
    out.push(prof.type2_probability());
    Ok(out)
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn regime(alpha1: f64, alpha2: f64, a21: f64) -> std::result::Result<String, JsError> {
    js(regime_name(alpha1, alpha2, a21))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn convergence(
    alpha1: f64,
    alpha2: f64,
    a21: f64,
    point: &str,
    time: f64,
    s1: f64,
    s2: f64,
    lambda1: f64,
    lambda2: f64,
    log2_max: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    let x = LimitArgs { time, s1, s2, lambda1, lambda2 };
    js(convergence_rows(alpha1, alpha2, a21, point, x, log2_max))
}

#[wasm_bindgen]
pub fn mrca(alpha1: f64, alpha2: f64, a21: f64, n: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(mrca_cdf(alpha1, alpha2, a21, n as u64))
}
