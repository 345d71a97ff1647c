//! Finite-n counterparts of the limit points: the generation `m`, the argument
//! rescaling, and the exact conditional transform from the engine.

use serde::Serialize;

use crate::engine::Engine;
use crate::error::{domain, Result};
use crate::limits::{LimitArgs, LimitPoint};

/// Finite-n transform at a limit point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrelimitValue {
    pub m: u64,
    pub value: f64,
    pub deficit: f64,
}

fn isqrt(x: f64) -> u64 {
    x.sqrt().round().max(1.0) as u64
}

fn frac_of(a: f64, n: u64) -> u64 {
    (a * n as f64).round() as u64
}

/// `1 - exp(-x)` without cancellation.
fn exp_deficit(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// The intermediate scale used where a point only asks for `lo << h << hi`:
/// the geometric mean of the two bounds.
fn between(lo: f64, hi: f64) -> u64 {
    isqrt(lo * hi)
}

/// Generation `m` used for `point` at horizon `n`.
pub fn generation(engine: &Engine, point: LimitPoint, n: u64, x: &LimitArgs) -> Result<u64> {
    let nf = n as f64;
    let m = match point {
        LimitPoint::Q1neg(0) | LimitPoint::Balanced(0) => isqrt(nf),
        LimitPoint::Q1neg(1) | LimitPoint::Q2neg(3) | LimitPoint::Balanced(1) => frac_of(x.time, n),
        LimitPoint::Q1neg(2) => n - between(engine.hstar(n)? as f64, nf),
        LimitPoint::Q1neg(3) => n - (x.time * engine.hstar(n)? as f64).round() as u64,
        LimitPoint::Q1neg(4) => n - isqrt(engine.hstar(n)? as f64),
        LimitPoint::Q2neg(0) => isqrt(engine.gstar(n)? as f64),
        LimitPoint::Q2neg(1) => (x.time * engine.gstar(n)? as f64).round() as u64,
        LimitPoint::Q2neg(2) => between(engine.gstar(n)? as f64, nf),
        LimitPoint::Q2neg(4) | LimitPoint::Balanced(2) => n - isqrt(nf),
        _ => return Err(domain(format!("no limit point {}", point.id()))),
    };
    if m > n {
        return Err(domain(format!("{}: generation {m} exceeds n = {n}", point.id())));
    }
    Ok(m)
}

/// Exact `E[...| Z(n) != 0]` with the rescaling of `point` applied to `x`.
pub fn prelimit_transform(engine: &Engine, point: LimitPoint, n: u64, x: &LimitArgs) -> Result<PrelimitValue> {
    let m = generation(engine, point, n, x)?;
    let h = n - m;
    let q1 = |k: u64| engine.q1(k);
    let q2 = |k: u64| engine.q2(k);
    let q21 = |k: u64| engine.q21(k);
    let (u1, u2) = match point {
        LimitPoint::Q1neg(2) | LimitPoint::Q1neg(3) => (1.0 - x.s1, exp_deficit(x.lambda2 * q2(n)? / q21(h)?)),
        LimitPoint::Q1neg(4) => {
            let hs = engine.hstar(n)?;
            (
                exp_deficit(x.lambda1 * q1(hs)? / q1(h)?),
                exp_deficit(x.lambda2 * q2(n)? / q21(h)?),
            )
        }
        LimitPoint::Q2neg(4) => (exp_deficit(x.lambda1 * q1(n)? / q1(h)?), 1.0 - x.s2),
        LimitPoint::Balanced(2) => (
            exp_deficit(x.lambda1 * q21(n)? / (n as f64 * q1(h)?)),
            exp_deficit(x.lambda2 * q2(n)? / q2(h)?),
        ),
        _ => (1.0 - x.s1, 1.0 - x.s2),
    };
    let t = engine.reduced_transform_deficit(m, n, u1, u2)?;
    Ok(PrelimitValue { m, value: t.value, deficit: t.deficit })
}

/// Default 3x3 argument grid per point.
pub fn default_grid(point: LimitPoint) -> Vec<LimitArgs> {
    let s = [0.2, 0.5, 0.8];
    let lam = [0.5, 1.0, 2.0];
    let a = [0.25, 0.5, 0.75];
    let t = [0.5, 1.0, 2.0];
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            let args = match point {
                LimitPoint::Q1neg(0) | LimitPoint::Q2neg(0) | LimitPoint::Balanced(0) | LimitPoint::Q2neg(2) => {
                    LimitArgs { s1: s[i], s2: s[j], ..Default::default() }
                }
                LimitPoint::Q1neg(1) => LimitArgs { time: a[i], s1: 0.5, s2: s[j], ..Default::default() },
                LimitPoint::Q1neg(2) => LimitArgs { s1: s[i], lambda2: lam[j], ..Default::default() },
                LimitPoint::Q1neg(3) => LimitArgs { time: t[i], s1: s[j], lambda2: 1.0, ..Default::default() },
                LimitPoint::Q1neg(4) | LimitPoint::Balanced(2) => {
                    LimitArgs { lambda1: lam[i], lambda2: lam[j], ..Default::default() }
                }
                LimitPoint::Q2neg(1) => LimitArgs { time: t[i], s1: s[j], s2: 0.5, ..Default::default() },
                LimitPoint::Q2neg(3) | LimitPoint::Balanced(1) => {
                    LimitArgs { time: a[i], s1: s[j], s2: 0.5, ..Default::default() }
                }
                LimitPoint::Q2neg(4) => LimitArgs { lambda1: lam[i], s2: s[j], ..Default::default() },
                _ => LimitArgs::default(),
            };
            out.push(args);
        }
    }
    out
}
