//! Fixed-step RK4 with step doubling until two successive resolutions agree.

use crate::error::{Error, Result};

const START_STEPS: usize = 64;
const MAX_STEPS: usize = 1 << 22;

fn rk4<const N: usize, F>(f: &F, y0: [f64; N], t0: f64, t1: f64, steps: usize) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let axpy = |y: &[f64; N], k: &[f64; N], c: f64| -> [f64; N] {
        let mut out = *y;
        for i in 0..N {
            out[i] += c * k[i];
        }
        out
    };
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(t + h, &axpy(&y, &k3, h));
        for j in 0..N {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    y
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`, doubling the step count until every
/// component changes by at most `rtol * |y| + atol`.
pub fn integrate<const N: usize, F>(f: F, y0: [f64; N], t0: f64, t1: f64, rtol: f64, atol: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t1 == t0 {
        return Ok(y0);
    }
    let mut steps = START_STEPS;
    let mut prev = rk4(&f, y0, t0, t1, steps);
    while steps < MAX_STEPS {
        steps *= 2;
        let next = rk4(&f, y0, t0, t1, steps);
        let ok = (0..N).all(|i| {
            let d = (next[i] - prev[i]).abs();
            d <= rtol * next[i].abs() + atol
        });
        if ok {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Numerical(format!("RK4 did not settle on [{t0}, {t1}] within {MAX_STEPS} steps")))
}
