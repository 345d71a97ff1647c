//! Limit objects: the PDE solutions `phi` and `psi`, limit transforms per regime,
//! MRCA limit laws and the G-process kernel.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ode::integrate;
use crate::params::{classify_regime, intermediate_constants, IntermediateConstants, ModelParams, Regime};

pub const DEFAULT_TOL: f64 = 1e-11;

/// How an evaluation was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    ClosedForm,
    Ode,
    Composed,
}

/// Back-off horizon of the characteristic flow. The initial value is exact along
/// `lambda1 = 0`; the leftover first-order error in the `lambda1` direction grows by
/// at most `e^T` and is damped by `e^(-2 a2 T)`, so `T` is pushed until that product
/// is negligible.
fn backoff(a2: f64, l1: f64, l2: f64) -> f64 {
    let big = l1.max(l2).max(1.0).ln();
    let base = big + 8.0 * std::f64::consts::LN_10;
    let damp = ((2.0 + a2) * big + 32.0) / (2.0 * a2);
    base.max(damp).min(5000.0)
}

fn check_lambdas(l1: f64, l2: f64) -> Result<()> {
    if !(l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()) {
        return Err(domain(format!("lambda = ({l1}, {l2}) must be finite and >= 0")));
    }
    Ok(())
}

/// Generic solver along `Lambda1 = l1 e^((1+a2)(t-T))`, `Lambda2 = l2 e^(t-T)`.
/// `init(L1, L2)` is the value near the origin, `rhs(Phi, L1)` the flow.
fn characteristic<I, R>(a2: f64, l1: f64, l2: f64, tol: f64, init: I, rhs: R) -> Result<f64>
where
    I: Fn(f64, f64) -> f64,
    R: Fn(f64, f64) -> f64,
{
    check_lambdas(l1, l2)?;
    if l1 == 0.0 && l2 == 0.0 {
        return Ok(0.0);
    }
    let t_end = backoff(a2, l1, l2);
    let y0 = init(l1 * (-(1.0 + a2) * t_end).exp(), l2 * (-t_end).exp());
    let f = |t: f64, y: &[f64; 1]| {
        let lam1 = l1 * ((1.0 + a2) * (t - t_end)).exp();
        [rhs(y[0].max(0.0), lam1)]
    };
    let y = integrate(f, [y0], 0.0, t_end, tol, tol * 1e-12)?;
    Ok(y[0])
}

/// `phi(l1, l2)`: solution of `(1+a2) l1 phi_1 + l2 phi_2 = phi - phi^(1+a2) + a2 A21 l1`
/// with `phi(0,0) = 0`, slopes `A21` and `1` at the origin. Depends on `alpha2` and `A21` only.
pub fn phi(p: &ModelParams, l1: f64, l2: f64, tol: f64) -> Result<f64> {
    let (a2, a21) = (p.alpha2(), p.a21());
    characteristic(
        a2,
        l1,
        l2,
        tol,
        |x1, x2| x2 * (1.0 + x2.powf(a2)).powf(-1.0 / a2) + a21 * x1,
        |v, lam1| v - v * v.powf(a2) + a2 * a21 * lam1,
    )
}

/// `psi(l1, l2)` for the balanced regime.
pub fn psi(p: &ModelParams, l1: f64, l2: f64, tol: f64) -> Result<f64> {
    let c = intermediate_constants(p)?;
    psi_with(p, &c, l1, l2, tol)
}

pub fn psi_with(p: &ModelParams, c: &IntermediateConstants, l1: f64, l2: f64, tol: f64) -> Result<f64> {
    let (a1, a2, a21) = (p.alpha1(), p.alpha2(), p.a21());
    let bp = c.b.powf(a2);
    let (b, sigma) = (c.b, c.sigma);
    characteristic(
        a2,
        l1,
        l2,
        tol,
        |x1, x2| x2 * (1.0 + bp * x2.powf(a2)).powf(-1.0 / a2) + a21 * x1,
        |v, lam1| {
            let damp = if lam1 > 0.0 { (1.0 + (b * lam1 / sigma).powf(a1)).powf(-1.0 / a1) } else { 1.0 };
            v - bp * v * v.powf(a2) + a2 * a21 * lam1 * damp
        },
    )
}

/// Explicit form of `phi` at `alpha2 = 1`.
pub fn phi_tanh(a21: f64, l1: f64, l2: f64) -> f64 {
    let r = (a21 * l1).sqrt();
    if r == 0.0 {
        return l2 / (1.0 + l2);
    }
    let th = r.tanh();
    r * (l2 + r * th) / (l2 * th + r)
}

/// A point at which the reduced transform has a known limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "regime", content = "point", rename_all = "snake_case")]
pub enum LimitPoint {
    /// Regime with negligible type-1 survival, points 0..=4.
    Q1neg(u8),
    /// Regime with negligible type-2 survival, points 0..=4.
    Q2neg(u8),
    /// Balanced regime, points 0..=2.
    Balanced(u8),
}

impl LimitPoint {
    pub fn regime(&self) -> Regime {
        match self {
            LimitPoint::Q1neg(_) => Regime::Q1Negligible,
            LimitPoint::Q2neg(_) => Regime::Q2Negligible,
            LimitPoint::Balanced(_) => Regime::IntermediateVasag,
        }
    }

    pub fn index(&self) -> u8 {
        match *self {
            LimitPoint::Q1neg(i) | LimitPoint::Q2neg(i) | LimitPoint::Balanced(i) => i,
        }
    }

    pub fn id(&self) -> String {
        let fam = match self {
            LimitPoint::Q1neg(_) => "q1neg",
            LimitPoint::Q2neg(_) => "q2neg",
            LimitPoint::Balanced(_) => "balanced",
        };
        format!("{fam}.{}", self.index())
    }

    pub fn parse(id: &str) -> Result<Self> {
        let (fam, idx) = id.split_once('.').ok_or_else(|| Error::Config(format!("bad point id {id:?}")))?;
        let i: u8 = idx.parse().map_err(|_| Error::Config(format!("bad point index in {id:?}")))?;
        let pt = match fam {
            "q1neg" => LimitPoint::Q1neg(i),
            "q2neg" => LimitPoint::Q2neg(i),
            "balanced" => LimitPoint::Balanced(i),
            _ => return Err(Error::Config(format!("unknown regime in point id {id:?}"))),
        };
        let max = if fam == "balanced" { 2 } else { 4 };
        if i > max {
            return Err(Error::Config(format!("point index {i} out of range in {id:?}")));
        }
        Ok(pt)
    }

    pub fn all() -> Vec<LimitPoint> {
        let mut v: Vec<_> = (0..=4).map(LimitPoint::Q1neg).collect();
        v.extend((0..=4).map(LimitPoint::Q2neg));
        v.extend((0..=2).map(LimitPoint::Balanced));
        v
    }
}

/// Arguments of a limit point; each point reads the fields it needs.
/// `time` is `a` for points on the `m = a n` scale and `t` for the others.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LimitArgs {
    #[serde(default)]
    pub time: f64,
    #[serde(default)]
    pub s1: f64,
    #[serde(default)]
    pub s2: f64,
    #[serde(default)]
    pub lambda1: f64,
    #[serde(default)]
    pub lambda2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitEvaluation {
    pub value: f64,
    pub method: Method,
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} not in [0, 1]")))
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} not in (0, 1)")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} must be positive")))
    }
}

/// `1 - (1 + x^(-a))^(-1/a)`, the Laplace transform shape shared by several points.
fn stable_shape(x: f64, a: f64, outer: f64) -> f64 {
    1.0 - (1.0 + x.powf(-a)).powf(-outer)
}

pub fn limit_reduced_transform(p: &ModelParams, point: LimitPoint, x: &LimitArgs) -> Result<LimitEvaluation> {
    let regime = classify_regime(p);
    if regime != point.regime() {
        return Err(Error::RegimeMismatch { expected: point.regime(), actual: regime });
    }
    let (a1, a2, a21) = (p.alpha1(), p.alpha2(), p.a21());
    let closed = |value| Ok(LimitEvaluation { value, method: Method::ClosedForm });
    let ode = |value| Ok(LimitEvaluation { value, method: Method::Ode });
    match point {
        LimitPoint::Q1neg(0) | LimitPoint::Q2neg(0) | LimitPoint::Balanced(0) => {
            unit("s2", x.s2)?;
            closed(x.s2)
        }
        LimitPoint::Q1neg(1) => {
            open_unit("a", x.time)?;
            unit("s2", x.s2)?;
            let a = x.time;
            closed(1.0 - (a + (1.0 - a) * (1.0 - x.s2).powf(-a2)).powf(-1.0 / a2))
        }
        LimitPoint::Q1neg(2) => {
            check_lambdas(0.0, x.lambda2)?;
            closed(stable_shape(x.lambda2, a2, 1.0 / a2))
        }
        LimitPoint::Q1neg(3) => {
            positive("t", x.time)?;
            unit("s1", x.s1)?;
            check_lambdas(0.0, x.lambda2)?;
            let inner = x.time.powf(1.0 - 1.0 / a1) * (1.0 - x.s1).powf(1.0 - a1) + x.lambda2;
            closed(stable_shape(inner, a2, 1.0 / a2))
        }
        LimitPoint::Q1neg(4) => {
            check_lambdas(x.lambda1, x.lambda2)?;
            closed(stable_shape(x.lambda1.powf(1.0 - a1) + x.lambda2, a2, 1.0 / a2))
        }
        LimitPoint::Q2neg(1) => {
            positive("t", x.time)?;
            unit("s1", x.s1)?;
            unit("s2", x.s2)?;
            let t = x.time;
            let l1 = (1.0 - x.s1) * t.powf(1.0 / a2 + 1.0) / (a2 * a21);
            let l2 = (1.0 - x.s2) * t.powf(1.0 / a2);
            ode(1.0 - t.powf(-1.0 / a2) * phi(p, l1, l2, DEFAULT_TOL)?)
        }
        LimitPoint::Q2neg(2) => {
            unit("s1", x.s1)?;
            closed(1.0 - (1.0 - x.s1).powf(1.0 / (1.0 + a2)))
        }
        LimitPoint::Q2neg(3) => {
            open_unit("a", x.time)?;
            unit("s1", x.s1)?;
            let a = x.time;
            closed(1.0 - (a + (1.0 - a) * (1.0 - x.s1).powf(-a1)).powf(-1.0 / (a1 * (1.0 + a2))))
        }
        LimitPoint::Q2neg(4) => {
            check_lambdas(x.lambda1, 0.0)?;
            closed(stable_shape(x.lambda1, a1, 1.0 / (a1 * (1.0 + a2))))
        }
        LimitPoint::Balanced(1) => {
            open_unit("a", x.time)?;
            unit("s1", x.s1)?;
            unit("s2", x.s2)?;
            let c = intermediate_constants(p)?;
            let a = x.time;
            let r = a / (1.0 - a);
            let l1 = (1.0 - x.s1) * c.sigma / c.b * r.powf(1.0 / a1);
            let l2 = (1.0 - x.s2) * r.powf(1.0 / a2);
            ode(1.0 - a.powf(-1.0 / a2) * psi_with(p, &c, l1, l2, DEFAULT_TOL)?)
        }
        LimitPoint::Balanced(2) => {
            let c = intermediate_constants(p)?;
            ode(1.0 - psi_with(p, &c, x.lambda1, x.lambda2, DEFAULT_TOL)?)
        }
        _ => Err(domain(format!("no limit point {}", point.id()))),
    }
}

/// Closed-form MRCA limit probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MrcaQuery {
    /// `P(beta_n <= a n, T_n = 2)` when type-1 survival is negligible.
    Q1negType2 { a: f64 },
    /// `P(beta_n <= t g*(n), T_n = 2)` when type-2 survival is negligible.
    Q2negType2Early { t: f64 },
    /// `P(g*(n) << beta_n <= a n, T_n = 1)` when type-2 survival is negligible.
    Q2negType1 { a: f64 },
    /// `P(beta_n <= a n)` in the balanced regime.
    BalancedBeta { a: f64 },
    /// `P(T_n = 2)` in the balanced regime.
    BalancedType2,
    /// `P(delta_n(2) <= t g*(n))` for the last type-2 ancestor.
    Delta2 { t: f64 },
}

pub fn mrca_limit(p: &ModelParams, q: MrcaQuery) -> Result<f64> {
    let regime = classify_regime(p);
    let need = |want: Regime| {
        if regime == want {
            Ok(())
        } else {
            Err(Error::RegimeMismatch { expected: want, actual: regime })
        }
    };
    let a2 = p.alpha2();
    let unit_closed = |name: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(domain(format!("{name} = {v} not in [0, 1]")))
        }
    };
    match q {
        MrcaQuery::Q1negType2 { a } => {
            need(Regime::Q1Negligible)?;
            unit_closed("a", a)?;
            Ok(a)
        }
        MrcaQuery::Q2negType2Early { t } => {
            need(Regime::Q2Negligible)?;
            if !(t >= 0.0) {
                return Err(domain(format!("t = {t} must be >= 0")));
            }
            Ok(a2 / (1.0 + a2) * -(-(1.0 + a2) * t / a2).exp_m1())
        }
        MrcaQuery::Q2negType1 { a } => {
            need(Regime::Q2Negligible)?;
            unit_closed("a", a)?;
            Ok(a / (1.0 + a2))
        }
        MrcaQuery::BalancedBeta { a } => {
            unit_closed("a", a)?;
            let c = intermediate_constants(p)?;
            Ok(1.0 - (1.0 - a) / (1.0 + a2) - a2 / (1.0 + a2) * (1.0 - a).powf(c.kappa))
        }
        MrcaQuery::BalancedType2 => {
            let c = intermediate_constants(p)?;
            let bp = c.b.powf(a2);
            Ok(a2 * bp / ((1.0 + a2) * bp - 1.0))
        }
        MrcaQuery::Delta2 { t } => {
            need(Regime::Q2Negligible)?;
            if !(t >= 0.0) {
                return Err(domain(format!("t = {t} must be >= 0")));
            }
            Ok(1.0 - (1.0 + t).powf(-1.0 / a2))
        }
    }
}

/// CDF of the first branching time of the balanced-regime limit process `W`
/// started from one type-2 particle.
pub fn w_first_branching_cdf(p: &ModelParams, t: f64) -> Result<f64> {
    let c = intermediate_constants(p)?;
    let a2 = p.alpha2();
    if t <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 - (-t).exp() / (1.0 + a2) - a2 / (1.0 + a2) * (-c.kappa * t).exp())
}

/// Exponent convention for the G process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GConvention {
    /// Marginal with `t^(1/a1 - 1)` and the transition read with `t0 < t1`,
    /// exactly as displayed in the definition.
    Literal,
    /// Marginal with `t^(1 - 1/a1)` and transitions from the earlier time `t0 > t1`,
    /// matching the `m = n - t h*(n)` parameterization.
    Reparam,
}

/// Marginal transform `E[s1^G1(t) e^(-l2 G2(t))]`.
pub fn g_process_marginal(a1: f64, a2: f64, t: f64, s1: f64, l2: f64, conv: GConvention) -> Result<f64> {
    positive("t", t)?;
    unit("s1", s1)?;
    check_lambdas(0.0, l2)?;
    let e = match conv {
        GConvention::Literal => 1.0 / a1 - 1.0,
        GConvention::Reparam => 1.0 - 1.0 / a1,
    };
    let inner = t.powf(e) * (1.0 - s1).powf(1.0 - a1) + l2;
    Ok(stable_shape(inner, a2, 1.0 / a2))
}

/// The transition transform is `base^n1 * exp(-rate * y)`; returns `(base, rate)`.
pub fn g_transition_parts(a1: f64, t0: f64, t1: f64, s1: f64, l2: f64) -> Result<(f64, f64)> {
    positive("t0", t0)?;
    positive("t1", t1)?;
    unit("s1", s1)?;
    check_lambdas(0.0, l2)?;
    let u = 1.0 - s1;
    let r = t1 / t0;
    let base = 1.0 - (1.0 - r + r * u.powf(-a1)).powf(-1.0 / a1);
    let bracket = 1.0 - (1.0 + (t0 / t1 - 1.0) * u.powf(a1)).powf(1.0 - 1.0 / a1);
    let rate = t1.powf(1.0 - 1.0 / a1) * u.powf(1.0 - a1) * bracket + l2;
    Ok((base, rate))
}

#[allow(clippy::too_many_arguments)]
pub fn g_process_transition(a1: f64, _a2: f64, t0: f64, t1: f64, n1: u64, y: f64, s1: f64, l2: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(domain(format!("y = {y} must be >= 0")));
    }
    let (base, rate) = g_transition_parts(a1, t0, t1, s1, l2)?;
    Ok(base.powi(n1 as i32) * (-rate * y).exp())
}

/// Joint transform of `G` at two times, composed from marginal and transition.
/// `early`/`late` refer to generations `n - t h*`: `early.0 > late.0`.
/// Each state carries `(t, s1, lambda2)`.
pub fn g_two_time(a1: f64, a2: f64, early: (f64, f64, f64), late: (f64, f64, f64), conv: GConvention) -> Result<f64> {
    let (te, se, le) = early;
    let (tl, sl, ll) = late;
    match conv {
        GConvention::Reparam => {
            let (base, rate) = g_transition_parts(a1, te, tl, sl, ll)?;
            g_process_marginal(a1, a2, te, se * base, le + rate, conv)
        }
        GConvention::Literal => {
            // display ordering t0 < t1: condition on the smaller time
            let (base, rate) = g_transition_parts(a1, tl, te, se, le)?;
            g_process_marginal(a1, a2, tl, sl * base, ll + rate, conv)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, c: f64) -> ModelParams {
        ModelParams::new(a, b, c).unwrap()
    }

    #[test]
    fn phi_origin_and_tanh_example() {
        let p = params(1.0, 1.0, 0.25);
        assert_eq!(phi(&p, 0.0, 0.0, DEFAULT_TOL).unwrap(), 0.0);
        let v = phi(&p, 4.0, 0.0, DEFAULT_TOL).unwrap();
        assert!((v - 1f64.tanh()).abs() < 1e-8, "{v}");
    }

    #[test]
    fn phi_matches_tanh_grid() {
        let p = params(1.0, 1.0, 0.3);
        for i in 1..=10 {
            for j in 1..=10 {
                let x = 0.4 * i as f64;
                let l2 = 0.4 * j as f64;
                let l1 = x / p.a21();
                let got = phi(&p, l1, l2, DEFAULT_TOL).unwrap();
                let want = phi_tanh(p.a21(), l1, l2);
                assert!((got - want).abs() < 1e-6, "({x}, {l2}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn phi_axis_identity() {
        for &a2 in &[0.5, 0.75, 1.0] {
            let p = params(0.3, a2, 0.2);
            for &l2 in &[0.01, 0.5, 1.0, 3.0, 50.0] {
                let got = phi(&p, 0.0, l2, DEFAULT_TOL).unwrap();
                let want = l2 * (1.0 + l2.powf(a2)).powf(-1.0 / a2);
                assert!((got - want).abs() < 1e-6, "a2={a2} l2={l2}: {got} vs {want}");
            }
            let one = phi(&p, 0.0, 1.0, DEFAULT_TOL).unwrap();
            assert!((one - 2f64.powf(-1.0 / a2)).abs() < 1e-6);
        }
    }

    #[test]
    fn phi_large_lambda1_constant() {
        for &(a2, a21) in &[(1.0, 0.3), (0.9, 0.4), (0.5, 0.5)] {
            let p = params(0.2, a2, a21);
            let x = 1e4;
            let r = phi(&p, x, 0.0, DEFAULT_TOL).unwrap() / x.powf(1.0 / (1.0 + a2));
            let want = (a2 * a21).powf(1.0 / (1.0 + a2));
            assert!((r / want - 1.0).abs() < 0.02, "a2={a2}: r = {r}, want {want}");
        }
    }

    #[test]
    fn psi_slopes_at_origin() {
        let p = params(0.5, 1.0, 0.3);
        let eps = 1e-6;
        let s2 = psi(&p, 0.0, eps, DEFAULT_TOL).unwrap() / eps;
        assert!((s2 - 1.0).abs() < 1e-4, "{s2}");
        // Along lambda2 = 0 the next term is -K l1^(1+a1) with
        // K ((1+a2)(1+a1) - 1) = a2 A21 (b/sigma)^a1 / a1, so the slope error is O(eps^a1).
        let c = intermediate_constants(&p).unwrap();
        let k = 0.3 * (c.b / c.sigma).sqrt() / 0.5 / (2.0 * 1.5 - 1.0);
        for &e in &[1e-6, 1e-8] {
            let s1 = psi(&p, e, 0.0, DEFAULT_TOL).unwrap() / e;
            assert!((s1 - (0.3 - k * e.sqrt())).abs() < 1e-3 * k * e.sqrt(), "{s1}");
        }
        let s1 = psi(&p, 1e-8, 0.0, DEFAULT_TOL).unwrap() / 1e-8;
        assert!((s1 - 0.3).abs() < 1e-4, "{s1}");
        assert_eq!(psi(&p, 0.0, 0.0, DEFAULT_TOL).unwrap(), 0.0);
        assert!(psi(&params(0.4, 1.0, 0.3), 1.0, 1.0, DEFAULT_TOL).is_err());
    }

    fn pde_residual<F: Fn(f64, f64) -> f64>(f: F, l1: f64, l2: f64, a2: f64, rhs: f64) -> f64 {
        let h1 = 1e-4 * l1.max(1e-3);
        let h2 = 1e-4 * l2.max(1e-3);
        let d1 = (f(l1 + h1, l2) - f(l1 - h1, l2)) / (2.0 * h1);
        let d2 = (f(l1, l2 + h2) - f(l1, l2 - h2)) / (2.0 * h2);
        (1.0 + a2) * l1 * d1 + l2 * d2 - rhs
    }

    #[test]
    fn psi_solves_its_pde() {
        let p = params(0.5, 1.0, 0.3);
        let c = intermediate_constants(&p).unwrap();
        let f = |x: f64, y: f64| psi_with(&p, &c, x, y, 1e-12).unwrap();
        for &l1 in &[0.1, 0.7, 2.0, 5.0] {
            for &l2 in &[0.1, 0.9, 3.0] {
                let v = f(l1, l2);
                let rhs = v - c.b * v * v + 0.3 * l1 * (1.0 + (c.b * l1 / c.sigma).sqrt()).powi(-2);
                let res = pde_residual(f, l1, l2, 1.0, rhs);
                assert!(res.abs() < 1e-4, "({l1},{l2}): residual {res}");
            }
        }
    }

    #[test]
    fn phi_solves_its_pde_for_fractional_alpha() {
        let p = params(0.9, 0.6, 0.4);
        let f = |x: f64, y: f64| phi(&p, x, y, 1e-12).unwrap();
        for &l1 in &[0.2, 1.5, 6.0] {
            for &l2 in &[0.3, 2.0] {
                let v = f(l1, l2);
                let rhs = v - v.powf(1.6) + 0.6 * 0.4 * l1;
                let res = pde_residual(f, l1, l2, 0.6, rhs);
                assert!(res.abs() < 1e-4, "({l1},{l2}): residual {res}");
            }
        }
    }

    #[test]
    fn phi_psi_monotone_and_concave_on_rays() {
        let p = params(0.5, 1.0, 0.3);
        let c = intermediate_constants(&p).unwrap();
        for &(d1, d2) in &[(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.5)] {
            let f = |r: f64| phi(&p, r * d1, r * d2, 1e-12).unwrap();
            let g = |r: f64| psi_with(&p, &c, r * d1, r * d2, 1e-12).unwrap();
            for k in 1..20 {
                let r = 0.25 * k as f64;
                let h = 0.25;
                for h_fn in [&f as &dyn Fn(f64) -> f64, &g] {
                    let (a, b, cc) = (h_fn(r - h), h_fn(r), h_fn(r + h));
                    assert!(cc >= b - 1e-12 && b >= a - 1e-12);
                    assert!(a + cc - 2.0 * b <= 1e-8, "ray ({d1},{d2}) at r={r}");
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let p = params(0.4, 1.0, 0.3);
        let v = limit_reduced_transform(&p, LimitPoint::Q1neg(1), &LimitArgs { time: 0.5, s2: 0.5, ..Default::default() })
            .unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(v.method, Method::ClosedForm);
        let q = params(0.9, 1.0, 0.3);
        let v = limit_reduced_transform(&q, LimitPoint::Q2neg(2), &LimitArgs { s1: 0.75, ..Default::default() }).unwrap();
        assert!((v.value - 0.5).abs() < 1e-15);
        // point 2 at lambda2 = 0 has full deficit; decreasing to 0 as lambda2 grows
        let at = |l: f64| {
            limit_reduced_transform(&p, LimitPoint::Q1neg(2), &LimitArgs { lambda2: l, ..Default::default() })
                .unwrap()
                .value
        };
        assert_eq!(at(0.0), 1.0);
        let mut prev = 1.0;
        for k in 1..40 {
            let v = at(1.5f64.powi(k));
            assert!(v <= prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-6);
        assert!(limit_reduced_transform(&p, LimitPoint::Q2neg(2), &LimitArgs::default()).is_err());
        assert!(limit_reduced_transform(&p, LimitPoint::Q1neg(1), &LimitArgs { time: 1.5, ..Default::default() }).is_err());
    }

    #[test]
    fn limits_at_unit_argument() {
        let sets = [params(0.4, 1.0, 0.3), params(0.9, 0.9, 0.4), params(0.5, 1.0, 0.3)];
        let one = LimitArgs { time: 0.5, s1: 1.0, s2: 1.0, lambda1: 0.0, lambda2: 0.0 };
        for p in &sets {
            for pt in LimitPoint::all().into_iter().filter(|pt| pt.regime() == p.regime()) {
                let v = limit_reduced_transform(p, pt, &one).unwrap().value;
                assert!((v - 1.0).abs() < 1e-12, "{} gives {v}", pt.id());
            }
        }
    }

    #[test]
    fn point_ids_roundtrip() {
        for pt in LimitPoint::all() {
            assert_eq!(LimitPoint::parse(&pt.id()).unwrap(), pt);
        }
        assert!(LimitPoint::parse("balanced.3").is_err());
        assert!(LimitPoint::parse("nope.1").is_err());
    }

    #[test]
    fn mrca_examples() {
        let p = params(0.4, 1.0, 0.3);
        assert_eq!(mrca_limit(&p, MrcaQuery::Q1negType2 { a: 0.3 }).unwrap(), 0.3);
        let q = params(0.9, 1.0, 0.3);
        let t2 = mrca_limit(&q, MrcaQuery::Q2negType2Early { t: 1e6 }).unwrap();
        let t1 = mrca_limit(&q, MrcaQuery::Q2negType1 { a: 1.0 }).unwrap();
        assert!((t2 - 0.5).abs() < 1e-15 && (t1 - 0.5).abs() < 1e-15);
        // b = 2 needs sigma A21 = 2; sigma = 4.5 at (0.5, 1)
        let w = params(0.5, 1.0, 4.0 / 9.0);
        let c = intermediate_constants(&w).unwrap();
        assert!((c.b - 2.0).abs() < 1e-12);
        let pt2 = mrca_limit(&w, MrcaQuery::BalancedType2).unwrap();
        assert!((pt2 - 2.0 / 3.0).abs() < 1e-12);
        let at0 = mrca_limit(&w, MrcaQuery::BalancedBeta { a: 0.0 }).unwrap();
        let at1 = mrca_limit(&w, MrcaQuery::BalancedBeta { a: 1.0 }).unwrap();
        assert!(at0.abs() < 1e-15 && (at1 - 1.0).abs() < 1e-15);
        assert!(mrca_limit(&p, MrcaQuery::BalancedType2).is_err());
    }

    #[test]
    fn w_branching_cdf_matches_mixture_form() {
        let p = params(0.5, 1.0, 0.3);
        let c = intermediate_constants(&p).unwrap();
        let k = c.kappa;
        for &t in &[0.1, 0.5, 1.0, 3.0] {
            let mix = c.b / k * (1.0 - (-k * t).exp())
                + c.sigma * p.a21() / (c.b * k) * (1.0 + (-k * t).exp() / (k - 1.0) - k * (-t).exp() / (k - 1.0));
            assert!((w_first_branching_cdf(&p, t).unwrap() - mix).abs() < 1e-13);
        }
    }

    #[test]
    fn g_process_degenerate_cases() {
        let (a1, a2) = (0.4, 1.0);
        for conv in [GConvention::Literal, GConvention::Reparam] {
            let v = g_process_marginal(a1, a2, 1.7, 1.0, 0.8, conv).unwrap();
            let theta2 = 1.0 - (1.0 + 0.8f64.powf(-a2)).powf(-1.0 / a2);
            assert!((v - theta2).abs() < 1e-15);
        }
        let (base, rate) = g_transition_parts(a1, 1.3, 1.3, 0.35, 0.6).unwrap();
        assert!((base - 0.35).abs() < 1e-14);
        assert!((rate - 0.6).abs() < 1e-14);
        let tr = g_process_transition(a1, a2, 1.3, 1.3, 3, 2.0, 0.35, 0.6).unwrap();
        assert!((tr - 0.35f64.powi(3) * (-1.2f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn reparam_convention_is_chapman_kolmogorov_consistent() {
        // marginal at the later time = transition from the earlier time with trivial early args
        let (a1, a2) = (0.4, 1.0);
        for &(te, tl, s, l) in &[(2.0, 0.5, 0.3, 0.7), (1.5, 1.0, 0.8, 0.1), (4.0, 0.2, 0.0, 2.0)] {
            let direct = g_process_marginal(a1, a2, tl, s, l, GConvention::Reparam).unwrap();
            let comp = g_two_time(a1, a2, (te, 1.0, 0.0), (tl, s, l), GConvention::Reparam).unwrap();
            assert!((direct - comp).abs() < 1e-12, "{direct} vs {comp}");
        }
        let lit = g_two_time(a1, a2, (2.0, 0.4, 0.3), (0.5, 0.3, 0.7), GConvention::Literal).unwrap();
        let rep = g_two_time(a1, a2, (2.0, 0.4, 0.3), (0.5, 0.3, 0.7), GConvention::Reparam).unwrap();
        assert!((lit - rep).abs() > 1e-3);
    }
}
