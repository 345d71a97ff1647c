//! Model parameters, regime classification and the offspring generating functions.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance used when deciding whether `1/alpha1 == 1 + 1/alpha2`.
pub const REGIME_TOL: f64 = 1e-12;

/// A validated parameter triple `(alpha1, alpha2, A21)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    alpha1: f64,
    alpha2: f64,
    a21: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RawParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub a21: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.alpha1, r.alpha2, r.a21)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { alpha1: p.alpha1, alpha2: p.alpha2, a21: p.a21 }
    }
}

impl ModelParams {
    pub fn new(alpha1: f64, alpha2: f64, a21: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !alpha1.is_finite() || !(alpha1 > 0.0 && alpha1 <= 1.0) {
            return bad(format!("alpha1 = {alpha1} not in (0, 1]"));
        }
        if !alpha2.is_finite() || !(alpha2 > 0.0 && alpha2 <= 1.0) {
            return bad(format!("alpha2 = {alpha2} not in (0, 1]"));
        }
        let cap = 1.0 / (1.0 + alpha2);
        if !a21.is_finite() || !(a21 > 0.0 && a21 <= cap) {
            return bad(format!("A21 = {a21} not in (0, {cap}]"));
        }
        Ok(ModelParams { alpha1, alpha2, a21 })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }
    pub fn a21(&self) -> f64 {
        self.a21
    }

    /// `1 + alpha1 (1 + alpha2)`, the stable index of the V process.
    pub fn gamma1(&self) -> f64 {
        1.0 + self.alpha1 * (1.0 + self.alpha2)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }
}

pub fn validate_params(alpha1: f64, alpha2: f64, a21: f64) -> Result<ModelParams> {
    ModelParams::new(alpha1, alpha2, a21)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    /// `1/alpha1 > 1 + 1/alpha2`: type-1 survival is negligible.
    Q1Negligible,
    /// `1/alpha1 = 1 + 1/alpha2`.
    IntermediateVasag,
    /// `1/alpha1 < 1 + 1/alpha2`: type-2 survival is negligible.
    Q2Negligible,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Q1Negligible => "Q1_NEGLIGIBLE",
            Regime::IntermediateVasag => "INTERMEDIATE_VASAG",
            Regime::Q2Negligible => "Q2_NEGLIGIBLE",
        }
    }
}

pub fn classify_regime(p: &ModelParams) -> Regime {
    let lhs = 1.0 / p.alpha1;
    let rhs = 1.0 + 1.0 / p.alpha2;
    if (lhs - rhs).abs() <= REGIME_TOL * rhs {
        Regime::IntermediateVasag
    } else if lhs > rhs {
        Regime::Q1Negligible
    } else {
        Regime::Q2Negligible
    }
}

/// Constants of the balanced regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntermediateConstants {
    pub sigma: f64,
    pub b: f64,
    pub kappa: f64,
    pub gamma1: f64,
}

pub fn intermediate_constants(p: &ModelParams) -> Result<IntermediateConstants> {
    let regime = classify_regime(p);
    if regime != Regime::IntermediateVasag {
        return Err(Error::RegimeMismatch { expected: Regime::IntermediateVasag, actual: regime });
    }
    let (a1, a2) = (p.alpha1, p.alpha2);
    let sigma = ((1.0 + a1) / a1).powf(1.0 / a1) / ((1.0 + a2) / a2).powf(1.0 / a2);
    let b = solve_b(a2, sigma * a2 * p.a21)?;
    let kappa = ((1.0 + a2) * b.powf(a2) - 1.0) / a2;
    Ok(IntermediateConstants { sigma, b, kappa, gamma1: p.gamma1() })
}

/// Root `b > 1` of `b^(1+alpha2) - b = c`, `c > 0`.
fn solve_b(alpha2: f64, c: f64) -> Result<f64> {
    let f = |b: f64| b.powf(1.0 + alpha2) - b - c;
    let df = |b: f64| (1.0 + alpha2) * b.powf(alpha2) - 1.0;
    let (mut lo, mut hi) = (1.0, 1.0 + c.powf(1.0 / (1.0 + alpha2)) + c);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = fx / df(x);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * next {
            return Ok(next);
        }
        x = next;
    }
    if hi - lo <= 1e-12 * hi {
        Ok(x)
    } else {
        Err(Error::Numerical(format!("no convergence solving for b (c = {c})")))
    }
}

fn check_unit(name: &str, s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(domain(format!("{name} = {s} not in [0, 1]")))
    }
}

/// `F1(s) = s + (1-s)^(1+alpha1)/(1+alpha1)`.
pub fn pgf_type1(p: &ModelParams, s1: f64) -> Result<f64> {
    check_unit("s1", s1)?;
    let u = 1.0 - s1;
    Ok(s1 + u.powf(1.0 + p.alpha1) / (1.0 + p.alpha1))
}

/// `F21(s1, s2) = s2 + (1-s2)^(1+alpha2)/(1+alpha2) - A21 (1 - s1)`.
pub fn pgf_type2(p: &ModelParams, s1: f64, s2: f64) -> Result<f64> {
    check_unit("s1", s1)?;
    check_unit("s2", s2)?;
    let u = 1.0 - s2;
    Ok(s2 + u.powf(1.0 + p.alpha2) / (1.0 + p.alpha2) - p.a21 * (1.0 - s1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_boundaries() {
        assert!(ModelParams::new(1.0, 1.0, 0.5).is_ok());
        assert!(ModelParams::new(0.0, 1.0, 0.3).is_err());
        assert!(ModelParams::new(0.5, 1.2, 0.3).is_err());
        assert!(ModelParams::new(0.5, 1.0, 0.51).is_err());
        assert!(ModelParams::new(0.5, 1.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 0.3).is_err());
    }

    #[test]
    fn regimes_of_canonical_sets() {
        let r = |a, b, c| classify_regime(&ModelParams::new(a, b, c).unwrap());
        assert_eq!(r(0.4, 1.0, 0.3), Regime::Q1Negligible);
        assert_eq!(r(0.5, 1.0, 0.3), Regime::IntermediateVasag);
        assert_eq!(r(0.9, 0.9, 0.4), Regime::Q2Negligible);
        assert_eq!(r(1.0, 1.0, 0.3), Regime::Q2Negligible);
        // 1/alpha1 = 1 + 1/alpha2 with alpha2 = 1/3 gives alpha1 = 1/4.
        assert_eq!(r(0.25, 1.0 / 3.0, 0.3), Regime::IntermediateVasag);
    }

    #[test]
    fn balanced_constants() {
        let p = ModelParams::new(0.5, 1.0, 0.3).unwrap();
        let c = intermediate_constants(&p).unwrap();
        assert!((c.sigma - 4.5).abs() < 1e-12);
        let b = (1.0 + 6.4f64.sqrt()) / 2.0;
        assert!((c.b - b).abs() < 1e-12);
        assert!((c.kappa - (2.0 * b - 1.0)).abs() < 1e-12);
        assert!((c.gamma1 - 2.0).abs() < 1e-15);
        // sigma A21/(b kappa) + b^alpha2/kappa = 1
        let mix = c.sigma * p.a21() / (c.b * c.kappa) + c.b / c.kappa;
        assert!((mix - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constants_need_balanced_regime() {
        let p = ModelParams::new(0.4, 1.0, 0.3).unwrap();
        assert!(matches!(intermediate_constants(&p), Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn pgf_values() {
        let p = ModelParams::new(1.0, 1.0, 0.3).unwrap();
        assert_eq!(pgf_type1(&p, 1.0).unwrap(), 1.0);
        assert!((pgf_type1(&p, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pgf_type2(&p, 0.0, 0.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(pgf_type1(&p, 1.5).is_err());
    }
}
