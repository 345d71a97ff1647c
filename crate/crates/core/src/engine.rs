//! Exact finite-n engine working in deficit space (`1 - pgf`).
//!
//! Deficit recursions of the concrete family:
//! `q1 <- q1 - q1^(1+a1)/(1+a1)`, `q2 <- q2 - q2^(1+a2)/(1+a2) + A21 q1` (old `q1`).

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::params::{classify_regime, intermediate_constants, ModelParams, Regime};

pub const DEFAULT_HORIZON_CAP: u64 = 1 << 24;

/// One generation of a two-type deficit map.
pub trait DeficitMap {
    fn step(&self, q1: f64, q2: f64) -> (f64, f64);
}

/// Deficit map of the concrete offspring family.
#[derive(Clone, Copy, Debug)]
pub struct ConcreteMap {
    a1: f64,
    a2: f64,
    a21: f64,
}

impl ConcreteMap {
    pub fn new(p: &ModelParams) -> Self {
        ConcreteMap { a1: p.alpha1(), a2: p.alpha2(), a21: p.a21() }
    }

    #[inline]
    pub fn step1(&self, q1: f64) -> f64 {
        q1 - q1 * q1.powf(self.a1) / (1.0 + self.a1)
    }

    #[inline]
    pub fn step2_only(&self, q2: f64) -> f64 {
        q2 - q2 * q2.powf(self.a2) / (1.0 + self.a2)
    }
}

impl DeficitMap for ConcreteMap {
    #[inline]
    fn step(&self, q1: f64, q2: f64) -> (f64, f64) {
        (self.step1(q1), self.step2_only(q2) + self.a21 * q1)
    }
}

/// Iterate any deficit map `m` times.
pub fn deficit_iterate_with<M: DeficitMap>(map: &M, m: u64, q1: f64, q2: f64) -> (f64, f64) {
    let (mut a, mut b) = (q1, q2);
    for _ in 0..m {
        (a, b) = map.step(a, b);
    }
    (a, b)
}

/// Deficits after `m` generations together with their derivatives
/// with respect to the initial deficits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeficitState {
    pub q1: f64,
    pub q2: f64,
    /// `d q1 / d q1(0)`
    pub d11: f64,
    /// `d q2 / d q1(0)`
    pub d21: f64,
    /// `d q2 / d q2(0)`
    pub d22: f64,
}

pub fn deficit_iterate(p: &ModelParams, m: u64, q1: f64, q2: f64) -> Result<DeficitState> {
    if !(0.0..=1.0).contains(&q1) || !(0.0..=1.0).contains(&q2) {
        return Err(domain(format!("initial deficits ({q1}, {q2}) outside [0, 1]")));
    }
    let map = ConcreteMap::new(p);
    let mut st = DeficitState { q1, q2, d11: 1.0, d21: 0.0, d22: 1.0 };
    for _ in 0..m {
        let g1 = q1_pow(st.q1, map.a1);
        let g2 = q1_pow(st.q2, map.a2);
        st.d21 = (1.0 - g2) * st.d21 + map.a21 * st.d11;
        st.d11 *= 1.0 - g1;
        st.d22 *= 1.0 - g2;
        let nq1 = st.q1 - st.q1 * g1 / (1.0 + map.a1);
        st.q2 = st.q2 - st.q2 * g2 / (1.0 + map.a2) + map.a21 * st.q1;
        st.q1 = nq1;
    }
    Ok(st)
}

#[inline]
fn q1_pow(q: f64, a: f64) -> f64 {
    q.powf(a)
}

/// Survival tables `Q1(k)`, `Q2(k)`, `Q21(k)` for `k = 0..=horizon`.
#[derive(Clone, Debug)]
pub struct QTables {
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub q21: Vec<f64>,
}

impl QTables {
    pub fn build(p: &ModelParams, horizon: u64, cap: u64) -> Result<Self> {
        if horizon > cap {
            return Err(Error::HorizonExceeded { requested: horizon, cap });
        }
        let map = ConcreteMap::new(p);
        let len = horizon as usize + 1;
        let (mut q1, mut q2, mut q21) =
            (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        let (mut a, mut b, mut c) = (1.0, 1.0, 1.0);
        for _ in 0..len {
            q1.push(a);
            q2.push(b);
            q21.push(c);
            let na = map.step1(a);
            b = map.step2_only(b);
            c = map.step2_only(c) + map.a21 * a;
            a = na;
        }
        Ok(QTables { q1, q2, q21 })
    }

    pub fn horizon(&self) -> u64 {
        self.q1.len() as u64 - 1
    }
}

/// Value of a conditional transform and its partial derivatives in `s1`, `s2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformValue {
    pub value: f64,
    /// `1 - value`, computed without cancellation.
    pub deficit: f64,
    pub d_ds1: f64,
    pub d_ds2: f64,
}

/// Exact laws of the MRCA, one entry per generation `m = 0..=n`.
#[derive(Clone, Debug, Serialize)]
pub struct MrcaProfile {
    pub n: u64,
    /// `P(Z(m,n) = e1 | Z(n) != 0)`
    pub p1: Vec<f64>,
    /// `P(Z(m,n) = e2 | Z(n) != 0)`
    pub p2: Vec<f64>,
    /// `P(beta_n = m, T_n = 1)`, `m < n`
    pub jump1: Vec<f64>,
    /// `P(beta_n = m, T_n = 2)`, `m < n`
    pub jump2: Vec<f64>,
}

impl MrcaProfile {
    /// `P(beta_n >= m)`.
    pub fn beta_at_least(&self, m: u64) -> f64 {
        let m = m as usize;
        if m >= self.p1.len() {
            return 0.0;
        }
        self.p1[m] + self.p2[m]
    }

    /// `P(lo < beta_n <= hi, T_n = ty)` with `lo` exclusive; pass `None` for no lower bound.
    pub fn beta_window(&self, ty: u8, lo: Option<u64>, hi: u64) -> f64 {
        let jumps = if ty == 1 { &self.jump1 } else { &self.jump2 };
        let start = lo.map_or(0, |l| l as usize + 1);
        let end = (hi as usize).min(jumps.len().saturating_sub(1));
        if start > end {
            return 0.0;
        }
        jumps[start..=end].iter().sum()
    }

    /// `P(beta_n <= m)`.
    pub fn beta_cdf(&self, m: u64) -> f64 {
        1.0 - self.beta_at_least(m + 1)
    }

    pub fn type2_probability(&self) -> f64 {
        self.jump2.iter().sum()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub n: u64,
    pub regime: Regime,
    pub q21_over_q2: f64,
    /// `Q21^(1+a2) / ((1+a2) A21 Q1)`
    pub q21_balance: f64,
    /// `alpha_i n Q_i^alpha_i / (1 + alpha_i)`
    pub repr_q1: f64,
    pub repr_q2: f64,
    /// `Q_i(n/64; 1 - exp(-2 Q_i(n))) / (2 Q_i(n))`
    pub ltrick_q1: f64,
    pub ltrick_q2: f64,
    /// `Q21/Q2 / b` in the balanced regime.
    pub b_ratio: Option<f64>,
}

/// Finite-n engine with cached survival tables.
#[derive(Clone, Debug)]
pub struct Engine {
    params: ModelParams,
    map: ConcreteMap,
    tables: QTables,
}

impl Engine {
    pub fn new(params: ModelParams, horizon: u64) -> Result<Self> {
        Self::with_cap(params, horizon, DEFAULT_HORIZON_CAP)
    }

    pub fn with_cap(params: ModelParams, horizon: u64, cap: u64) -> Result<Self> {
        let tables = QTables::build(&params, horizon, cap)?;
        Ok(Engine { params, map: ConcreteMap::new(&params), tables })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn horizon(&self) -> u64 {
        self.tables.horizon()
    }

    pub fn tables(&self) -> &QTables {
        &self.tables
    }

    fn check_n(&self, n: u64) -> Result<usize> {
        if n > self.horizon() {
            return Err(Error::HorizonExceeded { requested: n, cap: self.horizon() });
        }
        Ok(n as usize)
    }

    pub fn q1(&self, n: u64) -> Result<f64> {
        Ok(self.tables.q1[self.check_n(n)?])
    }
    pub fn q2(&self, n: u64) -> Result<f64> {
        Ok(self.tables.q2[self.check_n(n)?])
    }
    pub fn q21(&self, n: u64) -> Result<f64> {
        Ok(self.tables.q21[self.check_n(n)?])
    }

    /// `Q1(m; 1 - u)`: type-1 deficit after `m` generations from initial deficit `u`.
    pub fn iterate_q1(&self, m: u64, u: f64) -> f64 {
        let mut q = u;
        for _ in 0..m {
            q = self.map.step1(q);
        }
        q
    }

    /// `Q2(m; 1 - u)` for the pure type-2 map.
    pub fn iterate_q2(&self, m: u64, u: f64) -> f64 {
        let mut q = u;
        for _ in 0..m {
            q = self.map.step2_only(q);
        }
        q
    }

    fn check_window(&self, m: u64, n: u64) -> Result<()> {
        self.check_n(n)?;
        if m > n {
            return Err(domain(format!("m = {m} exceeds n = {n}")));
        }
        Ok(())
    }

    /// `E[s1^Z1(m,n) s2^Z2(m,n) | Z(n) != 0]` from one type-2 ancestor,
    /// with the argument given as deficits `u_i = 1 - s_i`.
    pub fn reduced_transform_deficit(&self, m: u64, n: u64, u1: f64, u2: f64) -> Result<TransformValue> {
        self.check_window(m, n)?;
        if !(0.0..=1.0).contains(&u1) || !(0.0..=1.0).contains(&u2) {
            return Err(domain(format!("deficits ({u1}, {u2}) outside [0, 1]")));
        }
        let r = (n - m) as usize;
        let (a, c) = (self.tables.q1[r], self.tables.q21[r]);
        let st = deficit_iterate(&self.params, m, u1 * a, u2 * c)?;
        let qn = self.tables.q21[n as usize];
        let deficit = st.q2 / qn;
        Ok(TransformValue {
            value: 1.0 - deficit,
            deficit,
            d_ds1: st.d21 * a / qn,
            d_ds2: st.d22 * c / qn,
        })
    }

    pub fn reduced_transform(&self, m: u64, n: u64, s1: f64, s2: f64) -> Result<TransformValue> {
        if !(0.0..=1.0).contains(&s1) || !(0.0..=1.0).contains(&s2) {
            return Err(domain(format!("argument ({s1}, {s2}) outside [0, 1]^2")));
        }
        self.reduced_transform_deficit(m, n, 1.0 - s1, 1.0 - s2)
    }

    /// Deficits of the one-time transforms `J1^(m,n)` (type-1 start) and `J2^(m,n)`.
    fn one_time_deficits(&self, m: u64, n: u64, u1: f64, u2: f64) -> (f64, f64) {
        let r = (n - m) as usize;
        let (a, c) = (self.tables.q1[r], self.tables.q21[r]);
        let (d1, d2) = deficit_iterate_with(&self.map, m, u1 * a, u2 * c);
        (d1 / self.tables.q1[n as usize], d2 / self.tables.q21[n as usize])
    }

    /// `E[S0^Z(k0,n) S1^Z(k1,n) | Z(n) != 0]`, `k0 <= k1 <= n`.
    pub fn two_time_transform(&self, k0: u64, k1: u64, n: u64, s0: (f64, f64), s1: (f64, f64)) -> Result<f64> {
        self.check_window(k1, n)?;
        if k0 > k1 {
            return Err(domain(format!("need k0 <= k1, got {k0} > {k1}")));
        }
        for v in [s0.0, s0.1, s1.0, s1.1] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("argument {v} outside [0, 1]")));
            }
        }
        if s0 == (1.0, 1.0) {
            return Ok(self.reduced_transform(k1, n, s1.0, s1.1)?.value);
        }
        if s1 == (1.0, 1.0) {
            return Ok(self.reduced_transform(k0, n, s0.0, s0.1)?.value);
        }
        Ok(1.0 - self.two_time_deficit_composed(k0, k1, n, s0, s1))
    }

    /// Composition route of the two-time transform, without the degenerate shortcuts.
    pub fn two_time_deficit_composed(&self, k0: u64, k1: u64, n: u64, s0: (f64, f64), s1: (f64, f64)) -> f64 {
        let (d1, d2) = self.one_time_deficits(k1 - k0, n - k0, 1.0 - s1.0, 1.0 - s1.1);
        let w1 = (1.0 - s0.0) + s0.0 * d1;
        let w2 = (1.0 - s0.1) + s0.1 * d2;
        self.one_time_deficits(k0, n, w1, w2).1
    }

    /// `(P(Z(m,n) = e1 | .), P(Z(m,n) = e2 | .))` via the sensitivities of the transform at 0.
    pub fn mrca_probabilities(&self, m: u64, n: u64) -> Result<(f64, f64)> {
        let t = self.reduced_transform(m, n, 0.0, 0.0)?;
        Ok((t.d_ds1, t.d_ds2))
    }

    /// All single-ancestor probabilities for `m = 0..=n` in one backward pass.
    pub fn mrca_profile(&self, n: u64) -> Result<MrcaProfile> {
        let nn = self.check_n(n)?;
        let (a1, a2, a21) = (self.params.alpha1(), self.params.alpha2(), self.params.a21());
        let t = &self.tables;
        let qn = t.q21[nn];
        let mut p1 = vec![0.0; nn + 1];
        let mut p2 = vec![0.0; nn + 1];
        // Walk r = n - m from 0 up to n; g = prod_{j=r}^{n-1} (1 - Q21(j)^a2) and
        // f = d q2(n) / d q1(r) satisfy f(r) = A21 g(r+1) + (1 - Q1(r)^a1) f(r+1).
        let mut g = 1.0;
        let mut f = 0.0;
        p2[0] = 1.0;
        for r in (0..nn).rev() {
            f = a21 * g + (1.0 - t.q1[r].powf(a1)) * f;
            g *= 1.0 - t.q21[r].powf(a2);
            let m = nn - r;
            p1[m] = t.q1[r] * f / qn;
            p2[m] = t.q21[r] * g / qn;
        }
        let mut jump1 = vec![0.0; nn];
        let mut jump2 = vec![0.0; nn];
        for m in 0..nn {
            let r = nn - m;
            let br1 = a1 / (1.0 + a1) * t.q1[r - 1].powf(1.0 + a1) / t.q1[r];
            let br2 = a2 / (1.0 + a2) * t.q21[r - 1].powf(1.0 + a2) / t.q21[r];
            jump1[m] = p1[m] * br1;
            jump2[m] = p2[m] * br2;
        }
        Ok(MrcaProfile { n, p1, p2, jump1, jump2 })
    }

    /// Smallest `h` with `alpha1 A21/(1-alpha1) h Q1(h) <= Q2(n)`, searched past the
    /// maximum of `h Q1(h)`.
    pub fn hstar(&self, n: u64) -> Result<u64> {
        self.require(Regime::Q1Negligible)?;
        let target = self.q2(n)?;
        let (a1, a21) = (self.params.alpha1(), self.params.a21());
        let c = a1 * a21 / (1.0 - a1);
        let q1 = &self.tables.q1;
        let v = |h: usize| c * h as f64 * q1[h];
        let mut peak = 1usize;
        while peak + 1 < q1.len() && v(peak + 1) >= v(peak) {
            peak += 1;
        }
        let last = q1.len() - 1;
        if v(last) > target {
            return Err(Error::HorizonExceeded { requested: n, cap: self.horizon() });
        }
        let (mut lo, mut hi) = (peak, last);
        if v(lo) <= target {
            return Ok(lo as u64);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if v(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi as u64)
    }

    /// Smallest `g` with `Q2(g) <= Q21(n)`.
    pub fn gstar(&self, n: u64) -> Result<u64> {
        self.require(Regime::Q2Negligible)?;
        let target = self.q21(n)?;
        let q2 = &self.tables.q2[..=n as usize];
        Ok(q2.partition_point(|&v| v > target) as u64)
    }

    fn require(&self, want: Regime) -> Result<()> {
        let got = classify_regime(&self.params);
        if got != want {
            return Err(Error::RegimeMismatch { expected: want, actual: got });
        }
        Ok(())
    }

    pub fn asymptotics_diagnostics(&self, n: u64) -> Result<Diagnostics> {
        let nn = self.check_n(n)?;
        let p = &self.params;
        let (a1, a2) = (p.alpha1(), p.alpha2());
        let t = &self.tables;
        let (q1, q2, q21) = (t.q1[nn], t.q2[nn], t.q21[nn]);
        let m = n / 64;
        let lam = 2.0;
        let lt1 = self.iterate_q1(m, -(-lam * q1).exp_m1()) / (lam * q1);
        let lt2 = self.iterate_q2(m, -(-lam * q2).exp_m1()) / (lam * q2);
        let b_ratio = intermediate_constants(p).ok().map(|c| q21 / q2 / c.b);
        Ok(Diagnostics {
            n,
            regime: classify_regime(p),
            q21_over_q2: q21 / q2,
            q21_balance: q21.powf(1.0 + a2) / ((1.0 + a2) * p.a21() * q1),
            repr_q1: a1 * n as f64 * q1.powf(a1) / (1.0 + a1),
            repr_q2: a2 * n as f64 * q2.powf(a2) / (1.0 + a2),
            ltrick_q1: lt1,
            ltrick_q2: lt2,
            b_ratio,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(a: f64, b: f64, c: f64) -> ModelParams {
        ModelParams::new(a, b, c).unwrap()
    }

    #[test]
    fn first_generations_by_hand() {
        let p = params(1.0, 1.0, 0.3);
        let e = Engine::new(p, 4).unwrap();
        let t = e.tables();
        assert_eq!(t.q1[1], 0.5);
        assert_eq!(t.q2[1], 0.5);
        assert!((t.q21[1] - 0.8).abs() < 1e-15);
        // Q21(2) = 0.8 - 0.32 + 0.3 * 0.5
        assert!((t.q21[2] - 0.63).abs() < 1e-15);
        assert!((t.q1[2] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn monotype_closed_form_at_alpha_one() {
        // q -> q - q^2/2: 1/q grows by 1/2 + q/4 + O(q^2) per step
        let p = params(1.0, 1.0, 0.3);
        let e = Engine::new(p, 1 << 16).unwrap();
        let n = 1 << 16;
        let q = e.q2(n).unwrap();
        // 1/Q(n) = n/2 + ln(n)/2 + O(1)
        let lead = n as f64 / 2.0 + (n as f64).ln() / 2.0;
        assert!((1.0 / q - lead).abs() < 2.0, "{} vs {lead}", 1.0 / q);
    }

    #[test]
    fn horizon_cap_enforced() {
        let p = params(0.4, 1.0, 0.3);
        assert!(matches!(
            Engine::with_cap(p, 100, 50),
            Err(Error::HorizonExceeded { requested: 100, cap: 50 })
        ));
        let e = Engine::new(p, 10).unwrap();
        assert!(e.q1(11).is_err());
        assert!(e.reduced_transform(3, 11, 0.5, 0.5).is_err());
    }

    #[test]
    fn transform_boundary_values() {
        let e = Engine::new(params(0.4, 1.0, 0.3), 256).unwrap();
        // m = 0: the root is a single type-2 particle
        let t = e.reduced_transform(0, 256, 0.3, 0.7).unwrap();
        assert!((t.value - 0.7).abs() < 1e-15);
        // s = 1 gives 1
        assert_eq!(e.reduced_transform(100, 256, 1.0, 1.0).unwrap().value, 1.0);
        // s = 0 at m = n: P(Z(n) = 0 | Z(n) != 0) = 0
        assert!(e.reduced_transform(256, 256, 0.0, 0.0).unwrap().value.abs() < 1e-14);
        assert!(e.reduced_transform(257, 256, 0.0, 0.0).is_err());
        assert!(e.reduced_transform(3, 256, -0.1, 0.0).is_err());
    }

    #[test]
    fn sensitivities_match_finite_differences() {
        let e = Engine::new(params(0.5, 0.8, 0.35), 400).unwrap();
        for &(m, s1, s2) in &[(10u64, 0.3, 0.6), (200, 0.5, 0.5), (399, 0.1, 0.9)] {
            let t = e.reduced_transform(m, 400, s1, s2).unwrap();
            let h = 1e-6;
            let f = |a: f64, b: f64| e.reduced_transform(m, 400, a, b).unwrap().value;
            let fd1 = (f(s1 + h, s2) - f(s1 - h, s2)) / (2.0 * h);
            let fd2 = (f(s1, s2 + h) - f(s1, s2 - h)) / (2.0 * h);
            assert!((t.d_ds1 - fd1).abs() < 1e-6, "{} {fd1}", t.d_ds1);
            assert!((t.d_ds2 - fd2).abs() < 1e-6, "{} {fd2}", t.d_ds2);
        }
    }

    #[test]
    fn profile_matches_forward_sensitivities() {
        let e = Engine::new(params(0.4, 1.0, 0.3), 512).unwrap();
        let prof = e.mrca_profile(512).unwrap();
        for m in [0u64, 1, 7, 100, 300, 511, 512] {
            let (a, b) = e.mrca_probabilities(m, 512).unwrap();
            assert!((prof.p1[m as usize] - a).abs() < 1e-12, "m={m}");
            assert!((prof.p2[m as usize] - b).abs() < 1e-12, "m={m}");
        }
        assert_eq!(prof.p2[512], 0.0);
    }

    #[test]
    fn profile_jumps_telescope() {
        let e = Engine::new(params(0.9, 0.9, 0.4), 300).unwrap();
        let prof = e.mrca_profile(300).unwrap();
        for m in 0..300u64 {
            let lhs = prof.beta_at_least(m) - prof.beta_at_least(m + 1);
            let rhs = prof.jump1[m as usize] + prof.jump2[m as usize];
            assert!((lhs - rhs).abs() < 1e-13, "m={m}: {lhs} vs {rhs}");
        }
        let total: f64 = prof.jump1.iter().chain(prof.jump2.iter()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_two_time_equals_one_time_bitwise() {
        let e = Engine::new(params(0.4, 1.0, 0.3), 300).unwrap();
        let one = e.reduced_transform(200, 300, 0.4, 0.6).unwrap().value;
        assert_eq!(e.two_time_transform(100, 200, 300, (1.0, 1.0), (0.4, 0.6)).unwrap(), one);
        let one0 = e.reduced_transform(100, 300, 0.4, 0.6).unwrap().value;
        assert_eq!(e.two_time_transform(100, 200, 300, (0.4, 0.6), (1.0, 1.0)).unwrap(), one0);
        // composition route agrees to rounding
        let comp = 1.0 - e.two_time_deficit_composed(100, 200, 300, (1.0, 1.0), (0.4, 0.6));
        assert!((comp - one).abs() < 1e-12);
        let comp0 = 1.0 - e.two_time_deficit_composed(100, 200, 300, (0.4, 0.6), (1.0, 1.0));
        assert!((comp0 - one0).abs() < 1e-12);
    }

    #[test]
    fn gstar_and_hstar() {
        let e = Engine::new(params(0.9, 0.9, 0.4), 1 << 16).unwrap();
        let g = e.gstar(1 << 16).unwrap();
        assert!(e.q2(g).unwrap() <= e.q21(1 << 16).unwrap());
        assert!(e.q2(g - 1).unwrap() > e.q21(1 << 16).unwrap());
        assert!(e.hstar(1 << 16).is_err());

        let e = Engine::new(params(0.4, 1.0, 0.3), 1 << 16).unwrap();
        let h = e.hstar(1 << 16).unwrap() as usize;
        let c = 0.4 * 0.3 / 0.6;
        let t = e.tables();
        assert!(c * h as f64 * t.q1[h] <= t.q2[1 << 16]);
        assert!(c * (h - 1) as f64 * t.q1[h - 1] > t.q2[1 << 16]);
    }

    #[test]
    fn star_scalings() {
        // hstar ~ n^(a1/(a2(1-a1))), gstar ~ n^(a2/(a1(1+a2)))
        let e = Engine::new(params(0.4, 1.0, 0.3), 1 << 20).unwrap();
        let h16 = e.hstar(1 << 16).unwrap() as f64;
        let h20 = e.hstar(1 << 20).unwrap() as f64;
        let slope = (h20 / h16).ln() / 16f64.ln();
        assert!((slope - 0.4 / 0.6).abs() < 0.05, "hstar slope {slope}");
        let e = Engine::new(params(0.9, 0.9, 0.4), 1 << 20).unwrap();
        let g16 = e.gstar(1 << 16).unwrap() as f64;
        let g20 = e.gstar(1 << 20).unwrap() as f64;
        let slope = (g20 / g16).ln() / 16f64.ln();
        assert!((slope - 0.9 / (0.9 * 1.9)).abs() < 0.05, "gstar slope {slope}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn q_tables_monotone(a1 in 0.05f64..=1.0, a2 in 0.05f64..=1.0, f in 0.01f64..=1.0) {
            let p = params(a1, a2, f / (1.0 + a2));
            let e = Engine::new(p, 2000).unwrap();
            let t = e.tables();
            for k in 1..=2000 {
                prop_assert!(t.q1[k] <= t.q1[k - 1] && t.q1[k] > 0.0);
                prop_assert!(t.q2[k] <= t.q2[k - 1] && t.q2[k] > 0.0);
                prop_assert!(t.q21[k] <= t.q21[k - 1]);
                prop_assert!(t.q21[k] >= t.q2[k]);
            }
        }

        #[test]
        fn transform_is_a_conditional_pgf(m in 0u64..=300, s1 in 0.0f64..=1.0, s2 in 0.0f64..=1.0, d in 0.0f64..0.3) {
            let e = Engine::new(params(0.5, 0.8, 0.35), 300).unwrap();
            let t = e.reduced_transform(m, 300, s1, s2).unwrap();
            prop_assert!((-1e-14..=1.0 + 1e-14).contains(&t.value));
            prop_assert!(t.d_ds1 >= 0.0 && t.d_ds2 >= 0.0);
            let up = e.reduced_transform(m, 300, (s1 + d).min(1.0), (s2 + d).min(1.0)).unwrap();
            prop_assert!(up.value >= t.value - 1e-14);
            // value at 0 is 0 for m > 0: the reduced process never dies
            let z = e.reduced_transform(m, 300, 0.0, 0.0).unwrap();
            prop_assert!(z.value.abs() < 1e-14);
        }
    }
}
