//! Offspring laws of the concrete family and exact samplers for them.
//!
//! Both non-trivial offspring laws are mixtures of "no child" atoms and the stable law
//! `pmf(k) = binom(gamma, k) (-1)^k / (gamma - 1)`, `k >= 2`, `gamma in (1, 2]`.

use rand::Rng;
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::special::ln_gamma_diff;

/// Survival table is cut once `P(N > k)` falls below this or the table hits `TABLE_MAX`.
const TAIL_CUTOFF: f64 = 1e-15;
const TABLE_MAX: usize = 1 << 16;

/// Stable offspring law with index `gamma in (1, 2]`, supported on `k >= 2`.
#[derive(Clone, Debug)]
pub struct StableLaw {
    gamma: f64,
    /// `surv[k] = P(N > k)`.
    surv: Vec<f64>,
    /// `1 / Gamma(2 - gamma)`; zero when `gamma == 2`.
    tail_norm: f64,
}

impl StableLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(Error::InvalidParams(format!("stable index {gamma} not in (1, 2]")));
        }
        let mut surv = vec![1.0, 1.0];
        let mut k = 1usize;
        while surv[k] >= TAIL_CUTOFF && k < TABLE_MAX {
            let next = surv[k] * ((k + 1) as f64 - gamma) / (k + 1) as f64;
            surv.push(next);
            k += 1;
        }
        let tail_norm = if gamma >= 2.0 { 0.0 } else { 1.0 / gamma_fn(2.0 - gamma) };
        Ok(StableLaw { gamma, surv, tail_norm })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `P(N > k)`.
    pub fn survival(&self, k: u64) -> f64 {
        if let Some(&v) = self.surv.get(k as usize) {
            return v;
        }
        if self.tail_norm == 0.0 {
            return 0.0;
        }
        // P(N > k) = Gamma(k + 1 - gamma) / (Gamma(2 - gamma) Gamma(k + 1))
        self.tail_norm * ln_gamma_diff(k as f64 + 1.0, -self.gamma).exp()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k < 2 {
            return 0.0;
        }
        // pmf(k) = P(N > k - 1) gamma / k
        self.survival(k - 1) * self.gamma / k as f64
    }

    pub fn mean(&self) -> f64 {
        self.gamma / (self.gamma - 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        // u in (0, 1]; N = min{k : P(N > k) < u}
        let u = 1.0 - rng.random::<f64>();
        let last = self.surv.len() - 1;
        if self.surv[last] < u {
            // first index with surv < u; surv is non-increasing
            return self.surv.partition_point(|&v| v >= u) as u64;
        }
        let mut lo = last as u64;
        let guess = (u / self.tail_norm).powf(-1.0 / self.gamma);
        let mut hi = (guess.max(lo as f64 + 1.0) * 2.0).min(9.0e18) as u64;
        while self.survival(hi) >= u && hi < u64::MAX / 4 {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.survival(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Offspring laws of both types for a parameter triple.
#[derive(Clone, Debug)]
pub struct OffspringLaws {
    params: ModelParams,
    stable1: StableLaw,
    stable2: StableLaw,
}

impl OffspringLaws {
    pub fn new(params: ModelParams) -> Self {
        let stable1 = StableLaw::new(1.0 + params.alpha1()).expect("alpha1 validated");
        let stable2 = StableLaw::new(1.0 + params.alpha2()).expect("alpha2 validated");
        OffspringLaws { params, stable1, stable2 }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `P(type-1 parent has k children)`.
    pub fn pmf_type1(&self, k: u64) -> f64 {
        let a1 = self.params.alpha1();
        match k {
            0 => 1.0 / (1.0 + a1),
            1 => 0.0,
            _ => a1 / (1.0 + a1) * self.stable1.pmf(k),
        }
    }

    /// `P(type-2 parent has k1 type-1 and k2 type-2 children)`.
    pub fn pmf_type2(&self, k1: u64, k2: u64) -> f64 {
        let (a2, a21) = (self.params.alpha2(), self.params.a21());
        match (k1, k2) {
            (0, 0) => 1.0 / (1.0 + a2) - a21,
            (1, 0) => a21,
            (0, k) if k >= 2 => a2 / (1.0 + a2) * self.stable2.pmf(k),
            _ => 0.0,
        }
    }

    pub fn sample_type1<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let a1 = self.params.alpha1();
        if rng.random::<f64>() < 1.0 / (1.0 + a1) {
            0
        } else {
            self.stable1.sample(rng)
        }
    }

    /// Returns `(type-1 children, type-2 children)`.
    pub fn sample_type2<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, u64) {
        let (a2, a21) = (self.params.alpha2(), self.params.a21());
        let u = rng.random::<f64>();
        let p00 = 1.0 / (1.0 + a2) - a21;
        if u < p00 {
            (0, 0)
        } else if u < p00 + a21 {
            (1, 0)
        } else {
            (0, self.stable2.sample(rng))
        }
    }

    pub fn stable1(&self) -> &StableLaw {
        &self.stable1
    }
    pub fn stable2(&self) -> &StableLaw {
        &self.stable2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn binom_signed(g: f64, k: u64) -> f64 {
        // binom(g, k) (-1)^k by the defining product
        let mut v = 1.0;
        for j in 0..k {
            v *= (g - j as f64) / (j + 1) as f64;
        }
        if k % 2 == 1 { -v } else { v }
    }

    #[test]
    fn binary_case_is_exact() {
        let law = StableLaw::new(2.0).unwrap();
        assert_eq!(law.pmf(2), 1.0);
        assert_eq!(law.pmf(3), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(law.sample(&mut rng), 2);
        }
    }

    #[test]
    fn stable_pmf_matches_binomial_product() {
        for &g in &[1.1, 1.4, 1.5, 1.9] {
            let law = StableLaw::new(g).unwrap();
            for k in 2..40 {
                let want = binom_signed(g, k) / (g - 1.0);
                assert!((law.pmf(k) - want).abs() < 1e-14 * want.max(1e-300) + 1e-17, "g={g} k={k}");
            }
        }
    }

    #[test]
    fn type_laws_small_values() {
        let laws = OffspringLaws::new(ModelParams::new(1.0, 1.0, 0.3).unwrap());
        assert_eq!(laws.pmf_type1(0), 0.5);
        assert_eq!(laws.pmf_type1(2), 0.5);
        assert_eq!(laws.pmf_type1(3), 0.0);
        assert!((laws.pmf_type2(0, 0) - 0.2).abs() < 1e-15);
        assert_eq!(laws.pmf_type2(1, 0), 0.3);
        assert_eq!(laws.pmf_type2(0, 2), 0.5);
        assert_eq!(laws.pmf_type2(1, 1), 0.0);
        assert_eq!(laws.pmf_type2(0, 1), 0.0);

        let laws = OffspringLaws::new(ModelParams::new(0.4, 1.0, 0.3).unwrap());
        assert!((laws.pmf_type1(0) - 1.0 / 1.4).abs() < 1e-15);
        assert!((laws.pmf_type1(2) - 0.2).abs() < 1e-15);
        let p3 = laws.pmf_type1(2) * (2.0 - 1.4) / 3.0;
        assert!((laws.pmf_type1(3) - p3).abs() < 1e-15);
    }

    #[test]
    fn mass_sums_to_one() {
        for &(a1, a2, a21) in &[(0.4, 1.0, 0.3), (0.5, 1.0, 0.3), (0.9, 0.9, 0.4), (0.2, 0.3, 0.5)] {
            let laws = OffspringLaws::new(ModelParams::new(a1, a2, a21).unwrap());
            let kmax = 1_000_000u64;
            let s1: f64 = (0..=kmax).map(|k| laws.pmf_type1(k)).sum::<f64>()
                + a1 / (1.0 + a1) * laws.stable1().survival(kmax);
            let s2: f64 = laws.pmf_type2(0, 0)
                + laws.pmf_type2(1, 0)
                + (2..=kmax).map(|k| laws.pmf_type2(0, k)).sum::<f64>()
                + a2 / (1.0 + a2) * laws.stable2().survival(kmax);
            assert!((s1 - 1.0).abs() < 1e-10, "type1 mass {s1}");
            assert!((s2 - 1.0).abs() < 1e-10, "type2 mass {s2}");
        }
    }

    #[test]
    fn pmf_generates_pgf() {
        use crate::params::{pgf_type1, pgf_type2};
        let p = ModelParams::new(0.5, 0.7, 0.3).unwrap();
        let laws = OffspringLaws::new(p);
        for i in 1..10 {
            let s = i as f64 / 10.0;
            let mut f1 = 0.0;
            let mut f2 = laws.pmf_type2(0, 0) + laws.pmf_type2(1, 0) * s;
            let mut sk = 1.0;
            for k in 0..=100_000u64 {
                f1 += laws.pmf_type1(k) * sk;
                if k >= 2 {
                    f2 += laws.pmf_type2(0, k) * sk;
                }
                sk *= s;
            }
            assert!((f1 - pgf_type1(&p, s).unwrap()).abs() < 1e-9);
            assert!((f2 - pgf_type2(&p, s, s).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn stable_mean() {
        let law = StableLaw::new(1.5).unwrap();
        assert!((law.mean() - 3.0).abs() < 1e-15);
        // partial sum of k pmf(k) plus the tail contribution sum_{k >= K} P(N > k)
        let kmax = 200_000u64;
        let head: f64 = (2..=kmax).map(|k| k as f64 * law.pmf(k)).sum();
        let tail: f64 = kmax as f64 * law.survival(kmax);
        // sum_{k > K} P(N > k) ~ K P(N > K)/(gamma - 1) for large K
        let approx = head + tail + tail / 0.5;
        assert!((approx - 3.0).abs() < 1e-3, "{approx}");
    }

    #[test]
    fn sampler_chi_square() {
        for &g in &[1.4, 1.9] {
            let law = StableLaw::new(g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let n = 1_000_000usize;
            let mut counts = [0u64; 22];
            for _ in 0..n {
                let k = law.sample(&mut rng) as usize;
                counts[k.min(21)] += 1;
            }
            let mut stat = 0.0;
            let mut cells = 0;
            for (k, &c) in counts.iter().enumerate().skip(2) {
                let p = if k == 21 { law.survival(20) } else { law.pmf(k as u64) };
                let e = p * n as f64;
                stat += (c as f64 - e).powi(2) / e;
                cells += 1;
            }
            let crit = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-3);
            assert!(stat < crit, "gamma {g}: chi2 {stat} >= {crit}");
        }
    }

    #[test]
    fn sampler_tail_slope() {
        let laws = OffspringLaws::new(ModelParams::new(0.5, 1.0, 0.3).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let draws: Vec<u64> = (0..n).map(|_| laws.sample_type1(&mut rng)).collect();
        let ks = [8u64, 16, 32, 64, 128];
        let pts: Vec<(f64, f64)> = ks
            .iter()
            .map(|&k| {
                let c = draws.iter().filter(|&&d| d > k).count() as f64 / n as f64;
                ((k as f64).ln(), c.ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope + 1.5).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn far_tail_sampling_is_consistent() {
        // Draws beyond the table use the closed-form survival; check the conditional law.
        let law = StableLaw::new(1.2).unwrap();
        let last = law.surv.len() as u64 - 1;
        assert!(law.survival(last) >= TAIL_CUTOFF);
        let k = last + 10;
        let a = law.survival(k);
        let b = law.survival(k - 1) * ((k as f64) - 1.2) / k as f64;
        assert!((a - b).abs() < 1e-9 * b);
    }

    proptest! {
        #[test]
        fn survival_is_monotone(g in 1.01f64..2.0, k in 2u64..10_000_000) {
            let law = StableLaw::new(g).unwrap();
            prop_assert!(law.survival(k) <= law.survival(k - 1));
            prop_assert!(law.survival(k) >= 0.0);
        }

        #[test]
        fn samples_at_least_two(g in 1.01f64..=2.0, seed in any::<u64>()) {
            let law = StableLaw::new(g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                prop_assert!(law.sample(&mut rng) >= 2);
            }
        }
    }
}
