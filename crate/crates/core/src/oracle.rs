//! Brute-force check of the deficit iteration: an offspring family truncated to a
//! finite support, its deficit map, and a forward enumeration of population laws.

use serde::Serialize;

use crate::engine::DeficitMap;
use crate::error::{domain, Error, Result};
use crate::offspring::OffspringLaws;
use crate::params::ModelParams;

/// Offspring family with at most `max_children` children of each type, renormalized.
#[derive(Clone, Debug)]
pub struct TruncatedFamily {
    /// `p1[k]`, `k = 0..=K`
    pub p1: Vec<f64>,
    /// `(k1, k2, prob)`
    pub p2: Vec<(u32, u32, f64)>,
}

impl TruncatedFamily {
    pub fn new(params: &ModelParams, max_children: u32) -> Result<Self> {
        if max_children < 2 {
            return Err(domain("truncated support needs at least two children"));
        }
        let laws = OffspringLaws::new(*params);
        let k = max_children as u64;
        let mut p1: Vec<f64> = (0..=k).map(|j| laws.pmf_type1(j)).collect();
        let t1: f64 = p1.iter().sum();
        p1.iter_mut().for_each(|x| *x /= t1);
        let mut p2 = Vec::new();
        for k1 in 0..=k {
            for k2 in 0..=k {
                let v = laws.pmf_type2(k1, k2);
                if v > 0.0 {
                    p2.push((k1 as u32, k2 as u32, v));
                }
            }
        }
        let t2: f64 = p2.iter().map(|e| e.2).sum();
        p2.iter_mut().for_each(|e| e.2 /= t2);
        Ok(TruncatedFamily { p1, p2 })
    }

    fn kernel2(&self, w1: f64) -> Vec<f64> {
        let top = self.p2.iter().map(|e| e.1).max().unwrap_or(0) as usize;
        let mut k = vec![0.0; top + 1];
        for &(k1, k2, p) in &self.p2 {
            k[k2 as usize] += p * w1.powi(k1 as i32);
        }
        k
    }
}

/// `k ln(1 - q)`, with `0 * ln 0 = 0` so that `s^0 = 1` at `s = 0`.
fn log_power(k: u32, q: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * (-q).ln_1p()
    }
}

impl DeficitMap for TruncatedFamily {
    fn step(&self, q1: f64, q2: f64) -> (f64, f64) {
        // 1 - s^k computed as -expm1(k ln(1 - q)) to keep small deficits accurate
        let d1 = self.p1.iter().enumerate().map(|(k, p)| p * -log_power(k as u32, q1).exp_m1()).sum();
        let d2 = self
            .p2
            .iter()
            .map(|&(a, b, p)| p * -(log_power(a, q1) + log_power(b, q2)).exp_m1())
            .sum();
        (d1, d2)
    }
}

/// Result of one forward enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Enumeration {
    pub value: f64,
    /// Probability mass dropped by the population cap, an upper bound on the error.
    pub lost: f64,
    pub cap: usize,
}

/// One generation of a single-type population: `next = sum_z w(z) K^{*z}`, truncated at `cap`.
/// Returns the dropped weight.
fn advance(w: &[f64], kernel: &[f64], cap: usize) -> (Vec<f64>, f64) {
    let mut next = vec![0.0; cap + 1];
    let mut power = vec![1.0];
    let mut lost = 0.0;
    let top = w.iter().rposition(|&x| x != 0.0).unwrap_or(0);
    for (z, &wz) in w.iter().enumerate().take(top + 1) {
        if wz != 0.0 {
            for (j, &pj) in power.iter().enumerate() {
                next[j] += wz * pj;
            }
            lost += wz * (1.0 - power.iter().sum::<f64>()).max(0.0);
        }
        if z < top {
            let len = (power.len() + kernel.len() - 1).min(cap + 1);
            let mut np = vec![0.0; len];
            for (i, &a) in power.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in kernel.iter().enumerate() {
                    if i + j < len {
                        np[i + j] += a * b;
                    }
                }
            }
            power = np;
        }
    }
    (next, lost)
}

/// `E[s1^Z1(m)]` from one type-1 ancestor by forward enumeration.
pub fn enumerate_type1(fam: &TruncatedFamily, m: u64, s1: f64, cap: usize) -> Enumeration {
    let mut w = vec![0.0; cap + 1];
    w[1] = 1.0;
    let mut lost = 0.0;
    for _ in 0..m {
        let (nw, l) = advance(&w, &fam.p1, cap);
        w = nw;
        lost += l;
    }
    let value = w.iter().enumerate().map(|(z, &p)| p * s1.powi(z as i32)).sum();
    Enumeration { value, lost, cap }
}

/// `E[s1^Z1(n) s2^Z2(n)]` from one type-2 ancestor. Type-2 counts are enumerated;
/// each type-1 child born at generation `k+1` is replaced by its own enumerated
/// transform over the remaining `n-k-1` generations.
pub fn enumerate_type2(fam: &TruncatedFamily, n: u64, s: (f64, f64), cap: usize) -> Enumeration {
    let mut lost = 0.0;
    let f1: Vec<f64> = (0..n)
        .map(|r| {
            let e = enumerate_type1(fam, r, s.0, cap);
            lost += e.lost;
            e.value
        })
        .collect();
    let mut w = vec![0.0; cap + 1];
    w[1] = 1.0;
    // weighted kernels have mass below one, so losses are counted on the plain law
    let mut mass = w.clone();
    let unit = fam.kernel2(1.0);
    for k in 0..n {
        let kernel = fam.kernel2(f1[(n - k - 1) as usize]);
        w = advance(&w, &kernel, cap).0;
        let (nm, l) = advance(&mass, &unit, cap);
        mass = nm;
        lost += l;
    }
    let value = w.iter().enumerate().map(|(z, &p)| p * s.1.powi(z as i32)).sum();
    Enumeration { value, lost, cap }
}

/// Enumerate with a doubling population cap until the dropped mass is below `loss_tol`.
pub fn enumerate_type2_adaptive(fam: &TruncatedFamily, n: u64, s: (f64, f64), loss_tol: f64) -> Result<Enumeration> {
    let mut cap = 128;
    while cap <= 8192 {
        let e = enumerate_type2(fam, n, s, cap);
        if e.lost < loss_tol {
            return Ok(e);
        }
        cap *= 2;
    }
    Err(Error::Resource(format!("enumeration at n = {n} needs a population cap above 8192")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::deficit_iterate_with;

    #[test]
    fn truncated_laws_are_normalized() {
        let p = ModelParams::new(0.4, 1.0, 0.3).unwrap();
        let f = TruncatedFamily::new(&p, 8).unwrap();
        assert!((f.p1.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((f.p2.iter().map(|e| e.2).sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_generation_is_the_pgf() {
        let p = ModelParams::new(0.5, 1.0, 0.3).unwrap();
        let f = TruncatedFamily::new(&p, 8).unwrap();
        let (s1, s2) = (0.3f64, 0.6f64);
        let direct: f64 = f.p2.iter().map(|&(a, b, q)| q * s1.powi(a as i32) * s2.powi(b as i32)).sum();
        let e = enumerate_type2(&f, 1, (s1, s2), 64);
        assert!((e.value - direct).abs() < 1e-15);
        let (_, d2) = f.step(1.0 - s1, 1.0 - s2);
        assert!((1.0 - d2 - direct).abs() < 1e-15);
    }

    #[test]
    fn zero_argument_gives_extinction_probability() {
        let p = ModelParams::new(0.4, 1.0, 0.3).unwrap();
        let f = TruncatedFamily::new(&p, 8).unwrap();
        let (d1, d2) = f.step(1.0, 1.0);
        assert!((1.0 - d1 - f.p1[0]).abs() < 1e-15);
        let p00 = f.p2.iter().find(|e| e.0 == 0 && e.1 == 0).unwrap().2;
        assert!((1.0 - d2 - p00).abs() < 1e-15);
    }

    #[test]
    fn small_n_agrees_with_iteration() {
        let p = ModelParams::new(0.9, 0.9, 0.4).unwrap();
        let f = TruncatedFamily::new(&p, 8).unwrap();
        for n in [2, 5] {
            let e = enumerate_type2_adaptive(&f, n, (0.4, 0.7), 1e-13).unwrap();
            let (_, d) = deficit_iterate_with(&f, n, 0.6, 0.3);
            assert!((e.value - (1.0 - d)).abs() < 1e-12, "n={n}: {} vs {}", e.value, 1.0 - d);
        }
    }
}
