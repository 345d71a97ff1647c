//! Discrete-time two-type Galton-Watson trees conditioned on survival to generation n,
//! and the reduced (ancestral) process read off them by backward marking.

use rayon::prelude::*;
use serde::Serialize;

use crate::ctmc::{path_rng, Estimate};
use crate::error::{domain, Error, Result};
use crate::offspring::OffspringLaws;
use crate::params::ModelParams;

pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;
pub const DEFAULT_MAX_ATTEMPTS: u64 = 100_000_000;

/// One generation: type (1 or 2) and parent index in the previous generation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Generation {
    pub types: Vec<u8>,
    pub parents: Vec<u32>,
}

/// Full genealogy of a tree from a single type-2 root, generations `0..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GenealogyLog {
    pub generations: Vec<Generation>,
}

impl GenealogyLog {
    pub fn n(&self) -> u64 {
        self.generations.len() as u64 - 1
    }

    pub fn survives(&self) -> bool {
        self.generations.last().is_some_and(|g| !g.types.is_empty())
    }
}

fn grow<R: rand::Rng + ?Sized>(laws: &OffspringLaws, n: u64, cap: u64, rng: &mut R) -> Result<GenealogyLog> {
    let mut generations = Vec::with_capacity(n as usize + 1);
    generations.push(Generation { types: vec![2], parents: vec![0] });
    for _ in 0..n {
        let prev = generations.last().expect("root generation");
        let mut next = Generation::default();
        for (i, &ty) in prev.types.iter().enumerate() {
            let (k1, k2) = if ty == 1 { (laws.sample_type1(rng), 0) } else { laws.sample_type2(rng) };
            if next.types.len() as u64 + k1 + k2 > cap {
                return Err(Error::Resource(format!("generation size exceeds cap {cap}")));
            }
            for _ in 0..k1 {
                next.types.push(1);
                next.parents.push(i as u32);
            }
            for _ in 0..k2 {
                next.types.push(2);
                next.parents.push(i as u32);
            }
        }
        let dead = next.types.is_empty();
        generations.push(next);
        if dead {
            // pad so the log always spans n generations
            while generations.len() < n as usize + 1 {
                generations.push(Generation::default());
            }
            break;
        }
    }
    Ok(GenealogyLog { generations })
}

/// Rejection sampling: grow independent trees until one survives to generation `n`.
/// Returns the tree and the number of attempts.
pub fn simulate_conditioned_tree<R: rand::Rng + ?Sized>(
    params: &ModelParams,
    n: u64,
    cap: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<(GenealogyLog, u64)> {
    let laws = OffspringLaws::new(*params);
    simulate_with(&laws, n, cap, max_attempts, rng)
}

fn simulate_with<R: rand::Rng + ?Sized>(
    laws: &OffspringLaws,
    n: u64,
    cap: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<(GenealogyLog, u64)> {
    for attempt in 1..=max_attempts {
        let log = grow(laws, n, cap, rng)?;
        if log.survives() {
            return Ok((log, attempt));
        }
    }
    Err(Error::Resource(format!("no surviving tree within {max_attempts} attempts")))
}

/// Counts of particles at each generation having descendants at generation n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReducedPath {
    pub z1: Vec<u64>,
    pub z2: Vec<u64>,
    /// Last generation `< n` with a single marked particle.
    pub beta: u64,
    /// Type of that particle.
    pub mrca_type: u8,
    /// First generation with no marked type-2 particle, if any.
    pub delta2: Option<u64>,
}

pub fn reduced_counts(log: &GenealogyLog) -> Result<ReducedPath> {
    if !log.survives() {
        return Err(domain("reduced process needs a tree alive at generation n"));
    }
    let n = log.generations.len() - 1;
    let mut z1 = vec![0u64; n + 1];
    let mut z2 = vec![0u64; n + 1];
    let mut marked: Vec<bool> = vec![true; log.generations[n].types.len()];
    for k in (0..=n).rev() {
        let g = &log.generations[k];
        for (i, &m) in marked.iter().enumerate() {
            if m {
                if g.types[i] == 1 {
                    z1[k] += 1;
                } else {
                    z2[k] += 1;
                }
            }
        }
        if k > 0 {
            let mut up = vec![false; log.generations[k - 1].types.len()];
            for (i, &m) in marked.iter().enumerate() {
                if m {
                    up[g.parents[i] as usize] = true;
                }
            }
            marked = up;
        }
    }
    let beta = (0..n).rev().find(|&k| z1[k] + z2[k] == 1).expect("root is a single marked particle");
    let mrca_type = if z1[beta] == 1 { 1 } else { 2 };
    let delta2 = (0..=n).find(|&k| z2[k] == 0).map(|k| k as u64);
    Ok(ReducedPath { z1, z2, beta: beta as u64, mrca_type, delta2 })
}

/// What each replicate keeps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReplicateSummary {
    /// `(Z1(m,n), Z2(m,n))` for each requested `m`.
    pub at: Vec<(u64, u64)>,
    pub beta: u64,
    pub mrca_type: u8,
    pub delta2: Option<u64>,
    pub attempts: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeSample {
    pub n: u64,
    pub m_list: Vec<u64>,
    pub replicates: Vec<ReplicateSummary>,
}

impl TreeSample {
    /// Empirical `E[s1^Z1(m,n) s2^Z2(m,n) | Z(n) != 0]` for the `k`-th `m`.
    pub fn transform(&self, k: usize, s1: f64, s2: f64) -> Estimate {
        Estimate::from_samples(self.replicates.iter().map(|r| {
            let (a, b) = r.at[k];
            s1.powf(a as f64) * s2.powf(b as f64)
        }))
    }

    pub fn beta_cdf(&self, m: u64) -> Estimate {
        Estimate::from_samples(self.replicates.iter().map(|r| if r.beta <= m { 1.0 } else { 0.0 }))
    }

    pub fn type2_frequency(&self) -> Estimate {
        Estimate::from_samples(self.replicates.iter().map(|r| if r.mrca_type == 2 { 1.0 } else { 0.0 }))
    }

    /// `P(delta_n(2) <= m)`; trees whose type-2 line survives to `n` count as `> m`.
    pub fn delta2_cdf(&self, m: u64) -> Estimate {
        Estimate::from_samples(
            self.replicates.iter().map(|r| if r.delta2.is_some_and(|d| d <= m) { 1.0 } else { 0.0 }),
        )
    }
}

/// Monte Carlo of the reduced process at generation window `n` with `replicates`
/// conditioned trees; replicate `i` uses stream `i` of `seed`.
pub fn monte_carlo_reduced_law(
    params: &ModelParams,
    n: u64,
    m_list: &[u64],
    replicates: u64,
    seed: u64,
    cap: u64,
) -> Result<TreeSample> {
    if let Some(&m) = m_list.iter().find(|&&m| m > n) {
        return Err(domain(format!("m = {m} exceeds n = {n}")));
    }
    let laws = OffspringLaws::new(*params);
    let reps: Result<Vec<ReplicateSummary>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let (log, attempts) = simulate_with(&laws, n, cap, DEFAULT_MAX_ATTEMPTS, &mut rng)?;
            let red = reduced_counts(&log)?;
            Ok(ReplicateSummary {
                at: m_list.iter().map(|&m| (red.z1[m as usize], red.z2[m as usize])).collect(),
                beta: red.beta,
                mrca_type: red.mrca_type,
                delta2: red.delta2,
                attempts,
            })
        })
        .collect();
    Ok(TreeSample { n, m_list: m_list.to_vec(), replicates: reps? })
}
