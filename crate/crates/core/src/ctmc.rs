//! Continuous-time limit processes X, Y, V, W: generating functions from the backward
//! Kolmogorov equations, their closed forms, and an exact event-driven simulator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::limits::{phi, psi_with, Method, DEFAULT_TOL};
use crate::offspring::StableLaw;
use crate::params::{intermediate_constants, IntermediateConstants, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Process {
    X,
    Y,
    V,
    W,
}

impl Process {
    pub fn all() -> [Process; 4] {
        [Process::X, Process::Y, Process::V, Process::W]
    }

    /// Type of the ancestor the transform is taken from.
    pub fn root_type(&self) -> u8 {
        match self {
            Process::V => 1,
            _ => 2,
        }
    }
}

/// What a type-2 individual leaves behind at its event.
#[derive(Clone, Debug)]
enum Type2Rule {
    Inactive,
    /// Always a stable number of type-2 children.
    Stable(StableLaw),
    /// One type-1 child with probability `p1`, otherwise stable type-2 children.
    Mixed { p1: f64, law: StableLaw },
}

/// Rates and offspring laws of one limit process.
#[derive(Clone, Debug)]
pub struct CtmcSpec {
    pub process: Process,
    pub mu1: f64,
    pub mu2: f64,
    type1: Option<StableLaw>,
    type2: Type2Rule,
    consts: Option<IntermediateConstants>,
    params: ModelParams,
}

impl CtmcSpec {
    pub fn new(process: Process, p: &ModelParams) -> Result<Self> {
        let (a1, a2) = (p.alpha1(), p.alpha2());
        let stable2 = || StableLaw::new(1.0 + a2);
        let spec = match process {
            Process::X => CtmcSpec {
                process,
                mu1: 0.0,
                mu2: 1.0,
                type1: None,
                type2: Type2Rule::Stable(stable2()?),
                consts: None,
                params: *p,
            },
            Process::Y => CtmcSpec {
                process,
                mu1: 0.0,
                mu2: 1.0 + 1.0 / a2,
                type1: None,
                type2: Type2Rule::Mixed { p1: 1.0 / (1.0 + a2), law: stable2()? },
                consts: None,
                params: *p,
            },
            Process::V => {
                let g1 = p.gamma1();
                if g1 > 2.0 {
                    return Err(Error::InvalidParams(format!(
                        "V needs 1 + alpha1 (1 + alpha2) <= 2 for a proper offspring law, got {g1}"
                    )));
                }
                CtmcSpec {
                    process,
                    mu1: 1.0,
                    mu2: 0.0,
                    type1: Some(StableLaw::new(g1)?),
                    type2: Type2Rule::Inactive,
                    consts: None,
                    params: *p,
                }
            }
            Process::W => {
                let c = intermediate_constants(p)?;
                CtmcSpec {
                    process,
                    mu1: 1.0,
                    mu2: c.kappa,
                    type1: Some(StableLaw::new(1.0 + a1)?),
                    type2: Type2Rule::Mixed { p1: c.sigma * p.a21() / (c.b * c.kappa), law: stable2()? },
                    consts: Some(c),
                    params: *p,
                }
            }
        };
        Ok(spec)
    }

    /// Right-hand side of the backward equations in deficit form, `u_i = 1 - f_i`.
    pub fn deficit_rhs(&self, u1: f64, u2: f64) -> (f64, f64) {
        let p = &self.params;
        let (a1, a2) = (p.alpha1(), p.alpha2());
        match self.process {
            Process::X => (0.0, (u2 - u2 * u2.powf(a2)) / a2),
            Process::Y => (0.0, (u1 - u2 * u2.powf(a2)) / a2),
            Process::V => {
                let g = p.gamma1() - 1.0;
                ((u1 - u1 * u1.powf(g)) / g, 0.0)
            }
            Process::W => {
                let c = self.consts.expect("W carries its constants");
                let du1 = (u1 - u1 * u1.powf(a1)) / a1;
                let du2 = (c.sigma * a2 * p.a21() / c.b * u1 + u2 - c.b.powf(a2) * u2 * u2.powf(a2)) / a2;
                (du1, du2)
            }
        }
    }

    /// Offspring generating functions `(g1(s), g21(s))`, used for residual checks.
    pub fn offspring_pgf(&self, s1: f64, s2: f64) -> (f64, f64) {
        let stable = |g: f64, s: f64| ((1.0 - s).powf(g) - 1.0 + g * s) / (g - 1.0);
        let p = &self.params;
        let g1 = match &self.type1 {
            Some(law) => stable(law.gamma(), s1),
            None => s1,
        };
        let g2 = match &self.type2 {
            Type2Rule::Inactive => s2,
            Type2Rule::Stable(law) => stable(law.gamma(), s2),
            Type2Rule::Mixed { p1, law } => p1 * s1 + (1.0 - p1) * stable(law.gamma(), s2),
        };
        let _ = p;
        (g1, g2)
    }
}

/// Generating functions at time `t`: `f1` from one type-1 ancestor, `f21` from one type-2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CtmcPgf {
    pub f1: f64,
    pub f21: f64,
    pub ode: (f64, f64),
    pub closed: Option<(f64, f64)>,
    pub method: Method,
}

impl CtmcPgf {
    /// The transform from the process's natural ancestor.
    pub fn root_value(&self, process: Process) -> f64 {
        if process.root_type() == 1 {
            self.f1
        } else {
            self.f21
        }
    }
}

fn monotype_closed(g: f64, t: f64, u: f64) -> f64 {
    // u(t)^(-(g-1)) = 1 - e^-t + e^-t u(0)^(-(g-1))
    let e = (-t).exp();
    (1.0 - e + e * u.powf(-(g - 1.0))).powf(-1.0 / (g - 1.0))
}

/// Transform of `V(t)` started from the random initial population whose generating
/// function is `1 - (1-s)^(1/(1+alpha2))`:
/// `1 - ((1 - e^-t) + e^-t (1-s1)^(-alpha1))^(-1/(alpha1 (1+alpha2)))`.
pub fn v_from_theta(p: &ModelParams, t: f64, s1: f64) -> f64 {
    let e = (-t).exp();
    let (a1, a2) = (p.alpha1(), p.alpha2());
    1.0 - ((1.0 - e) + e * (1.0 - s1).powf(-a1)).powf(-1.0 / (a1 * (1.0 + a2)))
}

pub fn ctmc_pgf(process: Process, p: &ModelParams, t: f64, s1: f64, s2: f64) -> Result<CtmcPgf> {
    let spec = CtmcSpec::new(process, p)?;
    ctmc_pgf_with(&spec, t, s1, s2)
}

pub fn ctmc_pgf_with(spec: &CtmcSpec, t: f64, s1: f64, s2: f64) -> Result<CtmcPgf> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("t = {t} must be finite and >= 0")));
    }
    if !(0.0..=1.0).contains(&s1) || !(0.0..=1.0).contains(&s2) {
        return Err(domain(format!("({s1}, {s2}) outside [0, 1]^2")));
    }
    let (u1, u2) = (1.0 - s1, 1.0 - s2);
    let rhs = |_: f64, y: &[f64; 2]| {
        let (a, b) = spec.deficit_rhs(y[0].max(0.0), y[1].max(0.0));
        [a, b]
    };
    let y = crate::ode::integrate(rhs, [u1, u2], 0.0, t, 1e-12, 1e-15)?;
    let ode = (1.0 - y[0], 1.0 - y[1]);
    let p = &spec.params;
    let (a1, a2) = (p.alpha1(), p.alpha2());
    let closed = if t == 0.0 {
        Some((s1, s2))
    } else {
        match spec.process {
            Process::X => Some((s1, 1.0 - monotype_closed(1.0 + a2, t, u2))),
            Process::V => Some((1.0 - monotype_closed(p.gamma1(), t, u1), s2)),
            Process::Y => {
                let l1 = u1 * t.powf(1.0 / a2 + 1.0) / (a2 * p.a21());
                let l2 = u2 * t.powf(1.0 / a2);
                Some((s1, 1.0 - t.powf(-1.0 / a2) * phi(p, l1, l2, DEFAULT_TOL)?))
            }
            Process::W => {
                let c = spec.consts.expect("W carries its constants");
                let em = t.exp_m1();
                // sigma/b on the type-1 argument, as in the balanced limit transform at a = 1 - e^-t;
                // without it the value does not solve the backward equation.
                let l1 = u1 * c.sigma / c.b * em.powf(1.0 / a1);
                let l2 = u2 * em.powf(1.0 / a2);
                let f21 = 1.0 - (-(-t).exp_m1()).powf(-1.0 / a2) * psi_with(p, &c, l1, l2, DEFAULT_TOL)?;
                Some((1.0 - monotype_closed(1.0 + a1, t, u1), f21))
            }
        }
    };
    let method = match spec.process {
        Process::X | Process::V => Method::ClosedForm,
        Process::Y | Process::W => Method::Composed,
    };
    let (f1, f21) = closed.unwrap_or(ode);
    Ok(CtmcPgf { f1, f21, ode, closed, method })
}

/// Counts `(type-1, type-2)` at each requested time, plus whether the cap was hit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CtmcPath {
    pub counts: Vec<(u64, u64)>,
    pub capped: bool,
    /// Number of leading observations recorded before the cap was hit.
    pub exact: usize,
}

/// Simulate one path from `start` and record counts at sorted `times`.
pub fn simulate_path<R: Rng + ?Sized>(spec: &CtmcSpec, start: (u64, u64), times: &[f64], cap: u64, rng: &mut R) -> CtmcPath {
    let (mut n1, mut n2) = start;
    let mut now = 0.0;
    let mut counts = Vec::with_capacity(times.len());
    let mut capped = false;
    let mut exact = 0;
    let mut next_obs = 0;
    while next_obs < times.len() {
        let r1 = if spec.type1.is_some() { spec.mu1 * n1 as f64 } else { 0.0 };
        let r2 = match spec.type2 {
            Type2Rule::Inactive => 0.0,
            _ => spec.mu2 * n2 as f64,
        };
        let total = r1 + r2;
        let wait = if total > 0.0 && !capped {
            -(1.0 - rng.random::<f64>()).ln() / total
        } else {
            f64::INFINITY
        };
        while next_obs < times.len() && now + wait > times[next_obs] {
            counts.push((n1, n2));
            next_obs += 1;
        }
        if next_obs == times.len() {
            break;
        }
        now += wait;
        if rng.random::<f64>() * total < r1 {
            let law = spec.type1.as_ref().expect("type 1 active");
            n1 = n1 - 1 + law.sample(rng);
        } else {
            n2 -= 1;
            match &spec.type2 {
                Type2Rule::Inactive => unreachable!("inactive type never fires"),
                Type2Rule::Stable(law) => n2 = n2.saturating_add(law.sample(rng)),
                Type2Rule::Mixed { p1, law } => {
                    if rng.random::<f64>() < *p1 {
                        n1 += 1;
                    } else {
                        n2 = n2.saturating_add(law.sample(rng));
                    }
                }
            }
        }
        if !capped && n1.saturating_add(n2) > cap {
            capped = true;
            exact = next_obs;
        }
    }
    if !capped {
        exact = counts.len();
    }
    CtmcPath { counts, capped, exact }
}

/// Per-path RNG: one ChaCha stream per path index under the run seed.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Empirical transform with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(it: I) -> Estimate {
        let (mut n, mut mean, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for x in it {
            n += 1.0;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
        }
        let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
        Estimate { mean, se: (var / n).sqrt() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CtmcSample {
    pub process: Process,
    pub times: Vec<f64>,
    pub paths: Vec<CtmcPath>,
}

impl CtmcSample {
    pub fn capped(&self) -> usize {
        self.paths.iter().filter(|p| p.capped).count()
    }

    /// Paths truncated before the `k`-th time; they are left out of `pgf(k, ..)`.
    pub fn excluded(&self, k: usize) -> usize {
        self.paths.iter().filter(|p| p.exact <= k).count()
    }

    /// `E[s1^N1(t) s2^N2(t)]` at the `k`-th time.
    pub fn pgf(&self, k: usize, s1: f64, s2: f64) -> Estimate {
        Estimate::from_samples(self.paths.iter().filter(|p| p.exact > k).map(|p| {
            let (a, b) = p.counts[k];
            s1.powf(a as f64) * s2.powf(b as f64)
        }))
    }
}

/// `paths` independent paths from the process's natural ancestor.
pub fn gillespie(spec: &CtmcSpec, times: &[f64], paths: u64, seed: u64, cap: u64) -> Result<CtmcSample> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(domain("observation times must be nonnegative and sorted"));
    }
    let start = if spec.process.root_type() == 1 { (1, 0) } else { (0, 1) };
    let out: Vec<CtmcPath> = (0..paths)
        .into_par_iter()
        .map(|i| simulate_path(spec, start, times, cap, &mut path_rng(seed, i)))
        .collect();
    Ok(CtmcSample { process: spec.process, times: times.to_vec(), paths: out })
}

/// Type-2 event weights of `W`: `(one type-1 child, stable type-2 children)`,
/// each computed from its own closed form.
pub fn w_mixture_weights(p: &ModelParams) -> Result<(f64, f64)> {
    let c = intermediate_constants(p)?;
    Ok((c.sigma * p.a21() / (c.b * c.kappa), c.b.powf(p.alpha2()) / c.kappa))
}

/// First branching time of `W` from one type-2 ancestor and whether the root itself split.
/// A branching is an event with at least two children.
pub fn w_first_branching_sample<R: Rng + ?Sized>(spec: &CtmcSpec, rng: &mut R) -> Result<(f64, bool)> {
    if spec.process != Process::W {
        return Err(domain("first branching time is defined for W only"));
    }
    let Type2Rule::Mixed { p1, .. } = spec.type2 else { unreachable!("W has a mixed type-2 rule") };
    let exp = |rng: &mut R, rate: f64| -(1.0 - rng.random::<f64>()).ln() / rate;
    let t = exp(rng, spec.mu2);
    if rng.random::<f64>() < p1 {
        // the single type-1 child branches at its own event
        Ok((t + exp(rng, spec.mu1), false))
    } else {
        Ok((t, true))
    }
}
