//! Experiment configs: TOML with one `[[experiment]]` table per row group.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::ctmc::Process;
use crate::engine::DEFAULT_HORIZON_CAP;
use crate::error::{Error, Result};
use crate::limits::LimitPoint;
use crate::params::{ModelParams, Regime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Model,
    Qtable,
    Diagnostics,
    Reduced,
    Limits,
    Convergence,
    Mrca,
    TreeMc,
    CtmcMc,
    TwoTime,
    Oracle,
    Determinism,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Model => "model",
            Kind::Qtable => "qtable",
            Kind::Diagnostics => "diagnostics",
            Kind::Reduced => "reduced",
            Kind::Limits => "limits",
            Kind::Convergence => "convergence",
            Kind::Mrca => "mrca",
            Kind::TreeMc => "tree-mc",
            Kind::CtmcMc => "ctmc-mc",
            Kind::TwoTime => "two-time",
            Kind::Oracle => "oracle",
            Kind::Determinism => "determinism",
        }
    }
}

/// One `[[experiment]]` table. Each kind reads the fields it needs.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: Kind,
    pub criterion: Option<u8>,
    #[serde(default)]
    pub params: Vec<ModelParams>,
    /// Horizons as powers of two.
    #[serde(default)]
    pub n_pow: Vec<u32>,
    /// Plain horizons, for small-n kinds.
    #[serde(default)]
    pub n: Vec<u64>,
    #[serde(default)]
    pub points: Vec<String>,
    /// Fractions `m = a n`.
    #[serde(default)]
    pub a: Vec<f64>,
    /// Time-scale multipliers.
    #[serde(default)]
    pub t: Vec<f64>,
    /// Generations.
    #[serde(default)]
    pub m: Vec<u64>,
    /// Transform arguments `(s1, s2)`.
    #[serde(default)]
    pub s: Vec<[f64; 2]>,
    #[serde(default)]
    pub processes: Vec<Process>,
    pub replicates: Option<u64>,
    /// Samples for the first-branching check of `W`.
    pub branching_samples: Option<u64>,
    /// Main threshold: absolute error ceiling, or a standard-error multiple for Monte Carlo kinds.
    pub tol: Option<f64>,
    /// Secondary ceiling (ratio checks of `diagnostics`).
    pub ratio_tol: Option<f64>,
    /// Population cap per path or generation.
    pub cap: Option<u64>,
    pub max_children: Option<u32>,
    /// Config files replayed by `determinism`, relative to this file.
    #[serde(default)]
    pub include: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    #[serde(default)]
    include: Vec<String>,
    #[serde(default)]
    experiment: Vec<Spanned<ExperimentSpec>>,
}

/// An experiment with its source location.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub origin: String,
    /// Directory of the defining file, for relative `include` paths.
    pub base: PathBuf,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub seed: Option<u64>,
    pub experiments: Vec<Experiment>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn config_err(origin: &str, id: &str, field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{origin}: experiment {id:?}: {field}: {msg}"))
}

pub fn parse_config(text: &str, name: &str, base: &Path) -> Result<Config> {
    parse_nested(text, name, base, 0)
}

fn parse_nested(text: &str, name: &str, base: &Path, depth: usize) -> Result<Config> {
    if depth > 8 {
        return Err(Error::Config(format!("{name}: include nesting too deep")));
    }
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(format!("{name}: {e}")))?;
    let mut experiments = Vec::new();
    for inc in &raw.include {
        let path = base.join(inc);
        let sub = load_nested(&path, depth + 1)?;
        experiments.extend(sub.experiments);
    }
    for e in raw.experiment {
        let origin = format!("{name}:{}", line_of(text, e.span().start));
        experiments.push(Experiment { spec: e.into_inner(), origin, base: base.to_path_buf() });
    }
    let cfg = Config { seed: raw.seed, experiments };
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<Config> {
    load_nested(path, 0)
}

fn load_nested(path: &Path, depth: usize) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: cannot read: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    parse_nested(&text, &path.display().to_string(), &base, depth)
}

fn max_pow() -> u32 {
    DEFAULT_HORIZON_CAP.trailing_zeros()
}

fn validate(cfg: &Config) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for e in &cfg.experiments {
        if !seen.insert(e.spec.id.clone()) {
            return Err(config_err(&e.origin, &e.spec.id, "id", "duplicate id"));
        }
        validate_experiment(e)?;
    }
    Ok(())
}

fn validate_experiment(e: &Experiment) -> Result<()> {
    let s = &e.spec;
    let err = |field: &str, msg: &str| config_err(&e.origin, &s.id, field, msg);
    let nonempty = |field: &str, len: usize| if len == 0 { Err(err(field, "must be a nonempty list")) } else { Ok(()) };
    let unit_list = |field: &str, v: &[f64], open: bool| {
        for &x in v {
            let ok = if open { x > 0.0 && x < 1.0 } else { (0.0..=1.0).contains(&x) };
            if !ok {
                return Err(err(field, &format!("value {x} out of range")));
            }
        }
        Ok(())
    };
    if let Some(c) = s.criterion {
        if !(1..=10).contains(&c) {
            return Err(err("criterion", "must be in 1..=10"));
        }
    }
    if s.n_pow.iter().any(|&k| k == 0 || k > max_pow()) {
        return Err(err("n_pow", &format!("powers must be in 1..={}", max_pow())));
    }
    if s.n_pow.windows(2).any(|w| w[1] <= w[0]) {
        return Err(err("n_pow", "must be strictly increasing"));
    }
    if let Some(t) = s.tol {
        if !(t > 0.0) {
            return Err(err("tol", "must be positive"));
        }
    }
    if s.s.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(err("s", "arguments must lie in [0, 1]"));
    }
    let one_regime = |want: Option<Regime>| -> Result<()> {
        if s.params.len() != 1 {
            return Err(err("params", "exactly one parameter set expected"));
        }
        if let Some(r) = want {
            if s.params[0].regime() != r {
                return Err(err("params", &format!("needs regime {}", r.name())));
            }
        }
        Ok(())
    };
    match s.kind {
        Kind::Model | Kind::Limits => nonempty("params", s.params.len())?,
        Kind::Qtable | Kind::Diagnostics => {
            nonempty("params", s.params.len())?;
            nonempty("n_pow", s.n_pow.len())?;
        }
        Kind::Reduced => {
            one_regime(None)?;
            nonempty("n_pow", s.n_pow.len())?;
            nonempty("a", s.a.len())?;
            nonempty("s", s.s.len())?;
            unit_list("a", &s.a, false)?;
        }
        Kind::Convergence => {
            one_regime(None)?;
            nonempty("n_pow", s.n_pow.len())?;
            for p in &s.points {
                let pt = LimitPoint::parse(p).map_err(|x| err("points", &x.to_string()))?;
                if pt.regime() != s.params[0].regime() {
                    return Err(err("points", &format!("{p} does not belong to regime {}", s.params[0].regime().name())));
                }
            }
        }
        Kind::Mrca => {
            one_regime(None)?;
            nonempty("n_pow", s.n_pow.len())?;
            nonempty("a", s.a.len())?;
            unit_list("a", &s.a, true)?;
            if s.params[0].regime() == Regime::Q2Negligible {
                nonempty("t", s.t.len())?;
            }
        }
        Kind::TreeMc => {
            one_regime(None)?;
            if s.n_pow.len() != 1 {
                return Err(err("n_pow", "exactly one horizon expected"));
            }
            let n = 1u64 << s.n_pow[0];
            nonempty("m", s.m.len())?;
            if s.m.iter().any(|&m| m > n) {
                return Err(err("m", "generations must not exceed n"));
            }
            nonempty("s", s.s.len())?;
            nonempty("a", s.a.len())?;
            unit_list("a", &s.a, false)?;
            if s.replicates.unwrap_or(0) < 2 {
                return Err(err("replicates", "at least 2 replicates required"));
            }
        }
        Kind::CtmcMc => {
            one_regime(None)?;
            nonempty("processes", s.processes.len())?;
            nonempty("t", s.t.len())?;
            if s.t.iter().any(|&t| !(t >= 0.0)) || s.t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(err("t", "times must be nonnegative and increasing"));
            }
            nonempty("s", s.s.len())?;
            if s.replicates.unwrap_or(0) < 2 {
                return Err(err("replicates", "at least 2 paths required"));
            }
        }
        Kind::TwoTime => {
            one_regime(Some(Regime::Q1Negligible))?;
            nonempty("n_pow", s.n_pow.len())?;
            nonempty("t", s.t.len())?;
            if s.t.len() < 2 {
                return Err(err("t", "at least two times required"));
            }
        }
        Kind::Oracle => {
            nonempty("params", s.params.len())?;
            nonempty("n", s.n.len())?;
            nonempty("s", s.s.len())?;
            if s.n.iter().any(|&n| n == 0 || n > 16) {
                return Err(err("n", "enumeration horizons must be in 1..=16"));
            }
        }
        Kind::Determinism => {
            nonempty("include", s.include.len())?;
            for inc in &s.include {
                let cfg = load_config(&e.base.join(inc))?;
                if cfg.experiments.iter().any(|x| x.spec.kind == Kind::Determinism) {
                    return Err(err("include", "determinism replays cannot nest"));
                }
            }
        }
    }
    Ok(())
}
