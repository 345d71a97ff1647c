//! Batch harness: configs, runners and reports.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, Config, Experiment, ExperimentSpec, Kind};
pub use report::{CriterionStatus, ExperimentOutcome, Report, ReportRow, Summary};
pub use run::{resolve_seed, run_config, run_experiment};

/// The acceptance criteria and the shipped config that runs each one.
pub const CRITERIA: [(u8, &str, &str); 10] = [
    (1, "model validity: offspring masses and mean identities", "c01-model.toml"),
    (2, "survival asymptotics and regime ratios", "c02-diagnostics.toml"),
    (3, "convergence of finite-n transforms to every limit point", "c03-convergence.toml"),
    (4, "phi/psi solvers: tanh form, axis identity, large-x constant, slopes", "c04-limits.toml"),
    (5, "MRCA laws and last type-2 ancestor", "c05-mrca.toml"),
    (6, "conditioned tree Monte Carlo against exact finite-n values", "c06-tree-mc.toml"),
    (7, "limit-process simulation, W mixture and first branching", "c07-ctmc-mc.toml"),
    (8, "two-time structure and G exponent convention", "c08-two-time.toml"),
    (9, "brute-force enumeration against deficit iteration", "c09-oracle.toml"),
    (10, "bitwise determinism of repeated runs", "c10-determinism.toml"),
];
