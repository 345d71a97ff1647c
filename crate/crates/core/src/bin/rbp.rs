use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use reduced_branching::experiments::{load_config, resolve_seed, run_config, Config, Report, CRITERIA};
use reduced_branching::Error;

#[derive(Parser)]
#[command(name = "rbp", about = "Reduced two-type branching processes: experiments and acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, global = true, default_value = "rbp-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a config without running it.
    Validate,
    /// Run every experiment of a config and write the reports.
    Run,
    /// Print the acceptance criteria and their configs.
    ListCriteria,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::Domain(_) | Error::RegimeMismatch { .. } => 2,
        Error::Resource(_) | Error::HorizonExceeded { .. } | Error::Io(_) => 3,
        Error::Numerical(_) => 1,
    }
}

fn load(cli: &Cli) -> Result<Config, Error> {
    let path = cli.config.as_deref().ok_or_else(|| Error::Config("--config is required".into()))?;
    load_config(path)
}

fn write_reports(report: &Report, out: &Path, format: Format, secs: f64) -> Result<(), Error> {
    std::fs::create_dir_all(out)?;
    if format != Format::Json {
        std::fs::write(out.join("report.csv"), report.to_csv()?)?;
    }
    if format != Format::Csv {
        let text = serde_json::to_string_pretty(&report.summary(secs))
            .map_err(|e| Error::Numerical(format!("json: {e}")))?;
        std::fs::write(out.join("summary.json"), text + "\n")?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Error> {
    match cli.command {
        Command::ListCriteria => {
            for (id, what, cfg) in CRITERIA {
                println!("{id:>2}  {what}  [configs/{cfg}]");
            }
            Ok(true)
        }
        Command::Validate => {
            let cfg = load(cli)?;
            resolve_seed(&cfg, cli.seed)?;
            println!("ok: {} experiments", cfg.experiments.len());
            Ok(true)
        }
        Command::Run => {
            let cfg = load(cli)?;
            let seed = resolve_seed(&cfg, cli.seed)?;
            if let Some(n) = cli.threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
            }
            let start = Instant::now();
            let report = run_config(&cfg, seed)?;
            let secs = start.elapsed().as_secs_f64();
            write_reports(&report, &cli.out, cli.format, secs)?;
            for c in report.criteria() {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                println!("criterion {:>2}: {verdict} ({} checks, {} failed)", c.criterion, c.checks, c.failed);
                for f in &c.failures {
                    println!("    failed: {f}");
                }
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
