use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use farfield::harness::config::Suite;
use farfield::harness::output::sibling_path;
use farfield::harness::{
    run_bandwidth_search, run_experiment, run_interactions, run_spectra, run_suites, write_csv_to,
    ExperimentConfig,
};
use farfield::Error;

/// Randomized compression of far-field kernel matrices.
#[derive(Parser)]
#[command(name = "farfield", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress sampled far-field blocks and report errors and bounds per trial.
    Compress(Common),
    /// Singular value spectra of far-field blocks.
    Spectra(Common),
    /// Shares of the kernel matrix norm from self, near and far interactions.
    Interactions(Common),
    /// Bandwidths at which the far-field block reaches a target rank.
    BandwidthSearch(Common),
    /// Randomized checks of the error and sampling bounds.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run only these suites.
        #[arg(long, value_delimiter = ',')]
        suites: Vec<String>,
        /// Multiply every bound; values below 1 should make the run fail.
        #[arg(long)]
        bound_scale: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured trial count.
    #[arg(long)]
    trials: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(common: &Common, required: bool) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if required => return Err(Failure::Config("--config is required".into())),
        None => ExperimentConfig::empty(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
        cfg.verify.trials = t;
    }
    if common.out.is_some() {
        cfg.output = common.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compress(c) => {
            let cfg = load(&c, true)?;
            let out = run_experiment(&cfg)?;
            write_csv_to(&out.rows, cfg.output.as_deref())?;
            if let Some(p) = &cfg.output {
                write_csv_to(&out.summary, Some(&sibling_path(p, "summary")))?;
            }
            let failed = out.rows.iter().filter(|r| !r.is_ok()).count();
            if failed > 0 {
                eprintln!(
                    "{failed} of {} rows failed; see the status column",
                    out.rows.len()
                );
            }
        }
        Command::Spectra(c) => {
            let cfg = load(&c, true)?;
            write_csv_to(&run_spectra(&cfg)?, cfg.output.as_deref())?;
        }
        Command::Interactions(c) => {
            let cfg = load(&c, true)?;
            write_csv_to(&run_interactions(&cfg)?, cfg.output.as_deref())?;
        }
        Command::BandwidthSearch(c) => {
            let cfg = load(&c, true)?;
            let rows = run_bandwidth_search(&cfg)?;
            write_csv_to(&rows, cfg.output.as_deref())?;
            let failed = rows.iter().filter(|r| r.result.is_err()).count();
            if failed > 0 {
                return Err(Failure::Runtime(format!(
                    "{failed} of {} searches failed",
                    rows.len()
                )));
            }
        }
        Command::Verify {
            common,
            suites,
            bound_scale,
        } => {
            let mut cfg = load(&common, false)?;
            if !suites.is_empty() {
                cfg.verify.suites = suites
                    .iter()
                    .map(|s| {
                        Suite::parse(s)
                            .ok_or_else(|| Failure::Config(format!("unknown suite {s:?}")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            if let Some(b) = bound_scale {
                if !(b > 0.0) {
                    return Err(Failure::Config("--bound-scale must be positive".into()));
                }
                cfg.verify.bound_scale = b;
            }
            let results = run_suites(
                &cfg.verify.suites,
                cfg.verify.trials,
                cfg.seed,
                cfg.verify.bound_scale,
            )?;
            for r in &results {
                eprintln!(
                    "{} {}: {} violations in {} trials ({} skipped)",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite.name(),
                    r.violations,
                    r.trials,
                    r.skipped
                );
            }
            write_csv_to(&results, cfg.output.as_deref())?;
            let failed: Vec<&str> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.suite.name())
                .collect();
            if !failed.is_empty() {
                return Err(Failure::Verification(format!(
                    "failed suites: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("verification failed: {m}");
            ExitCode::from(3)
        }
    }
}
