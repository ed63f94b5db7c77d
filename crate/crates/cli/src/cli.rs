//! Argument parsing and the top-level flow.

use crate::config::{parse_override, ConfigError, ConfigFile, QValue, Suite};
use crate::exit;
use crate::run::{run, RunError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qlax_core::fockspace::Boundary;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "qlax", version, about = "Verification suites for the q-oscillator lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-chain suite, or the open one with `--boundary open`.
    Check,
    /// Bethe roots and spectrum comparison.
    Bethe,
    /// Symbolic Backlund derivations.
    Bt,
    /// q-numbers and q-coherent states.
    Qstates,
    /// Every suite listed in the config (default: all).
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(Debug, Default, Args)]
pub struct Opts {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Number of sites.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    /// Fock cutoff per site.
    #[arg(long = "D", global = true)]
    pub d: Option<usize>,
    /// Largest magnon number for spectrum reports.
    #[arg(long = "M", global = true)]
    pub m: Option<usize>,
    /// q = modulus * e^{i phase}.
    #[arg(long, global = true, conflicts_with = "q_real")]
    pub q_phase: Option<f64>,
    #[arg(long, global = true, requires = "q_phase")]
    pub q_modulus: Option<f64>,
    /// Real q.
    #[arg(long, global = true)]
    pub q_real: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub boundary: Option<BoundaryArg>,
    /// Overrides QLAX_SEED and the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance override, repeatable.
    #[arg(long = "tolerance", global = true, value_name = "NAME=VALUE", value_parser = parse_override)]
    pub tolerances: Vec<(String, f64)>,
    /// Report path.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Drop timestamps and timings so reports compare byte for byte.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Worker threads; 1 runs suites sequentially.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Skip the per-check summary.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

impl Opts {
    fn as_config(&self) -> ConfigFile {
        let q = match (self.q_phase, self.q_real) {
            (Some(phase), _) => Some(QValue::Polar(crate::config::Polar { phase, modulus: self.q_modulus.unwrap_or(1.0) })),
            (None, Some(x)) => Some(QValue::Real(x)),
            _ => None,
        };
        ConfigFile {
            n: self.n,
            d: self.d,
            q,
            boundary: self.boundary.map(|b| match b {
                BoundaryArg::Periodic => Boundary::Periodic,
                BoundaryArg::Open => Boundary::Open,
            }),
            suites: None,
            seed: self.seed,
            m_max: self.m,
            tolerances: (!self.tolerances.is_empty()).then(|| self.tolerances.iter().cloned().collect()),
            output: self.output.clone(),
        }
    }
}

fn env_seed() -> Result<Option<u64>, ConfigError> {
    match std::env::var("QLAX_SEED") {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| ConfigError::Validation {
            field: "QLAX_SEED".into(),
            message: format!("`{s}` is not an unsigned integer"),
        }),
        Err(_) => Ok(None),
    }
}

/// Defaults, then the file, then `QLAX_SEED`, then flags; the verb picks the suites.
pub fn resolve(cli: &Cli) -> Result<crate::RunConfig, ConfigError> {
    let mut cfg = match &cli.opts.config {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = env_seed()? {
        cfg.seed = Some(seed);
    }
    let mut cfg = cfg.overlay(cli.opts.as_config());
    let boundary = cfg.boundary.unwrap_or(Boundary::Periodic);
    match cli.command {
        Command::Check => {
            cfg.suites = Some(vec![if boundary == Boundary::Open { Suite::Open } else { Suite::Closed }]);
        }
        Command::Bethe => cfg.suites = Some(vec![Suite::Bethe]),
        Command::Bt => cfg.suites = Some(vec![Suite::Backlund]),
        Command::Qstates => cfg.suites = Some(vec![Suite::Qstates]),
        Command::All => {}
    }
    cfg.resolve()
}

/// Runs the parsed command line; returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e @ ConfigError::Io { .. }) => {
            eprintln!("qlax: {e}");
            return exit::IO;
        }
        Err(e) => {
            eprintln!("qlax: {e}");
            return exit::CONFIG;
        }
    };
    let report = match run(&cfg, cli.opts.jobs, cli.opts.deterministic) {
        Ok(r) => r,
        Err(e @ RunError::UnknownCheck(_)) => {
            eprintln!("qlax: {e}");
            return exit::CONFIG;
        }
        Err(e) => {
            eprintln!("qlax: {e}");
            return exit::IO;
        }
    };
    if !cli.opts.quiet {
        print!("{}", report.summary());
    }
    let mut json = report.to_json();
    json.push('\n');
    if let Err(e) = std::fs::write(&cfg.output, json) {
        eprintln!("qlax: cannot write {}: {e}", cfg.output.display());
        return exit::IO;
    }
    if report.overall {
        exit::PASS
    } else {
        exit::CHECKS_FAILED
    }
}
