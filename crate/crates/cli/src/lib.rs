//! Command line runner for the perforated-domain homogenization laboratory.
//!
//! Every run resolves its parameters (defaults, then `--config`, then flags),
//! validates them before computing, writes CSV tables and a `manifest.json`
//! into the output directory and exits with 0 (success), 2 (invalid input,
//! nothing written) or 3 (numerical failure, partial outputs kept).

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use config::{Effective, Overrides, RunConfig};
use output::{config_hash, unix_now, Output, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn from_core(e: perfhom::Error) -> Self {
        match e.kind() {
            "argument" | "geometry" | "parse" => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(format!("{} error: {e}", e.kind())),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "perfhom", version, about = "Homogenization experiments on perforated domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (the solvers are sequential; recorded in the manifest).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// `dirichlet`, `neumann` or `robin`.
    #[arg(long, global = true)]
    pub bc: Option<String>,
    /// Robin coefficient, e.g. `1+0i`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// One ε or a comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub h_far: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Strange-term constant and per-cell values.
    Mu,
    /// Truncated and extrapolated capacity of the unit ball.
    Capacity,
    /// Radial corrector on the annulus.
    Corrector,
    /// Perforated and homogenized solutions for one ε.
    Solve,
    /// Resolvent defects over a list of ε.
    ResolventSweep,
    /// Windowed spectra and their Hausdorff distance.
    Spectrum,
    /// Spectral gap check for the B form.
    Gap,
    /// Numerical-range samples and the sector test.
    Numrange,
    /// Norm decay of the semigroup.
    Semigroup,
    /// Weighted decay estimates on a strip.
    Decay,
    /// Interaction of sources in distant cubes.
    Interaction,
    /// Decomposition inequality over occupied cubes.
    Decompose,
    /// Mesh quality and consistency report.
    MeshAudit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mu => "mu",
            Command::Capacity => "capacity",
            Command::Corrector => "corrector",
            Command::Solve => "solve",
            Command::ResolventSweep => "resolvent-sweep",
            Command::Spectrum => "spectrum",
            Command::Gap => "gap",
            Command::Numrange => "numrange",
            Command::Semigroup => "semigroup",
            Command::Decay => "decay",
            Command::Interaction => "interaction",
            Command::Decompose => "decompose",
            Command::MeshAudit => "mesh-audit",
        }
    }
}

fn resolve(cli: &Cli) -> Result<Effective, CliError> {
    if cli.threads == 0 {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let o = Overrides {
        bc: cli.bc.clone(),
        alpha: cli.alpha.clone(),
        dim: cli.dim,
        eps: cli.eps.clone(),
        h_far: cli.h_far,
        lambda: cli.lambda,
        delta: cli.delta,
        n: cli.n,
        seed: cli.seed,
    };
    Effective::resolve(cli.command.name(), &cfg, &o)
}

/// Runs one subcommand and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let name = cli.command.name();
    let eff = match resolve(cli) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let started = unix_now();
    let mut out = Output::new(&cli.out, config_hash(name, &eff));
    let result = commands::dispatch(name, &eff, &mut out);
    let (code, message) = match &result {
        Ok(true) => (EXIT_OK, None),
        Ok(false) => (EXIT_NUMERICAL, Some("some rows failed".to_string())),
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), Some(e.to_string()))
        }
    };
    let manifest = RunManifest {
        command: name.into(),
        config_hash: out.hash.clone(),
        artifact_version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        exit_code: code,
        threads: cli.threads,
        effective: eff,
        outputs: std::mem::take(&mut out.records),
        message,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = output::write_atomic(&cli.out.join("manifest.json"), json.as_bytes()) {
        eprintln!("error: {e}");
        return EXIT_NUMERICAL;
    }
    code
}
