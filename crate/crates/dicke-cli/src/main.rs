//! `dicke` — command-line front end for finite-N Dicke-model analyses:
//! variational energy surfaces, equal-depth critical-coupling searches,
//! parameter sweeps, exact-diagonalization cross-checks, and a validation
//! suite. Emits plot-ready CSV or nested JSON.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use config::RawConfig;

/// CLI failures, each mapped to a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, environment, config file, or parameter domain — exit 1.
    Config(String),
    /// A computation failed to converge or left its domain — exit 2.
    Numerical(dicke::DickeError),
    /// The validation suite found failing checks — exit 3.
    Validation,
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Validation => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::Validation => write!(f, "validation checks failed"),
        }
    }
}

impl From<dicke::DickeError> for CliError {
    fn from(e: dicke::DickeError) -> Self {
        match e {
            dicke::DickeError::InvalidParams(msg) => CliError::Config(msg),
            dicke::DickeError::Config(msg) => CliError::Config(msg),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dicke",
    version,
    about = "Finite-N Dicke-model surfaces, critical couplings, sweeps, and validation",
    after_help = "Every flag can also come from a DICKE_* environment variable \
                  (e.g. DICKE_N_ATOMS) or from a --config TOML file with the same \
                  keys; flags win over the environment, which wins over the file."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML config file with the same keys as the flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Atomic level splitting ω_A (field frequency is the energy unit).
    #[arg(long, global = true, value_name = "OMEGA")]
    omega_a: Option<f64>,

    /// Atom number N, or a comma-separated list for `critical`.
    #[arg(long, global = true, value_name = "N[,N...]")]
    n_atoms: Option<String>,

    /// Single light-matter coupling γ.
    #[arg(long, global = true, value_name = "GAMMA", conflicts_with = "gamma_range")]
    gamma: Option<f64>,

    /// Coupling range for sweeps, or the bisection bracket for `critical`.
    #[arg(long, global = true, value_name = "LO:HI:STEP")]
    gamma_range: Option<String>,

    /// Surface(s): mean_field, sacs_even, sacs_odd, exact (comma-separated
    /// for `sweep`).
    #[arg(long, global = true, value_name = "TAG[,TAG...]")]
    surface: Option<String>,

    /// Parity sector for exact runs: even, odd, or full.
    #[arg(long, global = true, value_name = "SECTOR")]
    sector: Option<String>,

    /// Photon-cutoff override for exact runs (otherwise auto-converged).
    #[arg(long, global = true, value_name = "NU")]
    nu_max: Option<usize>,

    /// Gradient-norm tolerance (minimization and validation FD checks).
    #[arg(long, global = true, value_name = "TOL")]
    tol_grad: Option<f64>,

    /// Coupling tolerance of the critical-point bisection.
    #[arg(long, global = true, value_name = "TOL")]
    tol_bisect: Option<f64>,

    /// Eigenpair residual tolerance (and validation embedding agreement).
    #[arg(long, global = true, value_name = "TOL")]
    tol_eig: Option<f64>,

    /// Relative truncation-convergence tolerance of exact ground states.
    #[arg(long, global = true, value_name = "TOL")]
    tol_conv: Option<f64>,

    /// Output format: csv or json.
    #[arg(long, global = true, value_name = "FMT")]
    format: Option<String>,

    /// Output file (standard output when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Sample a variational surface on a (q, θ) grid with minima and section.
    Surface,
    /// Locate the equal-depth critical coupling per atom number.
    Critical,
    /// Tabulate energies and order parameters over a coupling range.
    Sweep,
    /// Run the cross-module oracle suite and print the pass/fail matrix.
    Validate,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Surface => "surface",
            Cmd::Critical => "critical",
            Cmd::Sweep => "sweep",
            Cmd::Validate => "validate",
        }
    }
}

impl Cli {
    fn flag_layer(&self) -> RawConfig {
        RawConfig {
            omega_a: self.omega_a,
            n_atoms: self.n_atoms.clone().map(config::AtomCount::Text),
            gamma: self.gamma,
            gamma_range: self.gamma_range.clone(),
            surface: self.surface.clone(),
            sector: self.sector.clone(),
            nu_max: self.nu_max,
            tol_grad: self.tol_grad,
            tol_bisect: self.tol_bisect,
            tol_eig: self.tol_eig,
            tol_conv: self.tol_conv,
            format: self.format.clone(),
            out: self.out.clone(),
        }
    }
}

fn run() -> Result<i32, CliError> {
    // Route clap's own failures through the config exit code, while help
    // and version keep printing normally.
    let matches = Cli::command().try_get_matches().map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(0);
        }
        CliError::Config(e.to_string())
    })?;
    let cli = Cli::from_arg_matches(&matches)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let file_path = cli
        .config
        .clone()
        .or_else(|| std::env::var("DICKE_CONFIG").ok().filter(|v| !v.is_empty()).map(PathBuf::from));
    let file_layer = file_path.as_deref().map(config::raw_from_file).transpose()?;
    let env_layer = config::raw_from_env()?;
    let resolved = config::resolve(cli.flag_layer(), env_layer, file_layer)?;

    commands::execute(cli.command.name(), &resolved)
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
