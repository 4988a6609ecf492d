//! Layered run configuration: command-line flags override `DICKE_*`
//! environment variables, which override a TOML config file, which
//! overrides the built-in defaults.

use std::path::PathBuf;

use serde::Deserialize;

use crate::CliError;
use dicke::exact::SectorChoice;
use dicke::optimize::SurfaceKind;

/// What the sweep/surface commands operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceTag {
    MeanField,
    SacsEven,
    SacsOdd,
    Exact,
}

impl SurfaceTag {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "mean_field" => Ok(SurfaceTag::MeanField),
            "sacs_even" => Ok(SurfaceTag::SacsEven),
            "sacs_odd" => Ok(SurfaceTag::SacsOdd),
            "exact" => Ok(SurfaceTag::Exact),
            other => Err(CliError::Config(format!(
                "unknown surface '{other}' (expected mean_field, sacs_even, sacs_odd, or exact)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SurfaceTag::MeanField => "mean_field",
            SurfaceTag::SacsEven => "sacs_even",
            SurfaceTag::SacsOdd => "sacs_odd",
            SurfaceTag::Exact => "exact",
        }
    }

    /// The variational surface behind this tag, if it is one.
    pub fn variational(self) -> Option<SurfaceKind> {
        match self {
            SurfaceTag::MeanField => Some(SurfaceKind::MeanField),
            SurfaceTag::SacsEven => Some(SurfaceKind::SacsEven),
            SurfaceTag::SacsOdd => Some(SurfaceKind::SacsOdd),
            SurfaceTag::Exact => None,
        }
    }
}

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn parse(text: &str) -> Result<Self, CliError> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Coupling selection: a single value or an inclusive range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingSpec {
    None,
    Single(f64),
    Range { lo: f64, hi: f64, step: f64 },
}

impl CouplingSpec {
    /// The γ grid of a range, `lo, lo+step, …` up to and including `hi`
    /// (within a half-step rounding guard).
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            CouplingSpec::Range { lo, hi, step } => {
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                Ok((0..count).map(|i| lo + step * i as f64).collect())
            }
            _ => Err(CliError::Config(
                "this command needs a coupling range; pass --gamma-range lo:hi:step".into(),
            )),
        }
    }
}

/// Tolerance knobs shared by all commands.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Gradient-norm convergence for minimization and the validation
    /// finite-difference checks.
    pub grad: f64,
    /// Coupling resolution of the critical-point bisection.
    pub bisect: f64,
    /// Eigenpair residual bound, and the validation embedding-agreement
    /// tolerance.
    pub eig: f64,
    /// Relative truncation-convergence tolerance of the exact ground state.
    pub conv: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { grad: 1e-8, bisect: 1e-4, eig: 1e-10, conv: 1e-8 }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub omega_a: f64,
    pub n_atoms: Vec<u32>,
    pub coupling: CouplingSpec,
    pub surfaces: Vec<SurfaceTag>,
    pub sector: SectorChoice,
    pub nu_max: Option<usize>,
    pub tol: Tolerances,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// The single atom number, for commands that cannot take a list.
    pub fn single_n(&self) -> Result<u32, CliError> {
        match self.n_atoms.as_slice() {
            [n] => Ok(*n),
            _ => Err(CliError::Config(
                "this command takes a single --n-atoms value, not a list".into(),
            )),
        }
    }

    /// The single coupling, for commands that cannot take a range.
    pub fn single_gamma(&self) -> Result<f64, CliError> {
        match self.coupling {
            CouplingSpec::Single(g) => Ok(g),
            CouplingSpec::None => Err(CliError::Config(
                "this command needs a coupling; pass --gamma".into(),
            )),
            CouplingSpec::Range { .. } => Err(CliError::Config(
                "this command takes a single --gamma, not a range".into(),
            )),
        }
    }
}

/// One unresolved configuration layer; every field optional. The TOML
/// config file deserializes straight into this, flags and environment
/// variables are collected into it manually.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub omega_a: Option<f64>,
    pub n_atoms: Option<AtomCount>,
    pub gamma: Option<f64>,
    pub gamma_range: Option<String>,
    pub surface: Option<String>,
    pub sector: Option<String>,
    pub nu_max: Option<usize>,
    pub tol_grad: Option<f64>,
    pub tol_bisect: Option<f64>,
    pub tol_eig: Option<f64>,
    pub tol_conv: Option<f64>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

/// Atom count as a bare integer, a list, or flag-style text ("10,20,40").
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AtomCount {
    One(u32),
    Many(Vec<u32>),
    Text(String),
}

impl AtomCount {
    fn resolve(&self) -> Result<Vec<u32>, CliError> {
        let list = match self {
            AtomCount::One(n) => vec![*n],
            AtomCount::Many(v) => v.clone(),
            AtomCount::Text(text) => text
                .split(',')
                .map(|part| {
                    part.trim().parse::<u32>().map_err(|_| {
                        CliError::Config(format!("invalid atom number '{part}' in n_atoms"))
                    })
                })
                .collect::<Result<Vec<u32>, CliError>>()?,
        };
        if list.is_empty() {
            return Err(CliError::Config("n_atoms list is empty".into()));
        }
        if list.iter().any(|&n| n == 0) {
            return Err(CliError::Config("n_atoms entries must be at least 1".into()));
        }
        Ok(list)
    }
}

impl RawConfig {
    /// Reject a single layer that sets both a coupling value and a range.
    fn check_coupling_exclusive(&self, origin: &str) -> Result<(), CliError> {
        if self.gamma.is_some() && self.gamma_range.is_some() {
            return Err(CliError::Config(format!(
                "gamma and gamma_range are mutually exclusive ({origin} sets both)"
            )));
        }
        Ok(())
    }

    /// Overlay `self` (higher precedence) on `base`. The coupling pair is
    /// treated as one slot: a layer that sets either member masks both of
    /// the base's.
    fn over(self, base: RawConfig) -> RawConfig {
        let coupling_set = self.gamma.is_some() || self.gamma_range.is_some();
        RawConfig {
            omega_a: self.omega_a.or(base.omega_a),
            n_atoms: self.n_atoms.or(base.n_atoms),
            gamma: if coupling_set { self.gamma } else { base.gamma },
            gamma_range: if coupling_set { self.gamma_range } else { base.gamma_range },
            surface: self.surface.or(base.surface),
            sector: self.sector.or(base.sector),
            nu_max: self.nu_max.or(base.nu_max),
            tol_grad: self.tol_grad.or(base.tol_grad),
            tol_bisect: self.tol_bisect.or(base.tol_bisect),
            tol_eig: self.tol_eig.or(base.tol_eig),
            tol_conv: self.tol_conv.or(base.tol_conv),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
        }
    }
}

/// Read one `DICKE_`-prefixed environment variable.
fn env_var(name: &str) -> Option<String> {
    std::env::var(format!("DICKE_{name}")).ok().filter(|v| !v.is_empty())
}

fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>, CliError> {
    match env_var(name) {
        None => Ok(None),
        Some(text) => text.parse::<T>().map(Some).map_err(|_| {
            CliError::Config(format!("cannot parse environment variable DICKE_{name}='{text}'"))
        }),
    }
}

/// Collect the `DICKE_*` environment layer.
pub fn raw_from_env() -> Result<RawConfig, CliError> {
    Ok(RawConfig {
        omega_a: env_parse("OMEGA_A")?,
        n_atoms: env_var("N_ATOMS").map(AtomCount::Text),
        gamma: env_parse("GAMMA")?,
        gamma_range: env_var("GAMMA_RANGE"),
        surface: env_var("SURFACE"),
        sector: env_var("SECTOR"),
        nu_max: env_parse("NU_MAX")?,
        tol_grad: env_parse("TOL_GRAD")?,
        tol_bisect: env_parse("TOL_BISECT")?,
        tol_eig: env_parse("TOL_EIG")?,
        tol_conv: env_parse("TOL_CONV")?,
        format: env_var("FORMAT"),
        out: env_var("OUT").map(PathBuf::from),
    })
}

/// Load the TOML config-file layer.
pub fn raw_from_file(path: &std::path::Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Config(format!("cannot read config file {}: {e}", path.display()))
    })?;
    toml::from_str(&text).map_err(|e| {
        CliError::Config(format!("cannot parse config file {}: {e}", path.display()))
    })
}

fn parse_gamma_range(text: &str) -> Result<CouplingSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "gamma range must look like lo:hi:step, got '{text}'"
        )));
    };
    let parse = |part: &str| {
        part.trim().parse::<f64>().map_err(|_| {
            CliError::Config(format!("invalid number '{part}' in gamma range '{text}'"))
        })
    };
    let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(CliError::Config(format!("gamma range '{text}' contains non-finite values")));
    }
    if lo > hi {
        return Err(CliError::Config(format!(
            "gamma range '{text}' is malformed: lo = {lo} exceeds hi = {hi}"
        )));
    }
    if step <= 0.0 {
        return Err(CliError::Config(format!(
            "gamma range '{text}' needs a positive step, got {step}"
        )));
    }
    Ok(CouplingSpec::Range { lo, hi, step })
}

fn parse_sector(text: &str) -> Result<SectorChoice, CliError> {
    match text {
        "even" => Ok(SectorChoice::Even),
        "odd" => Ok(SectorChoice::Odd),
        "full" => Ok(SectorChoice::Full),
        other => Err(CliError::Config(format!(
            "unknown sector '{other}' (expected even, odd, or full)"
        ))),
    }
}

fn positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Merge the three layers (flags over environment over file) and resolve
/// every field to its final value.
pub fn resolve(
    flags: RawConfig,
    env: RawConfig,
    file: Option<RawConfig>,
) -> Result<RunConfig, CliError> {
    flags.check_coupling_exclusive("the command line")?;
    env.check_coupling_exclusive("the environment")?;
    let mut merged = flags.over(env);
    if let Some(file) = file {
        file.check_coupling_exclusive("the config file")?;
        merged = merged.over(file);
    }

    let coupling = match (merged.gamma, &merged.gamma_range) {
        (Some(g), None) => {
            if !(g.is_finite() && g >= 0.0) {
                return Err(CliError::Config(format!(
                    "gamma must be finite and non-negative, got {g}"
                )));
            }
            CouplingSpec::Single(g)
        }
        (None, Some(range)) => parse_gamma_range(range)?,
        (None, None) => CouplingSpec::None,
        (Some(_), Some(_)) => unreachable!("overlay keeps one coupling slot"),
    };

    let surfaces = match &merged.surface {
        None => vec![SurfaceTag::SacsEven],
        Some(text) => {
            let mut tags = Vec::new();
            for part in text.split(',') {
                let tag = SurfaceTag::parse(part.trim())?;
                if !tags.contains(&tag) {
                    tags.push(tag);
                }
            }
            if tags.is_empty() {
                return Err(CliError::Config("surface list is empty".into()));
            }
            tags
        }
    };

    if let Some(nu) = merged.nu_max {
        if nu == 0 {
            return Err(CliError::Config("nu_max must be at least 1".into()));
        }
    }

    let defaults = Tolerances::default();
    Ok(RunConfig {
        omega_a: positive("omega_a", merged.omega_a.unwrap_or(1.0))?,
        n_atoms: merged.n_atoms.map(|n| n.resolve()).transpose()?.unwrap_or(vec![20]),
        coupling,
        surfaces,
        sector: merged.sector.as_deref().map(parse_sector).transpose()?.unwrap_or(SectorChoice::Even),
        nu_max: merged.nu_max,
        tol: Tolerances {
            grad: positive("tol_grad", merged.tol_grad.unwrap_or(defaults.grad))?,
            bisect: positive("tol_bisect", merged.tol_bisect.unwrap_or(defaults.bisect))?,
            eig: positive("tol_eig", merged.tol_eig.unwrap_or(defaults.eig))?,
            conv: positive("tol_conv", merged.tol_conv.unwrap_or(defaults.conv))?,
        },
        format: merged.format.as_deref().map(OutputFormat::parse).transpose()?.unwrap_or(OutputFormat::Csv),
        out: merged.out,
    })
}
