//! The four subcommand implementations. Each returns a renderable
//! [`Document`] plus the process exit code (validation failures emit their
//! report and then exit nonzero).

use serde::Serialize;
use serde_json::json;

use dicke::exact::{self, ExactOptions, SectorChoice};
use dicke::optimize::{self, LocalMinimum, SurfaceKind};
use dicke::sacs::ParitySector;
use dicke::validate::{self, CouplingSignFlip, StandardHamiltonian};
use dicke::{DickeParams, ValidationConfig};

use crate::config::{CouplingSpec, RunConfig, SurfaceTag};
use crate::output::{Cell, Document, Meta, Table};
use crate::CliError;

/// Metadata preamble shared by every command: tool version plus the fully
/// resolved configuration (deterministic — no timestamps, no hostnames).
fn base_meta(command: &str, cfg: &RunConfig) -> Meta {
    let mut meta = Meta::default();
    meta.push("tool", format!("dicke {}", env!("CARGO_PKG_VERSION")));
    meta.push("command", command);
    meta.push("omega_a", cfg.omega_a);
    meta.push(
        "n_atoms",
        cfg.n_atoms.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    match cfg.coupling {
        CouplingSpec::Single(g) => meta.push("gamma", g),
        CouplingSpec::Range { lo, hi, step } => meta.push("gamma_range", format!("{lo}:{hi}:{step}")),
        CouplingSpec::None => {}
    }
    meta.push(
        "surface",
        cfg.surfaces.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
    );
    meta.push("sector", cfg.sector.tag());
    if let Some(nu) = cfg.nu_max {
        meta.push("nu_max", nu);
    }
    meta.push("tol_grad", format!("{:e}", cfg.tol.grad));
    meta.push("tol_bisect", format!("{:e}", cfg.tol.bisect));
    meta.push("tol_eig", format!("{:e}", cfg.tol.eig));
    meta.push("tol_conv", format!("{:e}", cfg.tol.conv));
    meta.push("format", cfg.format.name());
    meta
}

fn parity(sector: SectorChoice) -> Result<ParitySector, CliError> {
    match sector {
        SectorChoice::Even => Ok(ParitySector::Even),
        SectorChoice::Odd => Ok(ParitySector::Odd),
        SectorChoice::Full => Err(CliError::Config(
            "this command needs a parity sector; pass --sector even or --sector odd".into(),
        )),
    }
}

fn minima_table(minima: &[LocalMinimum], n: f64) -> Table {
    let mut table = Table::new(
        "minima",
        &[
            "q", "p", "theta", "phi", "total_energy", "per_atom_energy", "photon_per_atom",
            "excited_fraction", "basin", "hessian_eig_low", "hessian_eig_high", "raw_q",
            "raw_theta",
        ],
    );
    for m in minima {
        let (raw_q, raw_theta) = m.raw_plane_coords();
        table.push(vec![
            m.point.q.into(),
            m.point.p.into(),
            m.point.theta.into(),
            m.point.phi.into(),
            m.total_energy.into(),
            (m.total_energy / n).into(),
            m.order_params.photon_per_atom.into(),
            m.order_params.excited_fraction.into(),
            format!("{:?}", m.basin_label).into(),
            m.hessian_eigs[0].into(),
            m.hessian_eigs[1].into(),
            raw_q.into(),
            raw_theta.into(),
        ]);
    }
    table
}

/// `surface`: sample one variational surface on a (q, θ) window around its
/// minima and report the refined minima plus a 1-D section through them.
pub fn cmd_surface(cfg: &RunConfig) -> Result<(Document, i32), CliError> {
    let n = cfg.single_n()?;
    let gamma = cfg.single_gamma()?;
    let [tag] = cfg.surfaces.as_slice() else {
        return Err(CliError::Config(
            "the surface command plots one surface at a time".into(),
        ));
    };
    let Some(kind) = tag.variational() else {
        return Err(CliError::Config(
            "the exact spectrum has no (q, theta) chart; pick a variational surface".into(),
        ));
    };
    let params = DickeParams::new(cfg.omega_a, n, gamma)?;

    // Window sized from the largest mean-field displacement at this
    // coupling, θ up to just below the singular ring.
    let q_half = (2.0 * params.n()).sqrt() * gamma * 1.15;
    let q_half = q_half.max(2.5);
    let grid = optimize::surface_grid(&params, kind, (-q_half, q_half), (0.0, 1.5), (81, 61))?;

    let mut grid_table = Table::new("grid", &["q", "theta", "energy"]);
    for (iq, &q) in grid.q_values.iter().enumerate() {
        for (it, &theta) in grid.theta_values.iter().enumerate() {
            let e = grid.energies[iq * grid.theta_values.len() + it];
            grid_table.push(vec![
                q.into(),
                theta.into(),
                e.map(Cell::Float).unwrap_or(Cell::Float(f64::NAN)),
            ]);
        }
    }
    let mut section_table = Table::new("section", &["q", "theta", "energy"]);
    for i in 0..grid.section.q.len() {
        section_table.push(vec![
            grid.section.q[i].into(),
            grid.section.theta[i].into(),
            grid.section.energy[i].map(Cell::Float).unwrap_or(Cell::Float(f64::NAN)),
        ]);
    }

    let doc = Document {
        meta: base_meta("surface", cfg),
        tables: vec![grid_table, minima_table(&grid.minima, params.n()), section_table],
        payload: crate::output::payload(
            "surface",
            serde_json::to_value(&grid).expect("surface grid serializes"),
        ),
    };
    Ok((doc, 0))
}

/// `critical`: equal-depth coupling search per atom number, with a
/// diagnostic row when the bracket holds no transition.
pub fn cmd_critical(cfg: &RunConfig) -> Result<(Document, i32), CliError> {
    let bracket = match cfg.coupling {
        CouplingSpec::Range { lo, hi, .. } => {
            if lo <= 0.0 {
                return Err(CliError::Config(format!(
                    "the bisection bracket needs positive couplings, got lo = {lo}"
                )));
            }
            (lo, hi)
        }
        CouplingSpec::None => (0.505, 0.64),
        CouplingSpec::Single(_) => {
            return Err(CliError::Config(
                "the critical command brackets the transition; pass --gamma-range lo:hi:_ or nothing"
                    .into(),
            ));
        }
    };
    let sector = parity(cfg.sector)?;

    let mut table = Table::new(
        "critical",
        &[
            "n_atoms", "gamma_c", "photon_jump", "excited_jump", "energy_gap", "q_low",
            "theta_low", "energy_low", "q_high", "theta_high", "energy_high", "bracket_lo",
            "bracket_hi", "status",
        ],
    );
    let mut rows_json = Vec::new();
    for &n in &cfg.n_atoms {
        let params = DickeParams::new(cfg.omega_a, n, 0.5 * (bracket.0 + bracket.1))?;
        match optimize::critical_coupling(&params, sector, bracket, cfg.tol.bisect) {
            Ok(result) => {
                let (low, high) = &result.minima_at_crossing;
                table.push(vec![
                    (n as i64).into(),
                    result.gamma_c.into(),
                    result.order_param_jump.0.into(),
                    result.order_param_jump.1.into(),
                    result.energy_gap_at_tol.into(),
                    low.point.q.into(),
                    low.point.theta.into(),
                    low.total_energy.into(),
                    high.point.q.into(),
                    high.point.theta.into(),
                    high.total_energy.into(),
                    result.bracket.0.into(),
                    result.bracket.1.into(),
                    "ok".into(),
                ]);
                rows_json.push(json!({
                    "n_atoms": n,
                    "status": "ok",
                    "result": serde_json::to_value(&result).expect("critical result serializes"),
                }));
            }
            Err(dicke::DickeError::NoTransition { lo, hi, detail }) => {
                let nan = Cell::Float(f64::NAN);
                table.push(vec![
                    (n as i64).into(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan.clone(),
                    nan,
                    lo.into(),
                    hi.into(),
                    format!("no transition: {detail}").into(),
                ]);
                rows_json.push(json!({
                    "n_atoms": n,
                    "status": "no_transition",
                    "detail": detail,
                    "bracket": [lo, hi],
                }));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let doc = Document {
        meta: base_meta("critical", cfg),
        tables: vec![table],
        payload: crate::output::payload("results", serde_json::Value::Array(rows_json)),
    };
    Ok((doc, 0))
}

/// One exact-diagonalization sweep row.
#[derive(Debug, Clone, Serialize)]
struct ExactRow {
    gamma: f64,
    per_atom_energy: f64,
    photon_per_atom: f64,
    excited_fraction: f64,
    var_q: f64,
    var_jx: f64,
    chi_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    overlap_sacs: Option<f64>,
    nu_max_used: usize,
    status: String,
}

impl ExactRow {
    fn failed(gamma: f64, status: String) -> Self {
        ExactRow {
            gamma,
            per_atom_energy: f64::NAN,
            photon_per_atom: f64::NAN,
            excited_fraction: f64::NAN,
            var_q: f64::NAN,
            var_jx: f64::NAN,
            chi_fidelity: f64::NAN,
            overlap_sacs: None,
            nu_max_used: 0,
            status,
        }
    }
}

/// `sweep`: per-coupling tables for each requested surface; the exact rows
/// carry variance observables, the fidelity susceptibility, and — when a
/// projected surface is swept alongside — the overlap with its minimum.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<(Document, i32), CliError> {
    let n = cfg.single_n()?;
    let grid = cfg.coupling.grid()?;
    let params = DickeParams::new(cfg.omega_a, n, grid[0])?;

    let mut tables = Vec::new();
    let mut sweeps_json = Vec::new();

    // Variational surfaces first; the exact sweep may reuse their minima.
    let mut companion: Option<(ParitySector, Vec<optimize::SweepRow>)> = None;
    for tag in &cfg.surfaces {
        let Some(kind) = tag.variational() else { continue };
        let rows = optimize::sweep(&params, kind, &grid)?;
        let mut table = Table::new(
            &format!("sweep_{}", tag.name()),
            &[
                "gamma", "per_atom_energy", "q", "theta", "photon_per_atom",
                "excited_fraction", "n_minima", "degenerate_depths",
            ],
        );
        for row in &rows {
            table.push(vec![
                row.gamma.into(),
                row.per_atom_energy.into(),
                row.global_minimum.point.q.into(),
                row.global_minimum.point.theta.into(),
                row.global_minimum.order_params.photon_per_atom.into(),
                row.global_minimum.order_params.excited_fraction.into(),
                (row.all_minima.len() as i64).into(),
                (row.degenerate_depths as i64).into(),
            ]);
        }
        tables.push(table);
        sweeps_json.push(json!({
            "surface": tag.name(),
            "rows": serde_json::to_value(&rows).expect("sweep rows serialize"),
        }));
        let sector = match kind {
            SurfaceKind::SacsEven => Some(ParitySector::Even),
            SurfaceKind::SacsOdd => Some(ParitySector::Odd),
            SurfaceKind::MeanField => None,
        };
        if companion.is_none() {
            if let Some(sector) = sector {
                companion = Some((sector, rows));
            }
        }
    }

    if cfg.surfaces.contains(&SurfaceTag::Exact) {
        let mut opts = ExactOptions::default();
        opts.nu_max = cfg.nu_max;
        opts.tol_conv = cfg.tol.conv;
        opts.tol_eig = cfg.tol.eig;
        let rows: Vec<ExactRow> = grid
            .iter()
            .enumerate()
            .map(|(i, &g)| exact_row(&params.with_gamma(g), cfg, &opts, g, i, &companion))
            .collect();

        let with_overlap = companion.is_some();
        let mut columns = vec![
            "gamma", "per_atom_energy", "photon_per_atom", "excited_fraction", "var_q",
            "var_jx", "chi_fidelity",
        ];
        if with_overlap {
            columns.push("overlap_sacs");
        }
        columns.extend(["nu_max_used", "status"]);
        let mut table = Table::new("sweep_exact", &columns);
        for row in &rows {
            let mut cells: Vec<Cell> = vec![
                row.gamma.into(),
                row.per_atom_energy.into(),
                row.photon_per_atom.into(),
                row.excited_fraction.into(),
                row.var_q.into(),
                row.var_jx.into(),
                row.chi_fidelity.into(),
            ];
            if with_overlap {
                cells.push(row.overlap_sacs.unwrap_or(f64::NAN).into());
            }
            cells.push((row.nu_max_used as i64).into());
            cells.push(row.status.clone().into());
            table.push(cells);
        }
        tables.push(table);
        sweeps_json.push(json!({
            "surface": "exact",
            "rows": serde_json::to_value(&rows).expect("exact rows serialize"),
        }));
    }

    let doc = Document {
        meta: base_meta("sweep", cfg),
        tables,
        payload: crate::output::payload("sweeps", serde_json::Value::Array(sweeps_json)),
    };
    Ok((doc, 0))
}

/// One exact row; failures become per-row diagnostics instead of aborting
/// the whole sweep.
fn exact_row(
    params: &DickeParams,
    cfg: &RunConfig,
    opts: &ExactOptions,
    gamma: f64,
    index: usize,
    companion: &Option<(ParitySector, Vec<optimize::SweepRow>)>,
) -> ExactRow {
    let record = match exact::ground_state(params, cfg.sector, opts) {
        Ok(r) => r,
        Err(e) => return ExactRow::failed(gamma, format!("ground state failed: {e}")),
    };
    let mut notes: Vec<String> = Vec::new();

    let chi = match exact::fidelity_susceptibility(params, cfg.sector, 1e-3, opts) {
        Ok(chi) => chi,
        Err(e) => {
            notes.push(format!("susceptibility failed: {e}"));
            f64::NAN
        }
    };

    let overlap_sacs = companion.as_ref().map(|(sector, rows)| {
        match exact::embed_sacs(params, &rows[index].global_minimum.point, *sector, &record.basis)
        {
            Ok(embedded) => {
                match exact::overlap(&exact::lift_real(&record.amplitudes), &embedded) {
                    Ok(v) => v,
                    Err(e) => {
                        notes.push(format!("overlap failed: {e}"));
                        f64::NAN
                    }
                }
            }
            Err(e) => {
                notes.push(format!("embedding failed: {e}"));
                f64::NAN
            }
        }
    });

    ExactRow {
        gamma,
        per_atom_energy: record.energy / params.n(),
        photon_per_atom: record.observables.photon_per_atom,
        excited_fraction: record.observables.excited_fraction,
        var_q: record.observables.var_q,
        var_jx: record.observables.var_jx,
        chi_fidelity: chi,
        overlap_sacs,
        nu_max_used: record.nu_max_used,
        status: if notes.is_empty() { "ok".to_string() } else { notes.join("; ") },
    }
}

/// `validate`: run the cross-module oracle suite and print the pass/fail
/// matrix; exit code 3 when any check fails.
pub fn cmd_validate(cfg: &RunConfig) -> Result<(Document, i32), CliError> {
    let n = cfg.single_n()?;
    let gamma = match cfg.coupling {
        CouplingSpec::Single(g) => g,
        CouplingSpec::None => 0.45,
        CouplingSpec::Range { .. } => {
            return Err(CliError::Config(
                "the validate command takes a single --gamma, not a range".into(),
            ));
        }
    };
    let params = DickeParams::new(cfg.omega_a, n, gamma)?;
    let vconfig = ValidationConfig { params, fd_tol: cfg.tol.grad, embed_tol: cfg.tol.eig };

    // Test-harness hook: a deliberately broken Hamiltonian assembly proves
    // the suite rejects defective matrices.
    let injected = std::env::var("DICKE_VALIDATE_INJECT").ok().filter(|v| !v.is_empty());
    let report = match injected.as_deref() {
        None => validate::run_validation_with(&vconfig, &StandardHamiltonian)?,
        Some("coupling_sign") => validate::run_validation_with(&vconfig, &CouplingSignFlip)?,
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown DICKE_VALIDATE_INJECT value '{other}' (expected coupling_sign)"
            )));
        }
    };

    let mut meta = base_meta("validate", cfg);
    meta.push(
        "hamiltonian",
        injected.as_deref().map(|_| "coupling_sign_flip").unwrap_or("standard"),
    );
    meta.push("gamma_used", gamma);
    meta.push("overall", if report.all_passed { "pass" } else { "fail" });

    let mut table = Table::new("checks", &["check", "passed", "residual", "threshold", "detail"]);
    for c in &report.checks {
        table.push(vec![
            c.name.clone().into(),
            if c.passed { "pass" } else { "fail" }.into(),
            c.residual.into(),
            c.threshold.into(),
            c.detail.clone().into(),
        ]);
    }

    let code = if report.all_passed { 0 } else { 3 };
    let doc = Document {
        meta,
        tables: vec![table],
        payload: crate::output::payload(
            "report",
            serde_json::to_value(&report).expect("validation report serializes"),
        ),
    };
    Ok((doc, code))
}

/// Shared entry point: dispatch, render, emit, and produce the exit code.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<i32, CliError> {
    let (doc, code) = match command {
        "surface" => cmd_surface(cfg)?,
        "critical" => cmd_critical(cfg)?,
        "sweep" => cmd_sweep(cfg)?,
        "validate" => cmd_validate(cfg)?,
        other => return Err(CliError::Config(format!("unknown command {other}"))),
    };
    crate::output::emit(cfg.out.as_deref(), &doc.render(cfg.format))?;
    Ok(code)
}
