//! Minimization on the in-plane energy surfaces and everything built on it:
//! multi-start local-minimum searches, basin labeling, coupling sweeps, the
//! equal-depth critical coupling, and rectangular grids for plotting.
//!
//! All three variational surfaces (mean-field product states and the two
//! parity-projected families) share a reflection symmetry that maps
//! `(q, p, theta, phi)` to `(-q, -p, theta, phi + pi)` at equal energy, and
//! every minimum encountered in practice lies in the `p = 0` plane with
//! `phi` fixed at `0` or `pi`.  The search therefore runs in the
//! two-dimensional chart `(q, theta)` at `p = 0`, `phi = 0`, where the
//! coupling term is `-|coupling| * |q| sin(theta)` for `q < 0`; reported
//! minima are canonicalized to `q >= 0` by moving the phase to `phi = pi`,
//! which lands on the same energy by the symmetry above.
//!
//! Minimization is a damped Newton iteration on the analytic gradient with
//! a finite-difference Hessian, an Armijo backtracking line search, and a
//! steepest-descent fallback whenever the Hessian is not positive definite.
//! Candidates must pass a strict second-order test (both Hessian eigenvalues
//! positive) before they are reported, so saddle points and the flat
//! projected origin are filtered out rather than misreported as minima.

use serde::Serialize;

use crate::error::{DickeError, Result};
use crate::model::{self, DickeParams, FieldMatterPoint};
use crate::sacs::{self, ParitySector};

/// Which energy surface an operation works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    /// Unprojected product-state energy (exact in the large-atom-number
    /// limit, phase transition only at infinite size).
    MeanField,
    /// Even-parity projected surface.
    SacsEven,
    /// Odd-parity projected surface.
    SacsOdd,
}

impl SurfaceKind {
    /// Parity sector for the projected surfaces, `None` for mean field.
    pub fn sector(self) -> Option<ParitySector> {
        match self {
            SurfaceKind::MeanField => None,
            SurfaceKind::SacsEven => Some(ParitySector::Even),
            SurfaceKind::SacsOdd => Some(ParitySector::Odd),
        }
    }

    /// Stable machine-readable tag used in file output.
    pub fn tag(self) -> &'static str {
        match self {
            SurfaceKind::MeanField => "mean_field",
            SurfaceKind::SacsEven => "sacs_even",
            SurfaceKind::SacsOdd => "sacs_odd",
        }
    }
}

impl std::fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Coarse classification of a minimum by its field displacement.
///
/// Below the transition the relevant minimum sits at small `|q|`; above it
/// the deep minimum carries a macroscopic displacement.  When both coexist
/// the labels are assigned by comparing `|q|` within the pair; a lone
/// minimum is labeled by its position relative to the infinite-size
/// displacement at the same coupling (see `lone_label`), which is reliable
/// away from the crossover region and documented as heuristic inside it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasinLabel {
    /// Small-displacement basin (continuously connected to the origin).
    LowQ,
    /// Macroscopically displaced basin.
    HighQ,
}

impl std::fmt::Display for BasinLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BasinLabel::LowQ => "low_q",
            BasinLabel::HighQ => "high_q",
        })
    }
}

/// Scalar order parameters evaluated at a surface point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderParameters {
    /// Mean photon number per atom, `(q^2 + p^2) / (2 N)`.
    pub photon_per_atom: f64,
    /// Fraction of atoms in the excited level, `(1 - cos(theta)) / 2`.
    pub excited_fraction: f64,
    /// Raw field quadrature scale `q / 2` (sign kept from the stored point).
    pub half_q: f64,
    /// Raw Bloch projection `cos(theta)`.
    pub cos_theta: f64,
}

/// A refined local minimum of an in-plane energy surface.
#[derive(Debug, Clone, Serialize)]
pub struct LocalMinimum {
    /// Canonicalized position: `q >= 0`, `p = 0`, `phi` in `{0, pi}`.
    pub point: FieldMatterPoint,
    /// Total (extensive) energy at the minimum.
    pub total_energy: f64,
    /// Eigenvalues of the in-plane `(q, theta)` Hessian, ascending.
    /// Both are strictly positive for every reported minimum.
    pub hessian_eigs: [f64; 2],
    /// Basin classification; see [`BasinLabel`].
    pub basin_label: BasinLabel,
    /// Order parameters evaluated at `point`.
    pub order_params: OrderParameters,
}

impl LocalMinimum {
    /// Position in the raw search chart (`q <= 0`, `phi = 0` plane).
    ///
    /// Grids and section lines are drawn in that chart, so this is the
    /// coordinate at which the minimum appears on them.
    pub fn raw_plane_coords(&self) -> (f64, f64) {
        if (self.point.phi - std::f64::consts::PI).abs() < 1e-9 {
            (-self.point.q, self.point.theta)
        } else {
            (self.point.q, self.point.theta)
        }
    }
}

/// Tuning knobs for the multi-start minimum search.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Half-width of the displacement window; `None` selects
    /// `max(3 sqrt(N) gamma, 1)`, which brackets the largest physical
    /// displacement with a wide margin at every coupling.
    pub q_max: Option<f64>,
    /// Upper edge of the tilt window.  The projected surfaces diverge at
    /// `theta = pi/2`, so the default stops just short of it.
    pub theta_max: f64,
    /// Number of start points along `q` and `theta`.
    pub starts: (usize, usize),
    /// Gradient norm below which a refinement counts as converged.
    pub tol_grad: f64,
    /// Iteration cap per start point.
    pub max_iter: usize,
    /// Distance in `(q, theta)` under which two candidates merge.
    pub merge_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_max: None,
            theta_max: std::f64::consts::FRAC_PI_2 - 1e-6,
            starts: (41, 41),
            tol_grad: 1e-8,
            max_iter: 200,
            merge_tol: 1e-6,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.starts.0 < 2 || self.starts.1 < 2 {
            return Err(DickeError::Config(
                "search needs at least a 2 x 2 grid of start points".into(),
            ));
        }
        if !(self.tol_grad > 0.0) || !(self.merge_tol > 0.0) {
            return Err(DickeError::Config(
                "search tolerances must be positive".into(),
            ));
        }
        if !(self.theta_max > 0.0) || self.theta_max >= std::f64::consts::FRAC_PI_2 {
            return Err(DickeError::Config(
                "theta_max must lie in (0, pi/2)".into(),
            ));
        }
        if let Some(qm) = self.q_max {
            if !(qm > 0.0) || !qm.is_finite() {
                return Err(DickeError::Config("q_max must be positive".into()));
            }
        }
        if self.max_iter == 0 {
            return Err(DickeError::Config("max_iter must be nonzero".into()));
        }
        Ok(())
    }

    fn effective_q_max(&self, params: &DickeParams) -> f64 {
        self.q_max
            .unwrap_or_else(|| (3.0 * params.n().sqrt() * params.gamma).max(1.0))
    }
}

/// Energy of `surface` at `(q, theta)` in the `p = 0`, `phi = 0` plane.
fn plane_energy(params: &DickeParams, surface: SurfaceKind, q: f64, theta: f64) -> Result<f64> {
    let pt = FieldMatterPoint::new(q, 0.0, theta, 0.0);
    match surface.sector() {
        None => Ok(model::mean_field_energy_total(params, &pt)),
        Some(sector) => sacs::sacs_energy(params, &pt, sector),
    }
}

/// In-plane gradient `(dE/dq, dE/dtheta)` matching [`plane_energy`].
fn plane_gradient(
    params: &DickeParams,
    surface: SurfaceKind,
    q: f64,
    theta: f64,
) -> Result<[f64; 2]> {
    let pt = FieldMatterPoint::new(q, 0.0, theta, 0.0);
    match surface.sector() {
        None => {
            let g = model::mean_field_gradient(params, &pt);
            // Per-atom gradient scaled up to the total-energy convention.
            let n = params.n();
            Ok([g[0] * n, g[2] * n])
        }
        Some(sector) => {
            let g = sacs::sacs_gradient(params, &pt, sector)?;
            Ok([g[0], g[2]])
        }
    }
}

/// Central-difference Hessian of the analytic in-plane gradient.
fn plane_hessian(
    params: &DickeParams,
    surface: SurfaceKind,
    q: f64,
    theta: f64,
) -> Result<[[f64; 2]; 2]> {
    const H: f64 = 1e-5;
    let gq_p = plane_gradient(params, surface, q + H, theta)?;
    let gq_m = plane_gradient(params, surface, q - H, theta)?;
    let gt_p = plane_gradient(params, surface, q, theta + H)?;
    let gt_m = plane_gradient(params, surface, q, theta - H)?;
    let mut hess = [
        [(gq_p[0] - gq_m[0]) / (2.0 * H), (gt_p[0] - gt_m[0]) / (2.0 * H)],
        [(gq_p[1] - gq_m[1]) / (2.0 * H), (gt_p[1] - gt_m[1]) / (2.0 * H)],
    ];
    // Symmetrize: the cross terms agree analytically, differencing noise
    // does not.
    let off = 0.5 * (hess[0][1] + hess[1][0]);
    hess[0][1] = off;
    hess[1][0] = off;
    Ok(hess)
}

/// Eigenvalues of a symmetric 2 x 2 matrix, ascending.
fn sym2_eigs(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    [0.5 * tr - disc, 0.5 * tr + disc]
}

/// Solve the symmetric 2 x 2 system `m x = -g` if `m` is positive definite.
fn newton_step(m: &[[f64; 2]; 2], g: &[f64; 2]) -> Option<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if m[0][0] <= 0.0 || det <= 0.0 {
        return None; // not positive definite
    }
    Some([
        -(m[1][1] * g[0] - m[0][1] * g[1]) / det,
        -(m[0][0] * g[1] - m[1][0] * g[0]) / det,
    ])
}

struct Refined {
    q: f64,
    theta: f64,
    energy: f64,
    grad_norm: f64,
}

/// Damped Newton refinement from `(q0, theta0)`.
///
/// Returns the refined point when the gradient norm drops below `tol`,
/// otherwise the best point seen (caller inspects `grad_norm`).
fn refine(
    params: &DickeParams,
    surface: SurfaceKind,
    q0: f64,
    theta0: f64,
    bounds: (f64, f64),
    tol: f64,
    max_iter: usize,
) -> Option<Refined> {
    let (q_bound, theta_bound) = bounds;
    let clamp = |q: f64, t: f64| -> (f64, f64) {
        (
            q.clamp(-q_bound - 0.5, q_bound + 0.5),
            t.clamp(0.0, theta_bound),
        )
    };
    let (mut q, mut theta) = clamp(q0, theta0);
    let mut energy = plane_energy(params, surface, q, theta).ok()?;
    let mut best: Option<Refined> = None;
    for _ in 0..max_iter {
        let grad = plane_gradient(params, surface, q, theta).ok()?;
        let grad_norm = grad[0].hypot(grad[1]);
        if best.as_ref().is_none_or(|b| grad_norm < b.grad_norm) {
            best = Some(Refined { q, theta, energy, grad_norm });
        }
        if grad_norm <= tol {
            return best;
        }
        let dir = plane_hessian(params, surface, q, theta)
            .ok()
            .and_then(|h| newton_step(&h, &grad))
            .unwrap_or([-grad[0], -grad[1]]);
        let slope = dir[0] * grad[0] + dir[1] * grad[1];
        if slope >= 0.0 {
            return best; // numerical breakdown; report best so far
        }
        let mut advanced = false;
        // Terminal phase: once the gradient is small the per-step energy
        // decrease (~grad^2 / curvature) sinks below the floating-point
        // resolution of the energy itself, so the Armijo test below can no
        // longer certify descent.  The gradient norm still contracts under
        // the full Newton step, so accept on that criterion instead.
        if grad_norm <= 1e-5 {
            let (qn, tn) = clamp(q + dir[0], theta + dir[1]);
            if let (Ok(en), Ok(gn)) = (
                plane_energy(params, surface, qn, tn),
                plane_gradient(params, surface, qn, tn),
            ) {
                if gn[0].hypot(gn[1]) <= 0.5 * grad_norm {
                    q = qn;
                    theta = tn;
                    energy = en;
                    advanced = true;
                }
            }
        }
        if !advanced {
            // Armijo backtracking on the proposed direction.
            let mut step = 1.0;
            for _ in 0..40 {
                let (qn, tn) = clamp(q + step * dir[0], theta + step * dir[1]);
                if let Ok(en) = plane_energy(params, surface, qn, tn) {
                    if en <= energy + 1e-4 * step * slope {
                        q = qn;
                        theta = tn;
                        energy = en;
                        advanced = true;
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        if !advanced {
            return best; // line search exhausted
        }
    }
    best
}

/// Convert a refined in-plane point into a canonical [`LocalMinimum`].
///
/// Points with `q < 0` in the `phi = 0` chart map to `(|q|, phi = pi)` at
/// identical energy; `basin_label` is filled in later by the caller.
fn to_minimum(
    params: &DickeParams,
    r: &Refined,
    eigs: [f64; 2],
) -> LocalMinimum {
    let (q_canon, phi_canon) = if r.q < 0.0 {
        (-r.q, std::f64::consts::PI)
    } else {
        (r.q, 0.0)
    };
    let point = FieldMatterPoint::new(q_canon, 0.0, r.theta, phi_canon);
    LocalMinimum {
        order_params: order_parameters(params, &point),
        point,
        total_energy: r.energy,
        hessian_eigs: eigs,
        basin_label: BasinLabel::LowQ, // provisional; relabeled by caller
    }
}

/// Order parameters at an arbitrary surface point.
pub fn order_parameters(params: &DickeParams, point: &FieldMatterPoint) -> OrderParameters {
    OrderParameters {
        photon_per_atom: (point.q * point.q + point.p * point.p) / (2.0 * params.n()),
        excited_fraction: 0.5 * (1.0 - point.theta.cos()),
        half_q: 0.5 * point.q,
        cos_theta: point.theta.cos(),
    }
}

/// Infinite-size equilibrium displacement magnitude at this coupling
/// (zero below the infinite-size critical coupling).
fn mf_displacement(params: &DickeParams) -> f64 {
    let gc = params.gamma_c_tdl();
    if params.gamma <= gc {
        return 0.0;
    }
    let r = (gc / params.gamma).powi(2);
    2.0 * (params.n() / 2.0).sqrt() * params.gamma * (1.0 - r * r).sqrt()
}

/// Label for a solitary minimum: compare its displacement with the
/// infinite-size one.  Below the infinite-size critical coupling only the
/// small-displacement basin exists; above it, a displacement under 70 % of
/// the infinite-size value still reads as the small basin.  Near the
/// crossover the two merge continuously and the label is a judgment call;
/// sweeps therefore re-label by continuity rather than trusting this rule.
fn lone_label(params: &DickeParams, q_abs: f64) -> BasinLabel {
    if params.gamma <= params.gamma_c_tdl() {
        return BasinLabel::LowQ;
    }
    if q_abs < 0.7 * mf_displacement(params) {
        BasinLabel::LowQ
    } else {
        BasinLabel::HighQ
    }
}

fn assign_labels(params: &DickeParams, minima: &mut [LocalMinimum]) {
    match minima.len() {
        0 => {}
        1 => minima[0].basin_label = lone_label(params, minima[0].point.q),
        _ => {
            // Smallest displacement is the low basin; everything else high.
            let low_idx = (0..minima.len())
                .min_by(|&a, &b| {
                    minima[a].point.q.partial_cmp(&minima[b].point.q).unwrap()
                })
                .unwrap();
            for (i, m) in minima.iter_mut().enumerate() {
                m.basin_label = if i == low_idx {
                    BasinLabel::LowQ
                } else {
                    BasinLabel::HighQ
                };
            }
        }
    }
}

/// Find all local minima of `surface` at the given parameters.
///
/// Runs a `starts.0 x starts.1` grid of damped-Newton refinements over the
/// `(q, theta)` window, keeps the converged points whose in-plane Hessian is
/// positive definite, merges duplicates (keeping the lower energy), and
/// returns the survivors sorted by ascending energy with canonical
/// coordinates (`q >= 0`).  An empty vector means every converged point
/// failed the second-order test (e.g. the flat projected origin); an error
/// is returned only when no start point converges at all.
pub fn find_local_minima(
    params: &DickeParams,
    surface: SurfaceKind,
    search: &SearchConfig,
) -> Result<Vec<LocalMinimum>> {
    params.validate()?;
    search.validate()?;
    let q_bound = search.effective_q_max(params);
    let (nq, nt) = search.starts;
    let mut refined: Vec<Refined> = Vec::new();
    let mut converged_any = false;
    let mut best_residual = f64::INFINITY;
    for iq in 0..nq {
        let q0 = -q_bound + 2.0 * q_bound * (iq as f64) / ((nq - 1) as f64);
        for it in 0..nt {
            let t0 = search.theta_max * (it as f64) / ((nt - 1) as f64);
            let Some(r) = refine(
                params,
                surface,
                q0,
                t0,
                (q_bound, search.theta_max),
                search.tol_grad,
                search.max_iter,
            ) else {
                continue;
            };
            if r.grad_norm <= search.tol_grad {
                converged_any = true;
                refined.push(r);
            } else if r.grad_norm < best_residual {
                best_residual = r.grad_norm;
            }
        }
    }
    if !converged_any {
        return Err(DickeError::NonConvergentRefinement { best_residual });
    }

    // Second-order filter, then merge duplicates keeping the lower energy.
    refined.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap());
    let mut minima: Vec<LocalMinimum> = Vec::new();
    let mut kept_raw: Vec<(f64, f64)> = Vec::new();
    for r in &refined {
        if kept_raw
            .iter()
            .any(|&(q, t)| (q - r.q).hypot(t - r.theta) < search.merge_tol)
        {
            continue;
        }
        let Ok(hess) = plane_hessian(params, surface, r.q, r.theta) else {
            continue;
        };
        let eigs = sym2_eigs(&hess);
        if eigs[0] <= 0.0 {
            continue; // saddle, maximum, or flat direction
        }
        kept_raw.push((r.q, r.theta));
        minima.push(to_minimum(params, r, eigs));
    }
    // Mirror twins (q and -q at the same theta) are the same canonical
    // minimum; merge them too.
    let mut dedup: Vec<LocalMinimum> = Vec::new();
    for m in minima {
        if dedup.iter().any(|k| {
            (k.point.q - m.point.q).hypot(k.point.theta - m.point.theta) < search.merge_tol.max(1e-9)
        }) {
            continue;
        }
        dedup.push(m);
    }
    dedup.sort_by(|a, b| a.total_energy.partial_cmp(&b.total_energy).unwrap());
    assign_labels(params, &mut dedup);
    Ok(dedup)
}

/// Result of the equal-depth coupling search.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalResult {
    /// Coupling at which the two basins exchange global-minimum status.
    pub gamma_c: f64,
    /// The two competing minima evaluated at `gamma_c` (low basin first).
    pub minima_at_crossing: (LocalMinimum, LocalMinimum),
    /// `|E_low - E_high|` at `gamma_c`; small but generically nonzero
    /// because the bisection stops at finite tolerance.
    pub energy_gap_at_tol: f64,
    /// Final bisection bracket; contains `gamma_c` with `b - a <= tol`.
    pub bracket: (f64, f64),
    /// Jump of `(photon_per_atom, excited_fraction)` between the two
    /// minima at the crossing.
    pub order_param_jump: (f64, f64),
}

/// Track one basin's minimum from `(gamma_from, start)` toward
/// `gamma_to` in steps of at most `step`, warm-starting each refinement
/// from the previous point.  Returns the last coupling at which the basin
/// was still found together with the refined points along the way.
fn track_basin(
    params: &DickeParams,
    surface: SurfaceKind,
    start: (f64, f64),
    gamma_from: f64,
    gamma_to: f64,
    step: f64,
    tol_grad: f64,
    jump_bound: f64,
) -> (f64, Vec<(f64, (f64, f64))>) {
    let mut path = vec![(gamma_from, start)];
    let mut current = start;
    let mut last_ok = gamma_from;
    let n_steps = ((gamma_to - gamma_from).abs() / step).ceil().max(1.0) as usize;
    let bounds = (
        (3.0 * params.n().sqrt() * gamma_from.max(gamma_to)).max(1.0),
        std::f64::consts::FRAC_PI_2 - 1e-6,
    );
    for k in 1..=n_steps {
        let g = gamma_from + (gamma_to - gamma_from) * (k as f64) / (n_steps as f64);
        let p = params.with_gamma(g);
        let found = refine(&p, surface, current.0, current.1, bounds, tol_grad, 200)
            .filter(|r| r.grad_norm <= tol_grad)
            .filter(|r| {
                plane_hessian(&p, surface, r.q, r.theta)
                    .map(|h| sym2_eigs(&h)[0] > 0.0)
                    .unwrap_or(false)
            })
            .filter(|r| (r.q - current.0).hypot(r.theta - current.1) <= jump_bound);
        match found {
            Some(r) => {
                current = (r.q, r.theta);
                path.push((g, current));
                last_ok = g;
            }
            None => break, // basin annihilated (fold) or tracking lost
        }
    }
    (last_ok, path)
}

fn nearest_seed(path: &[(f64, (f64, f64))], gamma: f64) -> (f64, f64) {
    path.iter()
        .min_by(|a, b| {
            (a.0 - gamma)
                .abs()
                .partial_cmp(&(b.0 - gamma).abs())
                .unwrap()
        })
        .map(|&(_, p)| p)
        .expect("tracking path is never empty")
}

/// Refine one basin's minimum at `gamma`, warm-started from the nearest
/// path entry.  Existence is decided strictly: the refinement must
/// converge, stay within `jump_bound` of its seed (no hopping into the
/// other basin across a fold), and pass the positive-definiteness test
/// (no settling onto the saddle that absorbs a dying minimum).  Successful
/// points extend the path so later seeds improve.
fn family_point(
    params: &DickeParams,
    surface: SurfaceKind,
    search: &SearchConfig,
    path: &mut Vec<(f64, (f64, f64))>,
    gamma: f64,
    jump_bound: f64,
) -> Option<Refined> {
    let p = params.with_gamma(gamma);
    let bounds = (search.effective_q_max(&p), search.theta_max);
    let seed = nearest_seed(path, gamma);
    let r = refine(&p, surface, seed.0, seed.1, bounds, search.tol_grad, 200)
        .filter(|r| r.grad_norm <= search.tol_grad)
        .filter(|r| (r.q - seed.0).hypot(r.theta - seed.1) <= jump_bound)
        .filter(|r| {
            plane_hessian(&p, surface, r.q, r.theta)
                .map(|h| sym2_eigs(&h)[0] > 0.0)
                .unwrap_or(false)
        })?;
    path.push((gamma, (r.q, r.theta)));
    Some(r)
}

/// Locate the coupling where the two basins of the projected surface have
/// equal depth, by bisection on the depth difference.
///
/// The bracket endpoints anchor the two basins: the global minimum at
/// `bracket.0` seeds the low basin and the global minimum at `bracket.1`
/// the high one.  Each basin is then continued across the bracket with
/// warm-started refinements; the couplings where both exist bound the
/// coexistence window, and the sign of `E_low - E_high` is extended outside
/// it by which basin survives.  Returns
/// [`NoTransition`](DickeError::NoTransition) when the depth difference
/// does not change sign on the bracket (e.g. both endpoints sit in the same
/// phase).
pub fn critical_coupling(
    params: &DickeParams,
    sector: ParitySector,
    bracket: (f64, f64),
    tol: f64,
) -> Result<CriticalResult> {
    params.validate()?;
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(DickeError::InvalidParams(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(tol > 0.0) {
        return Err(DickeError::InvalidParams(format!(
            "bisection tolerance must be positive, got {tol}"
        )));
    }
    let surface = match sector {
        ParitySector::Even => SurfaceKind::SacsEven,
        ParitySector::Odd => SurfaceKind::SacsOdd,
    };
    let search = SearchConfig::default();
    let at = |g: f64| params.with_gamma(g);

    let minima_lo = find_local_minima(&at(lo), surface, &search)?;
    let minima_hi = find_local_minima(&at(hi), surface, &search)?;
    let (Some(anchor_lo), Some(anchor_hi)) = (minima_lo.first(), minima_hi.first()) else {
        return Err(DickeError::NoTransition {
            lo,
            hi,
            detail: "no minimum found at a bracket endpoint".into(),
        });
    };
    let seed_lo = anchor_lo.raw_plane_coords();
    let seed_hi = anchor_hi.raw_plane_coords();
    if (seed_lo.0 - seed_hi.0).hypot(seed_lo.1 - seed_hi.1) < 1e-4 {
        return Err(DickeError::NoTransition {
            lo,
            hi,
            detail: "both bracket endpoints anchor the same basin".into(),
        });
    }

    let step = ((hi - lo) / 20.0).min(0.005).max(tol.min(0.005));
    // Warm-start hop tolerance: basin spacing grows like sqrt(N), so the
    // discrimination radius scales the same way.
    let jump_bound = 0.3 * (params.n() / 20.0).sqrt().max(1.0);
    let (low_until, low_path) =
        track_basin(params, surface, seed_lo, lo, hi, step, search.tol_grad, jump_bound);
    let (high_from, high_path) =
        track_basin(params, surface, seed_hi, hi, lo, step, search.tol_grad, jump_bound);

    // Same-basin guard: if both trackers survive into a shared window but
    // refine to the same point there, the endpoints anchor one family and
    // there is no depth crossing to bisect.
    let window = (lo.max(high_from), hi.min(low_until));
    if window.0 <= window.1 {
        let gm = 0.5 * (window.0 + window.1);
        let p = at(gm);
        let bounds = (search.effective_q_max(&p), search.theta_max);
        let sl = nearest_seed(&low_path, gm);
        let sh = nearest_seed(&high_path, gm);
        let rl = refine(&p, surface, sl.0, sl.1, bounds, search.tol_grad, 200)
            .filter(|r| r.grad_norm <= search.tol_grad);
        let rh = refine(&p, surface, sh.0, sh.1, bounds, search.tol_grad, 200)
            .filter(|r| r.grad_norm <= search.tol_grad);
        if let (Some(l), Some(h)) = (rl, rh) {
            if (l.q - h.q).hypot(l.theta - h.theta) < 1e-3 {
                return Err(DickeError::NoTransition {
                    lo,
                    hi,
                    detail: "both bracket endpoints anchor the same basin".into(),
                });
            }
        }
    }

    // Depth difference with sign extended outside the coexistence window:
    // where only one basin exists, that basin is trivially the deeper one.
    // Existence at each coupling is decided by `family_point` itself (the
    // tracking passes above only seed it), so a coexistence window
    // narrower than the tracking step is still resolved correctly.
    let mut low_path = low_path;
    let mut high_path = high_path;
    let mut depth_diff = |g: f64| -> Result<f64> {
        let low = family_point(params, surface, &search, &mut low_path, g, jump_bound);
        let high = family_point(params, surface, &search, &mut high_path, g, jump_bound);
        match (low, high) {
            (Some(l), Some(h)) => Ok(l.energy - h.energy),
            (Some(_), None) => Ok(-1.0), // only the low basin: low is deeper
            (None, Some(_)) => Ok(1.0),  // only the high basin
            (None, None) => Err(DickeError::TrackingLost {
                label: "both",
                gamma: g,
                jump: f64::NAN,
            }),
        }
    };

    let mut a = lo;
    let mut b = hi;
    let mut fa = depth_diff(a)?;
    let fb = depth_diff(b)?;
    if fa == 0.0 || fb == 0.0 {
        // Exactly degenerate endpoint: vanishing bisection work left.
        let g = if fa == 0.0 { a } else { b };
        return finish_critical(params, surface, &search, g, (a, b), &low_path, &high_path);
    }
    if fa.signum() == fb.signum() {
        return Err(DickeError::NoTransition {
            lo,
            hi,
            detail: format!(
                "basin depths do not cross: depth difference has sign {} across the whole bracket",
                if fa > 0.0 { "+" } else { "-" }
            ),
        });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = depth_diff(mid)?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let gamma_c = 0.5 * (a + b);
    finish_critical(params, surface, &search, gamma_c, (a, b), &low_path, &high_path)
}

/// Build the [`CriticalResult`] by refining both basins at `gamma_c`.
fn finish_critical(
    params: &DickeParams,
    surface: SurfaceKind,
    search: &SearchConfig,
    gamma_c: f64,
    bracket: (f64, f64),
    low_path: &[(f64, (f64, f64))],
    high_path: &[(f64, (f64, f64))],
) -> Result<CriticalResult> {
    let p = params.with_gamma(gamma_c);
    let bounds = (search.effective_q_max(&p), search.theta_max);
    let settle = |path: &[(f64, (f64, f64))], label: &'static str| -> Result<Refined> {
        let seed = nearest_seed(path, gamma_c);
        refine(&p, surface, seed.0, seed.1, bounds, search.tol_grad, 200)
            .filter(|r| r.grad_norm <= search.tol_grad)
            .ok_or(DickeError::TrackingLost {
                label,
                gamma: gamma_c,
                jump: f64::NAN,
            })
    };
    let low = settle(low_path, "low_q")?;
    let high = settle(high_path, "high_q")?;
    let eig_of = |r: &Refined| -> Result<[f64; 2]> {
        Ok(sym2_eigs(&plane_hessian(&p, surface, r.q, r.theta)?))
    };
    let mut low_min = to_minimum(&p, &low, eig_of(&low)?);
    let mut high_min = to_minimum(&p, &high, eig_of(&high)?);
    low_min.basin_label = BasinLabel::LowQ;
    high_min.basin_label = BasinLabel::HighQ;
    let gap = (low_min.total_energy - high_min.total_energy).abs();
    let jump = (
        (high_min.order_params.photon_per_atom - low_min.order_params.photon_per_atom).abs(),
        (high_min.order_params.excited_fraction - low_min.order_params.excited_fraction).abs(),
    );
    Ok(CriticalResult {
        gamma_c,
        minima_at_crossing: (low_min, high_min),
        energy_gap_at_tol: gap,
        bracket,
        order_param_jump: jump,
    })
}

/// One coupling point of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// Coupling strength for this row.
    pub gamma: f64,
    /// Deepest minimum at this coupling (ties resolved toward the low
    /// basin, with `degenerate_depths` set).
    pub global_minimum: LocalMinimum,
    /// Every minimum found, ascending in energy.
    pub all_minima: Vec<LocalMinimum>,
    /// Global minimum energy divided by the atom number.
    pub per_atom_energy: f64,
    /// Surface the row was computed on.
    pub surface: SurfaceKind,
    /// True when the two deepest minima agree in energy to relative
    /// precision 1e-9 (equal-depth crossing sits inside this grid step).
    pub degenerate_depths: bool,
}

/// Scan a coupling grid, finding minima at each point and keeping basin
/// labels consistent along the scan by nearest-point continuation.
///
/// `gamma_grid` must be strictly ascending and positive.  Rows where a
/// basin is born or dies are handled by falling back to the positional
/// rule for unmatched minima.
pub fn sweep(
    params: &DickeParams,
    surface: SurfaceKind,
    gamma_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    params.validate()?;
    if gamma_grid.is_empty() {
        return Err(DickeError::InvalidParams("empty coupling grid".into()));
    }
    for w in gamma_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(DickeError::InvalidParams(
                "coupling grid must be strictly ascending".into(),
            ));
        }
    }
    if !(gamma_grid[0] > 0.0) || !gamma_grid.iter().all(|g| g.is_finite()) {
        return Err(DickeError::InvalidParams(
            "coupling grid must be positive and finite".into(),
        ));
    }
    let search = SearchConfig::default();
    let mut rows: Vec<SweepRow> = Vec::with_capacity(gamma_grid.len());
    let mut prev: Vec<LocalMinimum> = Vec::new();
    for &g in gamma_grid {
        let p = params.with_gamma(g);
        let mut minima = find_local_minima(&p, surface, &search)?;
        // Continuation relabeling: inherit the label of the nearest
        // previous-row minimum when one is close enough in (q, theta).
        if !prev.is_empty() && !minima.is_empty() {
            for m in minima.iter_mut() {
                let nearest = prev
                    .iter()
                    .map(|k| {
                        let d = (k.point.q - m.point.q)
                            .hypot(k.point.theta - m.point.theta);
                        (d, k.basin_label)
                    })
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .unwrap();
                if nearest.0 <= 0.45 {
                    m.basin_label = nearest.1;
                }
            }
            // A pair must not share a label: if continuation collapsed the
            // labels, restore the positional rule within the row.
            if minima.len() >= 2 {
                let labels: Vec<_> = minima.iter().map(|m| m.basin_label).collect();
                if labels.iter().all(|&l| l == labels[0]) {
                    assign_labels(&p, &mut minima);
                }
            }
        }
        let degenerate = minima.len() >= 2
            && (minima[0].total_energy - minima[1].total_energy).abs()
                <= 1e-9 * minima[0].total_energy.abs().max(1.0);
        let global = if degenerate {
            // Deterministic tie-break: prefer the low basin.
            if minima[1].basin_label == BasinLabel::LowQ {
                minima[1].clone()
            } else {
                minima[0].clone()
            }
        } else {
            minima
                .first()
                .cloned()
                .ok_or_else(|| DickeError::NonConvergentRefinement {
                    best_residual: f64::NAN,
                })?
        };
        prev = minima.clone();
        rows.push(SweepRow {
            gamma: g,
            per_atom_energy: global.total_energy / p.n(),
            global_minimum: global,
            all_minima: minima,
            surface,
            degenerate_depths: degenerate,
        });
    }
    Ok(rows)
}

/// A section line through the surface, following the straight line in
/// `(q, theta)` that joins the two deepest minima (or constant `theta`
/// through the single minimum when only one exists).
#[derive(Debug, Clone, Serialize)]
pub struct SectionLine {
    /// Sampled displacement values (raw chart, signed).
    pub q: Vec<f64>,
    /// Tilt at each sample, linear in `q`.
    pub theta: Vec<f64>,
    /// Energy along the line; `None` where evaluation fails.
    pub energy: Vec<Option<f64>>,
}

/// Rectangular energy grid plus refined minima and a section line.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceGrid {
    /// Surface the grid samples.
    pub surface: SurfaceKind,
    /// Grid coordinates along `q` (raw chart, signed).
    pub q_values: Vec<f64>,
    /// Grid coordinates along `theta`.
    pub theta_values: Vec<f64>,
    /// Row-major energies, `energies[iq * theta_values.len() + it]`;
    /// `None` marks cells where the surface is singular.
    pub energies: Vec<Option<f64>>,
    /// Refined minima whose raw-chart position falls inside the window,
    /// canonical coordinates, ascending energy.
    pub minima: Vec<LocalMinimum>,
    /// Straight-line section through the minima (see [`SectionLine`]).
    pub section: SectionLine,
}

/// Sample `surface` on a rectangular `(q, theta)` window.
///
/// The grid lives in the raw search chart (`p = 0`, `phi = 0`, signed `q`),
/// where the in-plane minima sit at negative `q`; the `minima` list is
/// canonicalized like everywhere else, and
/// [`LocalMinimum::raw_plane_coords`] maps entries back onto the grid.
pub fn surface_grid(
    params: &DickeParams,
    surface: SurfaceKind,
    q_range: (f64, f64),
    theta_range: (f64, f64),
    resolution: (usize, usize),
) -> Result<SurfaceGrid> {
    params.validate()?;
    let (q_lo, q_hi) = q_range;
    let (t_lo, t_hi) = theta_range;
    if !(q_lo.is_finite() && q_hi.is_finite() && q_lo < q_hi) {
        return Err(DickeError::InvalidParams(format!(
            "q_range must be finite with lo < hi, got ({q_lo}, {q_hi})"
        )));
    }
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(DickeError::InvalidParams(format!(
            "theta_range must be finite with lo < hi, got ({t_lo}, {t_hi})"
        )));
    }
    let (nq, nt) = resolution;
    if nq < 2 || nt < 2 || nq > 4096 || nt > 4096 {
        return Err(DickeError::InvalidParams(format!(
            "grid resolution must lie in [2, 4096] per axis, got ({nq}, {nt})"
        )));
    }
    let q_values: Vec<f64> = (0..nq)
        .map(|i| q_lo + (q_hi - q_lo) * (i as f64) / ((nq - 1) as f64))
        .collect();
    let theta_values: Vec<f64> = (0..nt)
        .map(|i| t_lo + (t_hi - t_lo) * (i as f64) / ((nt - 1) as f64))
        .collect();
    let mut energies = Vec::with_capacity(nq * nt);
    for &q in &q_values {
        for &t in &theta_values {
            energies.push(plane_energy(params, surface, q, t).ok());
        }
    }

    let all_minima = find_local_minima(params, surface, &SearchConfig::default())?;
    let minima: Vec<LocalMinimum> = all_minima
        .into_iter()
        .filter(|m| {
            let (rq, rt) = m.raw_plane_coords();
            rq >= q_lo - 1e-9 && rq <= q_hi + 1e-9 && rt >= t_lo - 1e-9 && rt <= t_hi + 1e-9
        })
        .collect();

    // Section line: through the two deepest minima when available,
    // otherwise flat in theta through the single minimum (or the window
    // middle when no minimum lies inside).
    let line: Box<dyn Fn(f64) -> f64> = if minima.len() >= 2 {
        let (q0, t0) = minima[0].raw_plane_coords();
        let (q1, t1) = minima[1].raw_plane_coords();
        if (q1 - q0).abs() < 1e-9 {
            Box::new(move |_q| t0)
        } else {
            let slope = (t1 - t0) / (q1 - q0);
            Box::new(move |q| t0 + slope * (q - q0))
        }
    } else if minima.len() == 1 {
        let (_, t0) = minima[0].raw_plane_coords();
        Box::new(move |_q| t0)
    } else {
        let mid = 0.5 * (t_lo + t_hi);
        Box::new(move |_q| mid)
    };
    let sec_theta: Vec<f64> = q_values.iter().map(|&q| line(q)).collect();
    let sec_energy: Vec<Option<f64>> = q_values
        .iter()
        .zip(&sec_theta)
        .map(|(&q, &t)| plane_energy(params, surface, q, t).ok())
        .collect();

    Ok(SurfaceGrid {
        surface,
        q_values: q_values.clone(),
        theta_values,
        energies,
        minima,
        section: SectionLine {
            q: q_values,
            theta: sec_theta,
            energy: sec_energy,
        },
    })
}
