//! Numerically exact treatment of the full quantum model on a truncated
//! photon ⊗ collective-spin basis: Hamiltonian assembly, ground states with
//! automatic cutoff escalation, observables, fidelity susceptibility, and
//! the embedding of variational states into the same basis for
//! cross-validation.
//!
//! Basis states are labeled `(nu, k)` with `nu` the photon number in
//! `[0, nu_max]` and `k = j + m` in `[0, N]` the number of excited atoms,
//! so half-integer magnetization never appears in the bookkeeping.  The
//! conserved light-matter parity of a state is `(-1)^(nu + k)`, and a
//! basis can be restricted to one parity sector or span both.
//!
//! All energies are total (extensive); divide by the atom number to
//! compare with per-atom quantities.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{DickeError, Result};
use crate::lanczos::{lowest_eigenpairs, SparseSym};
use crate::model::{DickeParams, FieldMatterPoint};
use crate::sacs::{ParitySector, StableExponent};

/// Which parity block(s) a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorChoice {
    /// Parity `+1` block (contains the weak-coupling ground state).
    Even,
    /// Parity `-1` block.
    Odd,
    /// Both blocks; the Hamiltonian is block diagonal on this basis.
    Full,
}

impl From<ParitySector> for SectorChoice {
    fn from(sector: ParitySector) -> Self {
        match sector {
            ParitySector::Even => SectorChoice::Even,
            ParitySector::Odd => SectorChoice::Odd,
        }
    }
}

impl SectorChoice {
    fn admits(self, nu: usize, k: usize) -> bool {
        match self {
            SectorChoice::Even => (nu + k) % 2 == 0,
            SectorChoice::Odd => (nu + k) % 2 == 1,
            SectorChoice::Full => true,
        }
    }

    /// Stable machine-readable tag used in file output.
    pub fn tag(self) -> &'static str {
        match self {
            SectorChoice::Even => "even",
            SectorChoice::Odd => "odd",
            SectorChoice::Full => "full",
        }
    }
}

/// Truncated product basis with an optional parity filter.
///
/// States are ordered photon-major (`nu` ascending, `k` ascending within
/// each `nu`), so enlarging `nu_max` keeps every existing flat index: a
/// vector on the smaller basis is the prefix of its zero-padded image on
/// the larger one, which makes warm starts across cutoff escalation a
/// plain copy.
#[derive(Debug, Clone)]
pub struct TruncatedBasis {
    n_atoms: u32,
    nu_max: usize,
    sector: SectorChoice,
    states: Vec<(usize, usize)>,
    /// `offsets[nu]` = flat index of the first state with that photon
    /// number; length `nu_max + 2` so ranges are uniform.
    offsets: Vec<usize>,
}

impl TruncatedBasis {
    /// Build the basis for `n_atoms` with photon numbers `0..=nu_max`.
    pub fn new(n_atoms: u32, nu_max: usize, sector: SectorChoice) -> Result<Self> {
        if n_atoms == 0 {
            return Err(DickeError::InvalidParams(
                "basis needs at least one atom".into(),
            ));
        }
        if nu_max < 1 {
            return Err(DickeError::Config(
                "photon cutoff must be at least 1".into(),
            ));
        }
        let n = n_atoms as usize;
        let mut states = Vec::with_capacity((nu_max + 1) * (n + 1));
        let mut offsets = Vec::with_capacity(nu_max + 2);
        for nu in 0..=nu_max {
            offsets.push(states.len());
            for k in 0..=n {
                if sector.admits(nu, k) {
                    states.push((nu, k));
                }
            }
        }
        offsets.push(states.len());
        Ok(TruncatedBasis { n_atoms, nu_max, sector, states, offsets })
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn nu_max(&self) -> usize {
        self.nu_max
    }

    pub fn sector(&self) -> SectorChoice {
        self.sector
    }

    /// Number of admitted `(nu, k)` states.
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// The `(nu, k)` labels in flat-index order.
    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    /// Magnetization `m = k - j` of a state label.
    pub fn m_value(&self, k: usize) -> f64 {
        k as f64 - self.n_atoms as f64 / 2.0
    }

    /// Flat index of `(nu, k)`, if admitted.
    pub fn index_of(&self, nu: usize, k: usize) -> Option<usize> {
        if nu > self.nu_max || k > self.n_atoms as usize || !self.sector.admits(nu, k) {
            return None;
        }
        let rank = match self.sector {
            SectorChoice::Full => k,
            // Within one photon layer the admitted k share one parity, so
            // the rank is k/2 rounded down.
            SectorChoice::Even | SectorChoice::Odd => k / 2,
        };
        Some(self.offsets[nu] + rank)
    }
}

/// Assemble the Hamiltonian on `basis` as a sparse symmetric matrix.
///
/// Diagonal entries are `nu + omega_a * m`; the light-matter coupling
/// `(gamma / sqrt(N))` connects `(nu, k)` to `(nu + 1, k +- 1)` with the
/// bosonic factor `sqrt(nu + 1)` and the collective-spin ladder factor
/// `sqrt(j(j+1) - m(m +- 1))`.  Parity blocks stay exactly decoupled.
pub fn build_hamiltonian(params: &DickeParams, basis: &TruncatedBasis) -> Result<SparseSym> {
    params.validate()?;
    if params.n_atoms != basis.n_atoms {
        return Err(DickeError::DimensionMismatch {
            left: params.n_atoms as usize,
            right: basis.n_atoms as usize,
        });
    }
    let j = params.j();
    let jj = j * (j + 1.0);
    let coupling = params.gamma / params.n().sqrt();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * basis.dim());
    for (idx, &(nu, k)) in basis.states().iter().enumerate() {
        let m = basis.m_value(k);
        triplets.push((idx, idx, nu as f64 + params.omega_a * m));
        // Upward in photon number only; the assembler mirrors.
        let boson = ((nu + 1) as f64).sqrt();
        if let Some(up) = basis.index_of(nu + 1, k + 1) {
            let spin = (jj - m * (m + 1.0)).max(0.0).sqrt();
            triplets.push((idx, up, coupling * boson * spin));
        }
        if k > 0 {
            if let Some(down) = basis.index_of(nu + 1, k - 1) {
                let spin = (jj - m * (m - 1.0)).max(0.0).sqrt();
                triplets.push((idx, down, coupling * boson * spin));
            }
        }
    }
    SparseSym::from_triplets(basis.dim(), &triplets)
}

/// Quadratic observables of a state on a truncated basis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExactObservables {
    /// `<a' a> / N`.
    pub photon_per_atom: f64,
    /// `<k> / N`, the mean fraction of excited atoms.
    pub excited_fraction: f64,
    /// Variance of the field quadrature `q = (a + a') / sqrt(2)`.
    pub var_q: f64,
    /// Variance of the transverse collective spin `Jx = (J+ + J-) / 2`.
    pub var_jx: f64,
    /// Light-matter parity expectation; `+-1` on a parity eigenstate.
    pub parity_expectation: f64,
}

/// Observables of a real amplitude vector on `basis`.
///
/// First moments of `q` and `Jx` vanish identically on a parity
/// eigenstate (both operators flip parity), and are likewise omitted here;
/// the variances reduce to plain second moments.
pub fn observables(basis: &TruncatedBasis, amplitudes: &[f64]) -> Result<ExactObservables> {
    if amplitudes.len() != basis.dim() {
        return Err(DickeError::DimensionMismatch {
            left: amplitudes.len(),
            right: basis.dim(),
        });
    }
    let n = basis.n_atoms as f64;
    let j = n / 2.0;
    let jj = j * (j + 1.0);
    let mut photon = 0.0;
    let mut excited = 0.0;
    let mut parity = 0.0;
    let mut q2 = 0.0;
    let mut jx2 = 0.0;
    for (idx, &(nu, k)) in basis.states().iter().enumerate() {
        let w = amplitudes[idx] * amplitudes[idx];
        let m = basis.m_value(k);
        photon += w * nu as f64;
        excited += w * k as f64;
        parity += w * if (nu + k) % 2 == 0 { 1.0 } else { -1.0 };
        // <q^2> = 1/2 + <a' a> + Re<a a>; the cross term couples nu to
        // nu - 2 at the same k.
        q2 += w * (0.5 + nu as f64);
        if nu >= 2 {
            if let Some(lower) = basis.index_of(nu - 2, k) {
                let factor = ((nu * (nu - 1)) as f64).sqrt();
                q2 += amplitudes[idx] * amplitudes[lower] * factor;
            }
        }
        // <Jx^2> = (j(j+1) - <m^2>)/2 + Re<J+ J+> / 2; the ladder-squared
        // term couples k to k - 2 at the same nu.
        jx2 += w * 0.5 * (jj - m * m);
        if k >= 2 {
            if let Some(lower) = basis.index_of(nu, k - 2) {
                let m_low = basis.m_value(k - 2);
                let factor = ((jj - m_low * (m_low + 1.0))
                    * (jj - (m_low + 1.0) * (m_low + 2.0)))
                    .max(0.0)
                    .sqrt();
                jx2 += amplitudes[idx] * amplitudes[lower] * factor * 0.5;
            }
        }
    }
    Ok(ExactObservables {
        photon_per_atom: photon / n,
        excited_fraction: excited / n,
        var_q: q2,
        var_jx: jx2,
        parity_expectation: parity,
    })
}

/// Converged ground state of one truncation ladder.
#[derive(Debug, Clone)]
pub struct GroundStateRecord {
    /// Total ground-state energy.
    pub energy: f64,
    /// Real, unit-norm amplitudes on `basis`.
    pub amplitudes: Vec<f64>,
    /// The basis the amplitudes live on.
    pub basis: TruncatedBasis,
    /// Photon cutoff of the accepted truncation.
    pub nu_max_used: usize,
    /// `|E(nu_max) - E(nu_max / 2)|`, the last escalation step's change.
    pub convergence_gap: f64,
    /// `||H x - E x||` of the accepted eigenpair.
    pub eigen_residual: f64,
    /// Probability weight in the top two photon layers (cutoff pressure).
    pub tail_weight: f64,
    /// Gap to the first excited level in the same basis.
    pub excitation_gap: f64,
    /// Observables of the ground vector.
    pub observables: ExactObservables,
}

/// Tuning knobs for exact diagonalization.
#[derive(Debug, Clone)]
pub struct ExactOptions {
    /// Forced photon cutoff; `None` escalates automatically.
    pub nu_max: Option<usize>,
    /// Hard cap for automatic escalation.
    pub nu_cap: usize,
    /// Relative tolerance on the ground energy between successive
    /// truncations (escalation stopping rule).
    pub tol_conv: f64,
    /// Eigenpair residual tolerance passed to the eigensolver.
    pub tol_eig: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            nu_max: None,
            nu_cap: 4096,
            tol_conv: 1e-8,
            tol_eig: 1e-10,
        }
    }
}

impl ExactOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol_conv > 0.0) || !(self.tol_eig > 0.0) {
            return Err(DickeError::Config(
                "exact-diagonalization tolerances must be positive".into(),
            ));
        }
        if self.nu_cap < 2 {
            return Err(DickeError::Config("cutoff cap must be at least 2".into()));
        }
        if let Some(nu) = self.nu_max {
            if nu < 2 {
                return Err(DickeError::Config(
                    "forced photon cutoff must be at least 2".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Initial cutoff for the escalation ladder, sized from the coherent
/// displacement scale at this coupling.
fn initial_cutoff(params: &DickeParams) -> usize {
    4 * (params.n() * params.gamma * params.gamma).ceil() as usize + 20
}

fn ground_at_cutoff(
    params: &DickeParams,
    sector: SectorChoice,
    nu_max: usize,
    tol_eig: f64,
    warm: Option<&[f64]>,
) -> Result<(TruncatedBasis, Vec<crate::lanczos::EigenPair>)> {
    let basis = TruncatedBasis::new(params.n_atoms, nu_max, sector)?;
    let matrix = build_hamiltonian(params, &basis)?;
    // Zero-padded warm start (state ordering is prefix-stable in nu_max).
    let padded: Option<Vec<f64>> = warm.map(|w| {
        let mut v = vec![0.0; basis.dim()];
        let len = w.len().min(v.len());
        v[..len].copy_from_slice(&w[..len]);
        v
    });
    let pairs = lowest_eigenpairs(&matrix, 2, tol_eig, padded.as_deref())?;
    Ok((basis, pairs))
}

fn tail_weight(basis: &TruncatedBasis, amplitudes: &[f64]) -> f64 {
    let cut = basis.nu_max().saturating_sub(1);
    basis
        .states()
        .iter()
        .zip(amplitudes)
        .filter(|(&(nu, _), _)| nu >= cut)
        .map(|(_, a)| a * a)
        .sum()
}

/// Ground state in `sector` with automatic photon-cutoff escalation.
///
/// Starts from a displacement-scaled cutoff and doubles it until the
/// ground energy changes by less than `options.tol_conv` (relative to
/// `max(1, |E|)`) between steps, warm-starting each solve with the
/// previous vector.  A forced `options.nu_max` skips the stopping rule but
/// still reports the gap to the half-cutoff solve, and fails with an
/// insufficient-cutoff error when the top photon layers carry more than
/// 1e-6 of the probability.
pub fn ground_state(
    params: &DickeParams,
    sector: SectorChoice,
    options: &ExactOptions,
) -> Result<GroundStateRecord> {
    params.validate()?;
    options.validate()?;
    let ladder: Vec<usize> = match options.nu_max {
        Some(forced) => vec![forced / 2, forced],
        None => {
            let mut sizes = vec![initial_cutoff(params).min(options.nu_cap)];
            while *sizes.last().unwrap() < options.nu_cap {
                sizes.push((sizes.last().unwrap() * 2).min(options.nu_cap));
            }
            sizes
        }
    };
    let forced = options.nu_max.is_some();
    let mut prev_energy: Option<f64> = None;
    let mut warm: Option<Vec<f64>> = None;
    let mut last_gap = f64::INFINITY;
    for (step, &nu) in ladder.iter().enumerate() {
        let (basis, pairs) =
            ground_at_cutoff(params, sector, nu, options.tol_eig, warm.as_deref())?;
        let ground = &pairs[0];
        let gap = prev_energy.map(|e| (e - ground.value).abs());
        let accept = if forced {
            step + 1 == ladder.len()
        } else {
            gap.is_some_and(|g| g <= options.tol_conv * ground.value.abs().max(1.0))
        };
        if let Some(g) = gap {
            last_gap = g;
        }
        if accept {
            let tail = tail_weight(&basis, &ground.vector);
            if forced && tail > 1e-6 {
                return Err(DickeError::InsufficientCutoff { leakage: tail });
            }
            let obs = observables(&basis, &ground.vector)?;
            return Ok(GroundStateRecord {
                energy: ground.value,
                excitation_gap: pairs[1].value - ground.value,
                eigen_residual: ground.residual,
                tail_weight: tail,
                convergence_gap: last_gap,
                nu_max_used: nu,
                amplitudes: pairs.into_iter().next().unwrap().vector,
                basis,
                observables: obs,
            });
        }
        prev_energy = Some(ground.value);
        warm = Some(ground.vector.clone());
    }
    Err(DickeError::ConvergenceFailure {
        nu_max: *ladder.last().unwrap(),
        gap: last_gap,
    })
}

/// `|<a|b>|^2` of two amplitude vectors on the same basis.
pub fn overlap(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DickeError::DimensionMismatch { left: a.len(), right: b.len() });
    }
    let inner: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    Ok(inner.norm_sqr())
}

/// Lift a real amplitude vector to complex for [`overlap`] and friends.
pub fn lift_real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `<x|H|x>` for a complex amplitude vector on the basis `matrix` was
/// built on (real symmetric matrix, so the result is real).
pub fn expectation_value(matrix: &SparseSym, amplitudes: &[Complex64]) -> Result<f64> {
    if amplitudes.len() != matrix.dim() {
        return Err(DickeError::DimensionMismatch {
            left: amplitudes.len(),
            right: matrix.dim(),
        });
    }
    let re: Vec<f64> = amplitudes.iter().map(|c| c.re).collect();
    let im: Vec<f64> = amplitudes.iter().map(|c| c.im).collect();
    let mut h_re = vec![0.0; re.len()];
    let mut h_im = vec![0.0; im.len()];
    matrix.matvec(&re, &mut h_re);
    matrix.matvec(&im, &mut h_im);
    let mut acc = 0.0;
    for i in 0..re.len() {
        acc += re[i] * h_re[i] + im[i] * h_im[i];
    }
    Ok(acc)
}

/// Log-domain photon amplitudes `a_nu` of a coherent state with complex
/// displacement `alpha`, as (log magnitude, phase) pairs folded into
/// complex numbers on demand.
struct CoherentAmplitudes {
    log_abs_alpha: f64,
    arg_alpha: f64,
    abs2_half: f64,
    ln_factorial: Vec<f64>,
}

impl CoherentAmplitudes {
    fn new(alpha: Complex64, nu_max: usize) -> Self {
        let mut ln_factorial = Vec::with_capacity(nu_max + 1);
        ln_factorial.push(0.0);
        for nu in 1..=nu_max {
            ln_factorial.push(ln_factorial[nu - 1] + (nu as f64).ln());
        }
        CoherentAmplitudes {
            log_abs_alpha: alpha.norm().ln(),
            arg_alpha: alpha.arg(),
            abs2_half: 0.5 * alpha.norm_sqr(),
            ln_factorial,
        }
    }

    fn amplitude(&self, nu: usize) -> Complex64 {
        if nu == 0 {
            return Complex64::from_polar((-self.abs2_half).exp(), 0.0);
        }
        if self.log_abs_alpha == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let log_mag =
            -self.abs2_half + nu as f64 * self.log_abs_alpha - 0.5 * self.ln_factorial[nu];
        Complex64::from_polar(log_mag.exp(), nu as f64 * self.arg_alpha)
    }
}

/// Log-domain spin amplitudes `b_k` of a spin coherent state with complex
/// stereographic parameter `zeta`.
struct SpinAmplitudes {
    log_abs_zeta: f64,
    arg_zeta: f64,
    log_norm: f64,
    ln_binom: Vec<f64>,
}

impl SpinAmplitudes {
    fn new(zeta: Complex64, n_atoms: u32) -> Self {
        let n = n_atoms as usize;
        let mut ln_binom = Vec::with_capacity(n + 1);
        ln_binom.push(0.0);
        for k in 1..=n {
            ln_binom
                .push(ln_binom[k - 1] + ((n - k + 1) as f64).ln() - (k as f64).ln());
        }
        SpinAmplitudes {
            log_abs_zeta: zeta.norm().ln(),
            arg_zeta: zeta.arg(),
            log_norm: -(n_atoms as f64 / 2.0) * zeta.norm_sqr().ln_1p(),
            ln_binom,
        }
    }

    fn amplitude(&self, k: usize) -> Complex64 {
        if k == 0 {
            return Complex64::from_polar(self.log_norm.exp(), 0.0);
        }
        if self.log_abs_zeta == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        let log_mag =
            self.log_norm + 0.5 * self.ln_binom[k] + k as f64 * self.log_abs_zeta;
        Complex64::from_polar(log_mag.exp(), k as f64 * self.arg_zeta)
    }
}

/// Expand the unprojected product state at `point` on a full basis.
///
/// The amplitude on `(nu, k)` factorizes into a coherent photon amplitude
/// and a binomial spin amplitude.  The result is renormalized; the
/// truncation must capture all but 1e-10 of the norm or an
/// insufficient-cutoff error is returned.
pub fn embed_coherent(
    params: &DickeParams,
    point: &FieldMatterPoint,
    basis: &TruncatedBasis,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    if basis.sector() != SectorChoice::Full {
        return Err(DickeError::Config(
            "product states span both parity sectors; use a full basis".into(),
        ));
    }
    if params.n_atoms != basis.n_atoms() {
        return Err(DickeError::DimensionMismatch {
            left: params.n_atoms as usize,
            right: basis.n_atoms() as usize,
        });
    }
    let (alpha, zeta) = point.alpha_zeta()?;
    let photon = CoherentAmplitudes::new(alpha, basis.nu_max());
    let spin = SpinAmplitudes::new(zeta, basis.n_atoms());
    let mut amps: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|&(nu, k)| photon.amplitude(nu) * spin.amplitude(k))
        .collect();
    let captured: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let leakage = 1.0 - captured;
    if leakage > 1e-10 {
        return Err(DickeError::InsufficientCutoff { leakage });
    }
    let scale = captured.sqrt();
    for a in &mut amps {
        *a /= scale;
    }
    Ok(amps)
}

/// Expand the parity-projected surface state at `point` on `basis`.
///
/// Works on a matching single-sector basis or on a full basis (where the
/// off-sector amplitudes are exactly zero).  The projected state's weight
/// inside the sector is `(1 +- G)/2` with `G` the overlap of the two
/// superposed product states; the captured truncated weight must match it
/// to 1e-10 relative or an insufficient-cutoff error is returned.  The
/// returned vector is renormalized to unit norm.
pub fn embed_sacs(
    params: &DickeParams,
    point: &FieldMatterPoint,
    sector: ParitySector,
    basis: &TruncatedBasis,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    if params.n_atoms != basis.n_atoms() {
        return Err(DickeError::DimensionMismatch {
            left: params.n_atoms as usize,
            right: basis.n_atoms() as usize,
        });
    }
    match (basis.sector(), sector) {
        (SectorChoice::Full, _)
        | (SectorChoice::Even, ParitySector::Even)
        | (SectorChoice::Odd, ParitySector::Odd) => {}
        _ => {
            return Err(DickeError::Config(
                "basis sector does not admit the requested parity".into(),
            ))
        }
    }
    let cos_theta = point.theta.cos();
    let exponent = StableExponent::new(point.q, point.p, cos_theta, params.n_atoms)?;
    // Sector weight of the normalized product state: (1 +- G) / 2.
    let target = 0.5 * exponent.one_plus_signed(sector.sign());
    if target < 1e-12 {
        return Err(DickeError::DegenerateState);
    }
    let (alpha, zeta) = point.alpha_zeta()?;
    let photon = CoherentAmplitudes::new(alpha, basis.nu_max());
    let spin = SpinAmplitudes::new(zeta, basis.n_atoms());
    let want = match sector {
        ParitySector::Even => 0usize,
        ParitySector::Odd => 1usize,
    };
    let mut amps: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|&(nu, k)| {
            if (nu + k) % 2 == want {
                photon.amplitude(nu) * spin.amplitude(k)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let captured: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    let leakage = (target - captured) / target;
    if leakage > 1e-10 {
        return Err(DickeError::InsufficientCutoff { leakage });
    }
    let scale = captured.sqrt();
    for a in &mut amps {
        *a /= scale;
    }
    Ok(amps)
}

/// Discrete fidelity susceptibility
/// `chi = 2 (1 - |<psi(g - d/2)|psi(g + d/2)>|) / d^2`
/// of the sector ground state at the coupling carried by `params`.
///
/// Both ground states are converged on a common basis (the larger of the
/// two escalated cutoffs) so the overlap is well defined.  At couplings
/// closer than `delta / 2` to zero, the stencil shifts to `[g, g + delta]`
/// to stay in the valid coupling range.  A near-degenerate ground state on
/// either side is reported as an error rather than silently producing an
/// ambiguous overlap.
pub fn fidelity_susceptibility(
    params: &DickeParams,
    sector: SectorChoice,
    delta: f64,
    options: &ExactOptions,
) -> Result<f64> {
    params.validate()?;
    options.validate()?;
    if !(delta > 0.0 && delta <= 1e-2) {
        return Err(DickeError::InvalidParams(format!(
            "finite-difference step must lie in (0, 1e-2], got {delta}"
        )));
    }
    let (g_lo, g_hi) = if params.gamma >= delta / 2.0 {
        (params.gamma - delta / 2.0, params.gamma + delta / 2.0)
    } else {
        (params.gamma, params.gamma + delta)
    };
    // Converge the higher coupling first: its cutoff requirement dominates
    // and pins the common basis.
    let hi = ground_state(&params.with_gamma(g_hi), sector, options)?;
    let mut pinned = options.clone();
    pinned.nu_max = Some(hi.nu_max_used);
    let lo = ground_state(&params.with_gamma(g_lo), sector, &pinned)?;
    let scale = hi.energy.abs().max(1.0);
    if hi.excitation_gap < 1e-10 * scale || lo.excitation_gap < 1e-10 * scale {
        return Err(DickeError::DegenerateState);
    }
    debug_assert_eq!(lo.basis.dim(), hi.basis.dim());
    let inner: f64 = lo
        .amplitudes
        .iter()
        .zip(&hi.amplitudes)
        .map(|(a, b)| a * b)
        .sum();
    Ok(2.0 * (1.0 - inner.abs()) / (delta * delta))
}

/// Every eigenvalue of the Hamiltonian on `basis`, ascending (dense solve;
/// intended for small cutoffs and structural tests).
pub fn full_spectrum_dense(params: &DickeParams, basis: &TruncatedBasis) -> Result<Vec<f64>> {
    let matrix = build_hamiltonian(params, basis)?;
    let eig = nalgebra::SymmetricEigen::new(matrix.to_dense());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}
