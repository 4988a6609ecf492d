//! Parity-projected coherent-state energy surface and its gradients.
//!
//! Projecting the product coherent state onto fixed parity superposes the
//! state with its parity image:
//!
//! ```text
//! |α,ζ⟩± = 𝒩± (|α⟩⊗|ζ⟩ ± |−α⟩⊗|−ζ⟩),   𝒩±⁻² = 2(1 ± G),
//! ```
//!
//! where the overlap factor `G = e^{−(q²+p²)} (cosθ)^N` collapses the two
//! cross terms. The projected (total) energy surface then takes the compact
//! two-part form
//!
//! ```text
//! E± = (H_dd ± G·H_core) / (1 ± G),
//! H_dd   = (q²+p²)/2 − jω_A cosθ + √(2N) γ q sinθ cosφ,
//! H_core = −(q²+p²)/2 − jω_A/cosθ + √(2N) γ p tanθ sinφ,
//! ```
//!
//! with `H_dd` the diagonal (mean-field, total) part and `H_core` the
//! cross-term part. Naive evaluation of the textbook form involves
//! `e^{q²+p²}(cosθ)^{−N}`, which overflows already at modest N; here that
//! quantity only ever appears through its *bounded* reciprocal `G ∈ [−1,1]`
//! carried in log domain by [`StableExponent`], so the surface is finite for
//! any N up to 10⁶ whenever `|cosθ| > 1e−12`.
//!
//! In the N → ∞ limit `G → 0` pointwise for `|cosθ| < 1` and `E₊` reduces to
//! N× the mean-field surface.

use serde::Serialize;

use crate::error::{DickeError, Result};
use crate::model::{DickeParams, FieldMatterPoint};

/// Parity sector of the projected state: even carries the `+` signs, odd the
/// `−` signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    /// +1 for even, −1 for odd.
    pub fn sign(self) -> f64 {
        match self {
            ParitySector::Even => 1.0,
            ParitySector::Odd => -1.0,
        }
    }

    /// Lowercase label used in report rows and output columns.
    pub fn tag(self) -> &'static str {
        match self {
            ParitySector::Even => "even",
            ParitySector::Odd => "odd",
        }
    }
}

/// Log-domain carrier for `e^{p²+q²}(cosθ)^{−N} = sign_z_pow · e^{t}`.
///
/// `t = (p²+q²) − N·ln|cosθ| ≥ 0` is finite for any `cosθ ≠ 0`, and the
/// bounded reciprocal `G = sign_z_pow · e^{−t} ∈ [−1, 1]` is the only form
/// the surface evaluation ever exponentiates.
#[derive(Debug, Clone, Copy)]
pub struct StableExponent {
    /// Non-negative log magnitude.
    pub t: f64,
    /// Sign of `(cosθ)^N`: −1 only for cosθ < 0 with odd N.
    pub sign_z_pow: f64,
}

impl StableExponent {
    /// Build from quadratures and the cosine of the polar angle.
    pub fn new(q: f64, p: f64, cos_theta: f64, n_atoms: u32) -> Result<Self> {
        if cos_theta.abs() <= 1e-12 {
            return Err(DickeError::NearSingularDomain {
                cos_theta,
            });
        }
        let t = (q * q + p * p) - f64::from(n_atoms) * cos_theta.abs().ln();
        let sign_z_pow = if cos_theta < 0.0 && n_atoms % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        Ok(Self { t, sign_z_pow })
    }

    /// The bounded parity-overlap factor `G = e^{−(q²+p²)}(cosθ)^N ∈ [−1,1]`.
    pub fn overlap_g(&self) -> f64 {
        self.sign_z_pow * (-self.t).exp()
    }

    /// `1 + σ·G` for σ = ±1, with the near-cancellation branch computed via
    /// `expm1` so that tiny norms keep full relative precision.
    pub fn one_plus_signed(&self, sigma: f64) -> f64 {
        if sigma * self.sign_z_pow > 0.0 {
            1.0 + (-self.t).exp()
        } else {
            -f64::exp_m1(-self.t)
        }
    }
}

/// Threshold below which the odd-sector norm is treated as identically zero.
const ODD_DEGENERACY_EPS: f64 = 1e-12;

/// Inverse squared normalization `𝒩±⁻² = 2(1 ± G)`, strictly positive for
/// valid input.
///
/// The odd projection annihilates the phase-space origin (and any point with
/// `G = 1`), which is reported as [`DickeError::DegenerateState`].
pub fn sacs_norm_sq_inv(
    params: &DickeParams,
    point: &FieldMatterPoint,
    sector: ParitySector,
) -> Result<f64> {
    params.validate()?;
    let se = StableExponent::new(point.q, point.p, point.theta.cos(), params.n_atoms)?;
    let denom = se.one_plus_signed(sector.sign());
    if sector == ParitySector::Odd && denom < ODD_DEGENERACY_EPS {
        return Err(DickeError::DegenerateState);
    }
    Ok(2.0 * denom)
}

/// The two Hamiltonian parts entering the projected surface, plus the
/// overlap carrier. Shared by the energy and gradient evaluations.
struct SurfaceParts {
    h_dd: f64,
    h_core: f64,
    se: StableExponent,
    /// Cached trigonometry: (sinθ, cosθ).
    sin_theta: f64,
    cos_theta: f64,
}

fn surface_parts(params: &DickeParams, point: &FieldMatterPoint) -> Result<SurfaceParts> {
    let FieldMatterPoint { q, p, theta, phi } = *point;
    let (z, s) = (theta.cos(), theta.sin());
    let se = StableExponent::new(q, p, z, params.n_atoms)?;
    let j = params.j();
    let coupling = (2.0 * params.n()).sqrt() * params.gamma;
    let quad = 0.5 * (q * q + p * p);
    let h_dd = quad - j * params.omega_a * z + coupling * q * s * phi.cos();
    let h_core = -quad - j * params.omega_a / z + coupling * p * (s / z) * phi.sin();
    Ok(SurfaceParts {
        h_dd,
        h_core,
        se,
        sin_theta: s,
        cos_theta: z,
    })
}

/// Total projected energy `E± = (H_dd ± G·H_core)/(1 ± G)`.
///
/// Errors on the singular ring `|cosθ| ≤ 1e−12` and on odd-sector points
/// where the projected state vanishes.
pub fn sacs_energy(
    params: &DickeParams,
    point: &FieldMatterPoint,
    sector: ParitySector,
) -> Result<f64> {
    params.validate()?;
    let parts = surface_parts(params, point)?;
    let sigma = sector.sign();
    let denom = parts.se.one_plus_signed(sigma);
    if sector == ParitySector::Odd && denom < ODD_DEGENERACY_EPS {
        return Err(DickeError::DegenerateState);
    }
    let g = parts.se.overlap_g();
    Ok((parts.h_dd + sigma * g * parts.h_core) / denom)
}

/// Analytic 4-gradient `(∂E/∂q, ∂E/∂p, ∂E/∂θ, ∂E/∂φ)` of the total projected
/// energy, valid for both sectors.
///
/// Uses `∂E/∂u = [∂H_dd ± G·∂H_core ± (∂G)(H_core − E)]/(1 ± G)` with
/// `∂G/∂u = −G·∂t/∂u`, so every term stays bounded wherever the energy is.
pub fn sacs_gradient(
    params: &DickeParams,
    point: &FieldMatterPoint,
    sector: ParitySector,
) -> Result<[f64; 4]> {
    params.validate()?;
    let parts = surface_parts(params, point)?;
    let sigma = sector.sign();
    let denom = parts.se.one_plus_signed(sigma);
    if sector == ParitySector::Odd && denom < ODD_DEGENERACY_EPS {
        return Err(DickeError::DegenerateState);
    }
    let g = parts.se.overlap_g();
    let energy = (parts.h_dd + sigma * g * parts.h_core) / denom;

    let FieldMatterPoint { q, p, theta: _, phi } = *point;
    let (z, s) = (parts.cos_theta, parts.sin_theta);
    let j = params.j();
    let n = params.n();
    let coupling = (2.0 * n).sqrt() * params.gamma;
    let tan_theta = s / z;

    let d_h_dd = [
        q + coupling * s * phi.cos(),
        p,
        j * params.omega_a * s + coupling * q * z * phi.cos(),
        -coupling * q * s * phi.sin(),
    ];
    let d_h_core = [
        -q,
        -p + coupling * tan_theta * phi.sin(),
        -j * params.omega_a * s / (z * z) + coupling * p * phi.sin() / (z * z),
        coupling * p * tan_theta * phi.cos(),
    ];
    // ∂G/∂u = −G ∂t/∂u with t = q²+p² − N ln|cosθ|.
    let d_g = [
        -2.0 * q * g,
        -2.0 * p * g,
        -n * tan_theta * g,
        0.0,
    ];

    let mut grad = [0.0; 4];
    for i in 0..4 {
        grad[i] =
            (d_h_dd[i] + sigma * g * d_h_core[i] + sigma * d_g[i] * (parts.h_core - energy))
                / denom;
    }
    Ok(grad)
}

/// Stationarity residual of the even surface restricted to the `(q, z)`
/// plane (`p = 0`, `φ = 0`, `z = cosθ ∈ (0,1)`).
///
/// Returns the two bracketed stationarity polynomials scaled by the positive
/// factor `e^{−2q²}` so that every term is bounded; the zero set is exactly
/// the stationary set of `E₊(q, θ)`. Against the analytic gradient the exact
/// identities are
///
/// ```text
/// resid_q = z  (1+G)² ∂E₊/∂q,
/// resid_θ = z² (1+G)² ∂E₊/∂θ,      G = e^{−q²} z^N.
/// ```
pub fn sacs_stationarity_residual(params: &DickeParams, q: f64, z: f64) -> Result<[f64; 2]> {
    params.validate()?;
    if !(z > 0.0 && z < 1.0 || z == 1.0) || !z.is_finite() {
        return Err(DickeError::Config(format!(
            "stationarity residual needs z = cos(theta) in (0, 1], got {z}"
        )));
    }
    let j = params.j();
    let (w, gamma) = (params.omega_a, params.gamma);
    let sj = j.sqrt();
    let root = (j * (1.0 - z * z)).max(0.0).sqrt(); // √(j(1−z²)) = √j sinθ
    let g = (-q * q + params.n() * z.ln()).exp(); // e^{−q²} z^N, bounded

    let resid_q = -q * z * g * g
        + z * (q + 2.0 * gamma * root)
        + 2.0 * g * (q.powi(3) * z + gamma * z * root + 2.0 * q * q * gamma * z * root
            + j * q * (1.0 - z * z) * w);

    let sqrt_one_minus_z2 = (1.0 - z * z).max(0.0).sqrt();
    let resid_theta = -j * g * g * sqrt_one_minus_z2 * w
        + (2.0 * sj * q * z.powi(3) * gamma + j * z * z * sqrt_one_minus_z2 * w)
        + g * sj
            * (2.0 * q * z.powi(3) * gamma + 4.0 * j * q * z * (1.0 - z * z) * gamma
                + 2.0 * j.powf(1.5) * sqrt_one_minus_z2.powi(3) * w
                + sj * sqrt_one_minus_z2 * (2.0 * q * q * z - (1.0 - z * z) * w));

    Ok([resid_q, resid_theta])
}
