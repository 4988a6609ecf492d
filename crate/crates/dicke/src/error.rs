//! Error type shared by all layers of the crate.

use thiserror::Error;

/// Everything that can go wrong across the model, surface, optimizer and
/// exact-diagonalization layers.
#[derive(Debug, Error)]
pub enum DickeError {
    /// Model parameters violate their invariants (N ≥ 1, ω_A > 0, γ ≥ 0, …).
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// Evaluation requested on the singular ring |cosθ| ≤ 1e−12 where the
    /// projected surface has (cosθ)^{-N} factors.
    #[error("point too close to the cos θ = 0 ring (|cos θ| = {cos_theta:.3e})")]
    NearSingularDomain { cos_theta: f64 },

    /// The odd-parity projected state vanishes identically at this point.
    #[error("odd-parity state degenerates to the null vector at this point")]
    DegenerateState,

    /// θ = π pole of the stereographic map ζ = tan(θ/2)e^{-iφ}.
    #[error("theta = pi pole of the Bloch-sphere stereographic map")]
    StereographicPole,

    /// Newton/gradient refinement failed from every start.
    #[error("minimum refinement did not converge; best gradient norm {best_residual:.3e}")]
    NonConvergentRefinement { best_residual: f64 },

    /// Photon-cutoff escalation hit the hard cap before the ground energy
    /// settled.
    #[error("ground energy not converged at photon cutoff {nu_max}: last gap {gap:.3e}")]
    ConvergenceFailure { nu_max: usize, gap: f64 },

    /// The coherent-state expansion does not fit in the requested basis.
    #[error("embedding leaks {leakage:.3e} probability outside the truncated basis")]
    InsufficientCutoff { leakage: f64 },

    /// Two amplitude vectors live on different bases.
    #[error("amplitude vectors have mismatched dimensions {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// The energy-crossing search found no sign change in the bracket.
    #[error("no minima-depth crossing inside the bracket [{lo}, {hi}]: {detail}")]
    NoTransition { lo: f64, hi: f64, detail: String },

    /// A tracked basin could not be followed across a γ step.
    #[error("lost track of the {label} basin near gamma = {gamma}: step moved by {jump:.3}")]
    TrackingLost {
        label: &'static str,
        gamma: f64,
        jump: f64,
    },

    /// The iterative eigensolver ran out of Krylov space or iterations.
    #[error(
        "eigensolver stalled after {iterations} iterations \
         (best residual bound {best_residual:.3e})"
    )]
    EigensolverStall {
        iterations: usize,
        best_residual: f64,
    },

    /// Configuration-level misuse (bad ranges, empty grids, …).
    #[error("configuration error: {0}")]
    Config(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, DickeError>;
