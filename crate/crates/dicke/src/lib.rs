//! Finite-N quantum phase transition of the Dicke model.
//!
//! N two-level atoms of splitting `omega_a` couple collectively to a single
//! field mode (frequency fixed to 1, the energy unit) with strength `gamma`:
//!
//! ```text
//! H = a†a + ω_A Jz + (γ/√N)(a† + a)(J₊ + J₋),      j = N/2
//! ```
//!
//! In the thermodynamic limit the ground state switches from the normal to
//! the superradiant phase at `γ_c = √ω_A / 2`. At finite N the sharp
//! transition survives as a competition between two local minima of the
//! *parity-projected* coherent-state energy surface: the surface develops a
//! second minimum slightly above `γ_c`, and the critical coupling `γ_c(N)`
//! is the point where the two minima are equally deep. This crate provides
//!
//! - the closed-form mean-field layer ([`model`]),
//! - overflow-safe evaluation of the projected energy surface and its
//!   analytic gradients ([`sacs`]),
//! - multi-start minimization, basin tracking, and the equal-depth critical
//!   coupling search ([`optimize`]),
//! - sparse exact diagonalization in a truncated parity-resolved basis, with
//!   coherent-state embedding as the master cross-check ([`exact`]),
//! - a self-contained validation suite wiring the layers together
//!   ([`validate`]).
//!
//! All energies are **total** energies unless a name says `per_atom`.
//! Everything is deterministic: no RNG, no time-dependent seeds.

pub mod error;
pub mod exact;
pub mod lanczos;
pub mod model;
pub mod optimize;
pub mod sacs;
pub mod validate;

pub use error::DickeError;
pub use exact::{GroundStateRecord, SectorChoice, TruncatedBasis};
pub use model::{DickeParams, FieldMatterPoint, MeanFieldCritical, MeanFieldPhase};
pub use optimize::{BasinLabel, CriticalResult, LocalMinimum, SearchConfig, SurfaceKind, SweepRow};
pub use sacs::ParitySector;
pub use validate::{run_validation, run_validation_with, ValidationConfig, ValidationReport};
