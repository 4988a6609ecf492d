//! Model conventions and the closed-form mean-field layer.
//!
//! The Hamiltonian, in units of the field frequency, is
//!
//! ```text
//! H = a†a + ω_A Jz + (γ/√N)(a† + a)(J₊ + J₋),      j = N/2.
//! ```
//!
//! Trial states are products of a field coherent state |α⟩, α = (q+ip)/√2,
//! and an atomic (spin) coherent state |ζ⟩, ζ = tan(θ/2)e^{-iφ}. The
//! expectation value of H per atom in that product is the mean-field surface
//!
//! ```text
//! E(q,p,θ,φ) = (p²+q²)/(2N) − (ω_A/2)cosθ + (√2 γ/√N) q sinθ cosφ,
//! ```
//!
//! whose stationary points are known in closed form: the normal point
//! (origin) below `γ_c = √ω_A/2` and a superradiant pair above it. Total
//! energies at those minima are `E_normal = −2Nγ_c²` and
//! `E_super = −Nγ_c² x²(1+x⁻⁴)` with `x = γ/γ_c`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{DickeError, Result};

/// Physical control parameters in field-frequency units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DickeParams {
    /// Atomic level splitting ω_A (the field frequency is the energy unit).
    pub omega_a: f64,
    /// Dimensionless collective coupling γ.
    pub gamma: f64,
    /// Number of atoms N; the pseudospin is j = N/2.
    pub n_atoms: u32,
}

impl DickeParams {
    /// Validated constructor.
    pub fn new(omega_a: f64, n_atoms: u32, gamma: f64) -> Result<Self> {
        let p = Self {
            omega_a,
            gamma,
            n_atoms,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check the parameter invariants: N ≥ 1, ω_A > 0, γ ≥ 0, all finite.
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(DickeError::InvalidParams("n_atoms must be >= 1".into()));
        }
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return Err(DickeError::InvalidParams(format!(
                "omega_a must be finite and positive, got {}",
                self.omega_a
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(DickeError::InvalidParams(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Pseudospin length j = N/2.
    pub fn j(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    /// Number of atoms as a float.
    pub fn n(&self) -> f64 {
        f64::from(self.n_atoms)
    }

    /// Thermodynamic-limit critical coupling √ω_A/2 (0.5 at resonance).
    ///
    /// This is the unique value for which the normal-phase energy −2Nγ_c²
    /// equals the trivial ground energy −Nω_A/2.
    pub fn gamma_c_tdl(&self) -> f64 {
        0.5 * self.omega_a.sqrt()
    }

    /// Same parameters at a different coupling.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }
}

/// Variational coordinates on the field ⊗ spin phase space.
///
/// `q`, `p` are field quadratures; `theta ∈ [0, π]`, `phi ∈ [0, 2π)` are
/// Bloch-sphere angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldMatterPoint {
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FieldMatterPoint {
    /// Construct with φ reduced modulo 2π.
    pub fn new(q: f64, p: f64, theta: f64, phi: f64) -> Self {
        Self {
            q,
            p,
            theta,
            phi: phi.rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    /// The phase-space origin (field vacuum, all atoms in the lower level).
    pub fn origin() -> Self {
        Self {
            q: 0.0,
            p: 0.0,
            theta: 0.0,
            phi: 0.0,
        }
    }

    /// Coherent-state labels: α = (q+ip)/√2 and ζ = tan(θ/2)e^{-iφ}.
    ///
    /// Fails at the θ = π pole of the stereographic projection.
    pub fn alpha_zeta(&self) -> Result<(Complex64, Complex64)> {
        if (self.theta - std::f64::consts::PI).abs() < 1e-14 {
            return Err(DickeError::StereographicPole);
        }
        let alpha = Complex64::new(self.q, self.p) / f64::sqrt(2.0);
        let zeta = Complex64::from_polar((self.theta / 2.0).tan(), -self.phi);
        Ok((alpha, zeta))
    }
}

/// Phase tag of a mean-field stationary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeanFieldPhase {
    Normal,
    Superradiant,
}

/// A closed-form mean-field stationary point with its energies.
#[derive(Debug, Clone, Serialize)]
pub struct MeanFieldCritical {
    pub point: FieldMatterPoint,
    pub total_energy: f64,
    pub per_atom_energy: f64,
    pub phase: MeanFieldPhase,
}

/// The full set of mean-field minima at the given coupling.
///
/// `degenerate` is set when γ is within a few machine epsilons of √ω_A/2 and
/// the normal and superradiant energies coincide, in which case the list
/// carries all the coinciding points.
#[derive(Debug, Clone, Serialize)]
pub struct MeanFieldCriticalSet {
    pub points: Vec<MeanFieldCritical>,
    pub degenerate: bool,
}

/// Mean-field energy per atom at `point`.
pub fn mean_field_energy(params: &DickeParams, point: &FieldMatterPoint) -> f64 {
    let n = params.n();
    let FieldMatterPoint { q, p, theta, phi } = *point;
    (p * p + q * q) / (2.0 * n) - 0.5 * params.omega_a * theta.cos()
        + f64::sqrt(2.0) * params.gamma / n.sqrt() * q * theta.sin() * phi.cos()
}

/// Total mean-field energy, N × [`mean_field_energy`].
pub fn mean_field_energy_total(params: &DickeParams, point: &FieldMatterPoint) -> f64 {
    params.n() * mean_field_energy(params, point)
}

/// Analytic gradient (∂E/∂q, ∂E/∂p, ∂E/∂θ, ∂E/∂φ) of the per-atom energy.
pub fn mean_field_gradient(params: &DickeParams, point: &FieldMatterPoint) -> [f64; 4] {
    let n = params.n();
    let FieldMatterPoint { q, p, theta, phi } = *point;
    let c = f64::sqrt(2.0) * params.gamma / n.sqrt();
    [
        q / n + c * theta.sin() * phi.cos(),
        p / n,
        0.5 * params.omega_a * theta.sin() + c * q * theta.cos() * phi.cos(),
        -c * q * theta.sin() * phi.sin(),
    ]
}

/// Closed-form minima of the mean-field surface.
///
/// Below γ_c the single normal point; above it the superradiant pair
/// (φ = 0 with q < 0, and the equivalent φ = π partner with q > 0). Energies
/// follow the piecewise closed forms quoted in the module docs.
pub fn mean_field_critical_points(params: &DickeParams) -> Result<MeanFieldCriticalSet> {
    params.validate()?;
    let n = params.n();
    let gc = params.gamma_c_tdl();
    let e_normal_total = -2.0 * n * gc * gc;

    let normal = MeanFieldCritical {
        point: FieldMatterPoint::origin(),
        total_energy: e_normal_total,
        per_atom_energy: e_normal_total / n,
        phase: MeanFieldPhase::Normal,
    };

    let degenerate = (params.gamma - gc).abs() <= 4.0 * f64::EPSILON * gc.max(1.0);
    if params.gamma < gc && !degenerate {
        return Ok(MeanFieldCriticalSet {
            points: vec![normal],
            degenerate: false,
        });
    }

    let x = params.gamma / gc;
    let cos_theta_c = (gc / params.gamma).powi(2);
    let theta_c = cos_theta_c.acos();
    let q_mag = 2.0 * params.j().sqrt() * params.gamma * (1.0 - cos_theta_c.powi(2)).max(0.0).sqrt();
    let e_super_total = -n * gc * gc * x * x * (1.0 + x.powi(-4));

    let superradiant = |q: f64, phi: f64| MeanFieldCritical {
        point: FieldMatterPoint::new(q, 0.0, theta_c, phi),
        total_energy: e_super_total,
        per_atom_energy: e_super_total / n,
        phase: MeanFieldPhase::Superradiant,
    };

    let mut points = Vec::new();
    if degenerate {
        points.push(normal);
    }
    points.push(superradiant(-q_mag, 0.0));
    points.push(superradiant(q_mag, std::f64::consts::PI));
    Ok(MeanFieldCriticalSet { points, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn resonance(n: u32, gamma: f64) -> DickeParams {
        DickeParams::new(1.0, n, gamma).unwrap()
    }

    /// Five-point central difference with Richardson extrapolation.
    fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
    }

    #[test]
    fn critical_coupling_is_half_sqrt_omega() {
        assert_eq!(resonance(20, 0.3).gamma_c_tdl(), 0.5);
        assert_eq!(DickeParams::new(4.0, 20, 0.3).unwrap().gamma_c_tdl(), 1.0);
        assert!(DickeParams::new(1e-12, 20, 0.3).unwrap().gamma_c_tdl() < 1e-5);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(DickeParams::new(1.0, 0, 0.5).is_err());
        assert!(DickeParams::new(0.0, 20, 0.5).is_err());
        assert!(DickeParams::new(-1.0, 20, 0.5).is_err());
        assert!(DickeParams::new(1.0, 20, -0.1).is_err());
        assert!(DickeParams::new(1.0, 20, f64::NAN).is_err());
    }

    #[test]
    fn coherent_labels_match_hand_values() {
        let (a, z) = FieldMatterPoint::origin().alpha_zeta().unwrap();
        assert_eq!((a, z), (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));

        let half_pi = std::f64::consts::FRAC_PI_2;
        let (a, z) = FieldMatterPoint::new(f64::sqrt(2.0), 0.0, half_pi, 0.0)
            .alpha_zeta()
            .unwrap();
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let (a, z) = FieldMatterPoint::new(0.0, f64::sqrt(2.0), half_pi, half_pi)
            .alpha_zeta()
            .unwrap();
        assert!((a - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((z - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        assert!(matches!(
            FieldMatterPoint::new(0.0, 0.0, std::f64::consts::PI, 0.0).alpha_zeta(),
            Err(DickeError::StereographicPole)
        ));
    }

    #[test]
    fn energy_at_origin_is_half_splitting() {
        for n in [1, 7, 20, 501] {
            let e = mean_field_energy(&resonance(n, 0.73), &FieldMatterPoint::origin());
            assert!((e + 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn superradiant_energy_matches_closed_form() {
        // At resonance, γ = 1 means x = 2 and per-atom energy −γ_c²x²(1+x⁻⁴).
        let params = resonance(20, 1.0);
        let set = mean_field_critical_points(&params).unwrap();
        assert_eq!(set.points.len(), 2);
        assert!(!set.degenerate);
        for c in &set.points {
            assert_eq!(c.phase, MeanFieldPhase::Superradiant);
            assert!((c.per_atom_energy + 1.0625).abs() < 1e-14);
            assert!((mean_field_energy(&params, &c.point) - c.per_atom_energy).abs() < 1e-13);
            assert!((c.point.theta.cos() - 0.25).abs() < 1e-14);
            assert!((c.point.q.abs() - 2.0 * 10f64.sqrt() * (15f64 / 16.0).sqrt()).abs() < 1e-12);
        }
        // φ = 0 branch sits at negative q, its partner at positive q.
        assert!(set.points[0].point.q < 0.0 && set.points[0].point.phi == 0.0);
        assert!(set.points[1].point.q > 0.0);
    }

    #[test]
    fn normal_point_below_threshold() {
        let set = mean_field_critical_points(&resonance(20, 0.4)).unwrap();
        assert_eq!(set.points.len(), 1);
        let c = &set.points[0];
        assert_eq!(c.phase, MeanFieldPhase::Normal);
        assert_eq!(c.point, FieldMatterPoint::origin());
        assert!((c.per_atom_energy + 0.5).abs() < 1e-15);
    }

    #[test]
    fn phase_energies_coincide_at_threshold() {
        let params = resonance(20, 0.5);
        let set = mean_field_critical_points(&params).unwrap();
        assert!(set.degenerate);
        let energies: Vec<f64> = set.points.iter().map(|c| c.total_energy).collect();
        for e in &energies {
            assert!((e - energies[0]).abs() < 1e-12);
        }
        assert!((energies[0] + 2.0 * 20.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn superradiant_sits_strictly_below_normal() {
        for gamma in [0.51, 0.6, 0.8, 1.0, 2.0] {
            let set = mean_field_critical_points(&resonance(20, gamma)).unwrap();
            for c in &set.points {
                assert!(c.per_atom_energy < -0.5);
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_critical_points() {
        for gamma in [0.3, 0.5, 0.56, 1.0, 1.7] {
            let params = resonance(20, gamma);
            for c in &mean_field_critical_points(&params).unwrap().points {
                let g = mean_field_gradient(&params, &c.point);
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!(norm < 1e-10, "gamma={gamma}: |grad|={norm:.2e}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let params = DickeParams::new(1.3, 17, 0.9).unwrap();
        for _ in 0..50 {
            let pt = FieldMatterPoint::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.1..2.8),
                rng.gen_range(0.0..6.28),
            );
            let analytic = mean_field_gradient(&params, &pt);
            let h = 1e-5;
            let fd = [
                fd_derivative(
                    |q| mean_field_energy(&params, &FieldMatterPoint { q, ..pt }),
                    pt.q,
                    h,
                ),
                fd_derivative(
                    |p| mean_field_energy(&params, &FieldMatterPoint { p, ..pt }),
                    pt.p,
                    h,
                ),
                fd_derivative(
                    |theta| mean_field_energy(&params, &FieldMatterPoint { theta, ..pt }),
                    pt.theta,
                    h,
                ),
                fd_derivative(
                    |phi| mean_field_energy(&params, &FieldMatterPoint { phi, ..pt }),
                    pt.phi,
                    h,
                ),
            ];
            for (a, f) in analytic.iter().zip(fd) {
                assert!(
                    (a - f).abs() <= 1e-6 * a.abs().max(f.abs()).max(1.0),
                    "analytic {a} vs fd {f}"
                );
            }
        }
    }

    #[test]
    fn energy_symmetries_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = resonance(20, 0.77);
        for _ in 0..100 {
            let pt = FieldMatterPoint::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.0..3.1),
                rng.gen_range(0.0..6.28),
            );
            let e = mean_field_energy(&params, &pt);
            let flipped_p = FieldMatterPoint { p: -pt.p, ..pt };
            assert!((mean_field_energy(&params, &flipped_p) - e).abs() < 1e-14);
            let mirrored =
                FieldMatterPoint::new(-pt.q, pt.p, pt.theta, pt.phi + std::f64::consts::PI);
            assert!((mean_field_energy(&params, &mirrored) - e).abs() < 1e-13);
        }
    }
}
