//! Randomized invariant checks over broad parameter ranges.
//!
//! Each property encodes a structural fact that must hold everywhere, not
//! just at the hand-picked points of the unit tests: parity covariance of
//! the projected energies, the weighted-mean relation tying them to the
//! unprojected surface, agreement between analytic gradients and finite
//! differences, exact stationarity of the closed-form mean-field minima,
//! block structure of the Hamiltonian, and the variational bound.

use dicke::exact::{self, ExactOptions, SectorChoice, TruncatedBasis};
use dicke::model;
use dicke::sacs::{self, ParitySector};
use dicke::{DickeParams, FieldMatterPoint};
use proptest::prelude::*;

fn params_strategy() -> impl Strategy<Value = DickeParams> {
    (0.25f64..2.0, 4u32..40, 0.05f64..1.0)
        .prop_map(|(omega_a, n, gamma)| DickeParams::new(omega_a, n, gamma).unwrap())
}

/// Points kept away from the equatorial ring `θ = π/2`, where `cos θ`
/// changes sign and the projected norm is legitimately singular.
fn point_strategy() -> impl Strategy<Value = FieldMatterPoint> {
    (
        -4.0f64..4.0,
        -2.0f64..2.0,
        0.01f64..1.45,
        0.0f64..std::f64::consts::TAU,
    )
        .prop_map(|(q, p, theta, phi)| FieldMatterPoint::new(q, p, theta, phi))
}

/// The parity image of a product state: the field amplitude flips sign and
/// the spin precesses half a turn.
fn parity_image(pt: &FieldMatterPoint) -> FieldMatterPoint {
    FieldMatterPoint::new(
        -pt.q,
        -pt.p,
        pt.theta,
        (pt.phi + std::f64::consts::PI) % std::f64::consts::TAU,
    )
}

/// `(4·d(h/2) − d(h))/3` Richardson extrapolation of the central difference.
fn fd_derivative(f: impl Fn(f64) -> Option<f64>, x: f64, h: f64) -> Option<f64> {
    let central = |h: f64| Some((f(x + h)? - f(x - h)?) / (2.0 * h));
    Some((4.0 * central(h / 2.0)? - central(h)?) / 3.0)
}

/// Keep odd-sector probes away from the origin, where the odd projection
/// annihilates the state and the energy is undefined.
fn odd_sector_ok(params: &DickeParams, pt: &FieldMatterPoint) -> bool {
    pt.q * pt.q + pt.p * pt.p + 0.5 * params.n() * pt.theta * pt.theta > 0.5
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// Both projected energies are invariant under the parity image of the
    /// underlying product state.
    #[test]
    fn projected_energies_are_parity_covariant(
        params in params_strategy(),
        pt in point_strategy(),
    ) {
        let image = parity_image(&pt);
        for sector in [ParitySector::Even, ParitySector::Odd] {
            if sector == ParitySector::Odd && !odd_sector_ok(&params, &pt) {
                continue;
            }
            let (Ok(direct), Ok(mirrored)) = (
                sacs::sacs_energy(&params, &pt, sector),
                sacs::sacs_energy(&params, &image, sector),
            ) else {
                continue;
            };
            let tol = 1e-10 * (1.0 + direct.abs());
            prop_assert!(
                (direct - mirrored).abs() <= tol,
                "{:?}: {direct} vs {mirrored} at {pt:?}",
                sector
            );
        }
    }

    /// The unprojected (mean-field) energy is a convex combination of the
    /// two projected energies, so it always lies between them.
    #[test]
    fn projected_energies_straddle_the_unprojected_energy(
        params in params_strategy(),
        pt in point_strategy(),
    ) {
        prop_assume!(odd_sector_ok(&params, &pt));
        let (Ok(even), Ok(odd)) = (
            sacs::sacs_energy(&params, &pt, ParitySector::Even),
            sacs::sacs_energy(&params, &pt, ParitySector::Odd),
        ) else {
            return Ok(());
        };
        let unprojected = model::mean_field_energy_total(&params, &pt);
        let slack = 1e-9 * (1.0 + unprojected.abs());
        prop_assert!(
            even.min(odd) - slack <= unprojected && unprojected <= even.max(odd) + slack,
            "mean-field {unprojected} outside [{}, {}]",
            even.min(odd),
            even.max(odd)
        );
    }

    /// Analytic gradients of all three surfaces agree with Richardson
    /// finite differences along every axis.
    #[test]
    fn analytic_gradients_match_finite_differences(
        params in params_strategy(),
        pt in point_strategy(),
    ) {
        let h = 1e-4;
        let vary = |pt: &FieldMatterPoint, axis: usize, v: f64| {
            let mut c = [pt.q, pt.p, pt.theta, pt.phi];
            c[axis] = v;
            FieldMatterPoint::new(c[0], c[1], c[2], c[3])
        };
        let coords = [pt.q, pt.p, pt.theta, pt.phi];

        // The mean-field gradient differentiates the per-atom energy.
        let mf_grad = model::mean_field_gradient(&params, &pt);
        for axis in 0..4 {
            let fd = fd_derivative(
                |v| Some(model::mean_field_energy(&params, &vary(&pt, axis, v))),
                coords[axis],
                h,
            )
            .unwrap();
            let tol = 1e-6 * (1.0 + params.n());
            prop_assert!(
                (mf_grad[axis] - fd).abs() <= tol,
                "mean-field axis {axis}: analytic {} vs fd {fd}",
                mf_grad[axis]
            );
        }

        for sector in [ParitySector::Even, ParitySector::Odd] {
            if sector == ParitySector::Odd && !odd_sector_ok(&params, &pt) {
                continue;
            }
            let Ok(grad) = sacs::sacs_gradient(&params, &pt, sector) else {
                continue;
            };
            for axis in 0..4 {
                let Some(fd) = fd_derivative(
                    |v| sacs::sacs_energy(&params, &vary(&pt, axis, v), sector).ok(),
                    coords[axis],
                    h,
                ) else {
                    continue; // stencil fell off the surface's domain
                };
                let tol = 1e-6 * (1.0 + params.n());
                prop_assert!(
                    (grad[axis] - fd).abs() <= tol,
                    "{:?} axis {axis}: analytic {} vs fd {fd} at {pt:?}",
                    sector,
                    grad[axis]
                );
            }
        }
    }

    /// The closed-form mean-field minima are genuinely stationary, and the
    /// deepest one never sits above the dark-field value.
    #[test]
    fn mean_field_critical_points_are_stationary(params in params_strategy()) {
        let set = model::mean_field_critical_points(&params).unwrap();
        prop_assume!(!set.degenerate);
        let mut deepest = f64::INFINITY;
        for critical in &set.points {
            let grad = model::mean_field_gradient(&params, &critical.point);
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            prop_assert!(
                norm <= 1e-9 * params.n(),
                "gradient norm {norm} at {:?}",
                critical.point
            );
            deepest = deepest.min(critical.per_atom_energy);
        }
        prop_assert!(deepest <= -0.5 * params.omega_a + 1e-12);
    }

    /// Matrix elements between states of opposite excitation-number parity
    /// vanish identically, for every coupling strength.
    #[test]
    fn cross_parity_blocks_vanish_identically(
        omega_a in 0.3f64..1.8,
        n in 2u32..12,
        gamma in 0.0f64..1.2,
        nu_max in 6usize..20,
    ) {
        let params = DickeParams::new(omega_a, n, gamma).unwrap();
        let basis = TruncatedBasis::new(n, nu_max, SectorChoice::Full).unwrap();
        let dense = exact::build_hamiltonian(&params, &basis).unwrap().to_dense();
        let states = basis.states();
        for (i, &(nu_i, k_i)) in states.iter().enumerate() {
            for (l, &(nu_l, k_l)) in states.iter().enumerate() {
                if (nu_i + k_i) % 2 != (nu_l + k_l) % 2 {
                    prop_assert!(
                        dense[(i, l)] == 0.0,
                        "H[{i},{l}] = {} couples ({nu_i},{k_i}) to ({nu_l},{k_l})",
                        dense[(i, l)]
                    );
                }
            }
        }
    }
}

proptest! {
    // A Lanczos solve per case keeps this one deliberately small.
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    /// The exact ground energy is a lower bound for the projected surface
    /// at every probe point in the matching sector.
    #[test]
    fn exact_ground_energy_bounds_the_projected_surface(
        omega_a in 0.5f64..1.5,
        n in 3u32..7,
        gamma in 0.1f64..0.9,
        pt in point_strategy(),
    ) {
        let params = DickeParams::new(omega_a, 2 * n, gamma).unwrap();
        let Ok(surface) = sacs::sacs_energy(&params, &pt, ParitySector::Even) else {
            return Ok(());
        };
        let record =
            exact::ground_state(&params, SectorChoice::Even, &ExactOptions::default()).unwrap();
        prop_assert!(
            record.energy <= surface + 1e-8 * (1.0 + surface.abs()),
            "exact {} above surface {surface} at {pt:?}",
            record.energy
        );
    }
}
