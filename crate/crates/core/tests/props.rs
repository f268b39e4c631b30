//! Property-based invariants over the exact form algebra and the flow
//! kinematics.

use proptest::prelude::*;

use opplab_core::flows::{apply_flow, FlowPoint};
use opplab_core::forms::QForm;
use opplab_core::geom;
use opplab_core::heights::{phi_delta, profile};
use opplab_core::mat3::{self, vec_from_int};
use opplab_core::scalar::Scalar;

fn small_int() -> impl Strategy<Value = i64> {
    -12i64..=12
}

fn int_vec() -> impl Strategy<Value = [i64; 3]> {
    [small_int(), small_int(), small_int()]
}

fn int_matrix() -> impl Strategy<Value = [[i64; 3]; 3]> {
    [
        [small_int(), small_int(), small_int()],
        [small_int(), small_int(), small_int()],
        [small_int(), small_int(), small_int()],
    ]
}

fn to_exact(m: &[[i64; 3]; 3]) -> mat3::Mat3E {
    let mut out = mat3::identity();
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = Scalar::from_int(m[i][j]);
        }
    }
    out
}

fn test_forms() -> Vec<QForm> {
    vec![QForm::q0(), QForm::q0_plus_sqrt2_v2v3(), QForm::diagonal(2, 1, -1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn polarization_identity(v in int_vec(), w in int_vec()) {
        // Q(v+w) = Q(v) + 2Q(v,w) + Q(w), exactly.
        for q in test_forms() {
            let ve = vec_from_int(&v);
            let we = vec_from_int(&w);
            let sum = mat3::vec_add(&ve, &we).unwrap();
            let lhs = q.evaluate(&sum).unwrap();
            let two = Scalar::from_int(2);
            let rhs = q.evaluate(&ve).unwrap()
                .add(&q.polarize(&ve, &we).unwrap().mul(&two).unwrap()).unwrap()
                .add(&q.evaluate(&we).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn transform_right_action(g in int_matrix(), h in int_matrix()) {
        let ge = to_exact(&g);
        let he = to_exact(&h);
        for q in test_forms() {
            let lhs = q.transform(&ge).unwrap().transform(&he).unwrap();
            let rhs = q.transform(&mat3::mat_mul(&ge, &he).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dual_is_involutive_and_commutes(g in int_matrix()) {
        let ge = to_exact(&g);
        let det = mat3::det(&ge).unwrap();
        prop_assume!(!det.is_zero());
        for q in test_forms() {
            prop_assert_eq!(q.dual().unwrap().dual().unwrap(), q.clone());
            let gstar = mat3::transpose(&mat3::inverse(&ge).unwrap());
            let lhs = q.transform(&ge).unwrap().dual().unwrap();
            let rhs = q.dual().unwrap().transform(&gstar).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn determinant_scales_under_transform(g in int_matrix()) {
        let ge = to_exact(&g);
        let det_g = mat3::det(&ge).unwrap();
        for q in test_forms() {
            let lhs = q.transform(&ge).unwrap().det().unwrap();
            let rhs = q.det().unwrap().mul(&det_g.mul(&det_g).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn profile_covariance_under_flow(
        wx in -5.0f64..5.0, wy in -5.0f64..5.0, wz in 0.01f64..5.0,
        t in 0.0f64..3.0, r in -1.0f64..1.0,
    ) {
        let w = [wx, wy, wz];
        let before = profile(&w).unwrap();
        let after = profile(&apply_flow(&FlowPoint::new(t, r), &w, false)).unwrap();
        let expect_rho = t.exp() * (before.rho - r);
        let expect_k0 = (2.0 * t).exp() * before.kappa0;
        prop_assert!((after.rho - expect_rho).abs() <= 1e-9 * expect_rho.abs().max(1.0));
        prop_assert!((after.kappa0 - expect_k0).abs() <= 1e-9 * expect_k0.abs().max(1.0));
    }

    #[test]
    fn phi_log_lipschitz_along_flow(
        wx in -5.0f64..5.0, wy in -5.0f64..5.0, wz in -5.0f64..5.0,
        t in 1.0f64..4.0, r in -1.0f64..1.0,
    ) {
        let w = [wx, wy, wz];
        prop_assume!(geom::norm_sup(&w) > 1e-6);
        let delta = 0.01;
        let before = phi_delta(&w, delta, false).unwrap();
        prop_assume!(before.is_finite());
        let after = phi_delta(&apply_flow(&FlowPoint::new(t, r), &w, false), delta, false).unwrap();
        let factor = (3.0 * t.exp()).powf(1.0 + delta);
        prop_assert!(after <= factor * before * (1.0 + 1e-9),
            "phi grew past the log-Lipschitz factor: {} vs {}", after, factor * before);
    }

    #[test]
    fn q0_invariance_along_flow(
        wx in -5.0f64..5.0, wy in -5.0f64..5.0, wz in -5.0f64..5.0,
        t in 0.0f64..4.0, r in -1.0f64..1.0,
    ) {
        let w = [wx, wy, wz];
        let before = geom::q0(&w);
        let after = geom::q0(&apply_flow(&FlowPoint::new(t, r), &w, false));
        prop_assert!((before - after).abs() <= 1e-8 * before.abs().max(1.0));
    }

    #[test]
    fn cross_product_duality_identity(v in int_vec(), w in int_vec()) {
        // Q(v)Q(w) − Q(v,w)² = det(A)·Q*(v×w), exactly.
        for q in test_forms() {
            let det = q.det().unwrap();
            let dual = q.dual().unwrap();
            let ve = vec_from_int(&v);
            let we = vec_from_int(&w);
            let lhs = q.gram_det(&ve, &we).unwrap();
            let cr = mat3::vec_cross(&ve, &we).unwrap();
            let rhs = det.mul(&dual.evaluate(&cr).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }
    }
}
