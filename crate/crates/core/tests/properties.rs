use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use qkgeom::cmap::{
    deformed_fs_metric, frame_form_metric, holomorphic_coframe, pairing_identity, scaling_jacobian, scaling_map,
    Deformation, DeformedFsField, QkPoint,
};
use qkgeom::curvature::{curvature_report_with, CurvatureOptions};
use qkgeom::diff::{exterior_derivative, gradient, second};
use qkgeom::prepotential::{CubicForm, PrepotentialModel};
use qkgeom::special_kahler::{base_metric, base_metric_fd, PskPoint};

fn x_cubed() -> PrepotentialModel {
    PrepotentialModel::very_special(CubicForm::single_cube(1.0))
}

fn cubic_point() -> impl Strategy<Value = Vec<f64>> {
    (-1.0..1.0f64, 0.5..2.0f64, 0.5..3.0f64, prop::collection::vec(-1.0..1.0f64, 5)).prop_map(|(y, x, rho, rest)| {
        let mut p = vec![y, x, rho];
        p.extend(rest);
        p
    })
}

fn ball_point() -> impl Strategy<Value = Vec<f64>> {
    (0.0..0.85f64, 0.0..std::f64::consts::TAU, 0.3..3.0f64, prop::collection::vec(-1.0..1.0f64, 5)).prop_map(
        |(r, a, rho, rest)| {
            let mut p = vec![r * a.cos(), r * a.sin(), rho];
            p.extend(rest);
            p
        },
    )
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_forms_are_closed(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64) {
        let f = |p: &[f64]| Ok((p[0] * p[1]).sin() + p[2] * p[2] * p[0]);
        let d2 = exterior_derivative(&|p: &[f64]| gradient(&f, p), &[a, b, c]).unwrap();
        prop_assert!(d2.abs().max() < 1e-6);
    }

    #[test]
    fn mixed_partials_commute(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let f = |p: &[f64]| Ok((p[0] * p[1]).exp() * p[1].cos());
        let xy = second(&f, &[a, b], 0, 1).unwrap();
        let yx = second(&f, &[a, b], 1, 0).unwrap();
        prop_assert!((xy - yx).abs() < 1e-9 * (1.0 + xy.abs()));
    }

    #[test]
    fn cubic_base_metric_matches_potential(y in -1.0..1.0f64, x1 in 0.4..2.0f64, x2 in 0.4..2.0f64) {
        let h = CubicForm::from_entries(2, &[(0, 0, 1, 2.0), (1, 1, 1, 1.0)]).unwrap();
        let m = PrepotentialModel::very_special(h.clone());
        prop_assume!(h.check_cone(&[x1, x2]).is_ok());
        let p = PskPoint::from_chart(&m, &[y, -0.5 * y, x1, x2]).unwrap();
        let a = base_metric(&m, &p).unwrap().matrix;
        let b = base_metric_fd(&m, &p).unwrap().matrix;
        prop_assert!(rel(&a, &b) < 1e-7);
    }

    #[test]
    fn frame_metric_identity_cubic(p in cubic_point(), c in 0.0..2.0f64) {
        let m = x_cubed();
        let q = QkPoint::from_chart(&m, &p).unwrap();
        let a = frame_form_metric(&m, Deformation(c), &q).unwrap();
        let b = deformed_fs_metric(&m, Deformation(c), &q).unwrap();
        prop_assert!(rel(&a, &b) < 1e-9);
    }

    #[test]
    fn pairing_identity_quadratic(p in ball_point()) {
        let m = PrepotentialModel::quadratic(1);
        let q = QkPoint::from_chart(&m, &p).unwrap();
        let (l, r) = pairing_identity(&m, &q).unwrap();
        prop_assert!((l - r).abs().max() < 1e-10);
    }

    #[test]
    fn scaling_pulls_back(p in ball_point(), c in 0.0..2.0f64, lambda in -1.0..1.0f64) {
        let m = PrepotentialModel::quadratic(1);
        let q = QkPoint::from_chart(&m, &p).unwrap();
        let j = scaling_jacobian(lambda, 1);
        let lhs = j.transpose() * deformed_fs_metric(&m, Deformation(c), &scaling_map(lambda, &q)).unwrap() * &j;
        let rhs = deformed_fs_metric(&m, Deformation((-lambda).exp() * c), &q).unwrap();
        prop_assert!(rel(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn holomorphic_differentials_are_closed(p in cubic_point(), c in 0.0..1.0f64) {
        let m = x_cubed();
        let q = QkPoint::from_chart(&m, &p).unwrap();
        let count = holomorphic_coframe(&m, Deformation(c), &q).unwrap().len();
        for k in 0..count {
            for part in [0, 1] {
                let d = exterior_derivative(
                    &|x: &[f64]| {
                        let qq = QkPoint::from_chart(&m, x)?;
                        let v = holomorphic_coframe(&m, Deformation(c), &qq)?.swap_remove(k);
                        Ok(v.map(|z| if part == 0 { z.re } else { z.im }))
                    },
                    &p,
                ).unwrap();
                prop_assert!(d.abs().max() < 1e-6, "coordinate {k}: {}", d.abs().max());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn riemann_symmetries(p in cubic_point(), c in 0.0..1.5f64) {
        let field = DeformedFsField::new(x_cubed(), c);
        let opts = CurvatureOptions { covariant_derivative: false, ..Default::default() };
        let r = curvature_report_with(&field, &p, opts).unwrap();
        prop_assert!(r.symmetry_residual < 1e-6);
        prop_assert!(r.is_einstein(1e-4));
    }
}

#[test]
fn metric_is_symmetric_and_positive() {
    let m = x_cubed();
    let q = QkPoint::from_chart(&m, &[0.2, 0.9, 0.7, -0.3, 0.4, 0.1, -0.6, 0.2]).unwrap();
    let g = deformed_fs_metric(&m, Deformation(0.3), &q).unwrap();
    assert_eq!(g, g.transpose());
    assert!(g.clone().cholesky().is_some());
    let v = DVector::from_element(8, 1.0);
    assert!(v.dot(&(g * &v)) > 0.0);
}
