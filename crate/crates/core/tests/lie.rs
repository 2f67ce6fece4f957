mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::*;
use iekf::lie::{self, so3, AlgebraMatrix, GroupElement, GroupId, LieError, TangentVector};
use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;

#[test]
fn hat_block_forms() {
    let m = lie::hat(&tangent(GroupId::Se2, vec![1.0, 2.0, 3.0]));
    assert_eq!(m.matrix(), &DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 2.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0]));
    assert_eq!(lie::hat(&TangentVector::zeros(GroupId::Se2)).matrix(), &DMatrix::zeros(3, 3));

    let m = lie::hat(&tangent(GroupId::Se23, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
    let top: Vector3<f64> = Vector3::new(1.0, 0.0, 0.0);
    assert_eq!(m.matrix().fixed_view::<3, 3>(0, 0).into_owned(), so3::skew(&top));
    assert_eq!(m.matrix().columns(3, 2).amax(), 0.0);
}

#[test]
fn vee_examples() {
    let m = AlgebraMatrix::new(
        GroupId::Se2,
        DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 2.0, 1.0, 0.0, 3.0, 0.0, 0.0, 0.0]),
    )
    .unwrap();
    assert_eq!(lie::vee(&m).unwrap().vector().as_slice(), &[1.0, 2.0, 3.0]);
    let zero = AlgebraMatrix::new(GroupId::Se23, DMatrix::zeros(5, 5)).unwrap();
    assert_eq!(lie::vee(&zero).unwrap(), TangentVector::zeros(GroupId::Se23));
}

#[test]
fn exp_of_zero_is_identity() {
    for g in GROUPS {
        assert_eq!(lie::exp(&TangentVector::zeros(g)), GroupElement::identity(g));
    }
}

#[test]
fn se2_quarter_turn() {
    let g = element(GroupId::Se2, vec![FRAC_PI_2, 1.0, 0.0]);
    let c = 2.0 / PI;
    let expected = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, c, 1.0, 0.0, c, 0.0, 0.0, 1.0]);
    assert!((g.matrix() - &expected).amax() < 1e-12);
    let oracle = series_exp(lie::hat(&tangent(GroupId::Se2, vec![FRAC_PI_2, 1.0, 0.0])).matrix(), 50);
    assert!((g.matrix() - oracle).amax() < 1e-12);

    let back = lie::log(&GroupElement::new(GroupId::Se2, expected).unwrap()).unwrap();
    assert!((back.vector() - tangent(GroupId::Se2, vec![FRAC_PI_2, 1.0, 0.0]).vector()).amax() < 1e-12);
}

#[test]
fn se23_quarter_turn_about_z() {
    let v = tangent(GroupId::Se23, vec![0.0, 0.0, FRAC_PI_2, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let g = lie::exp(&v);
    let oracle = series_exp(lie::hat(&v).matrix(), 50);
    assert!((g.matrix() - &oracle).amax() < 1e-12);
    let rz = so3::exp(&Vector3::new(0.0, 0.0, FRAC_PI_2));
    assert!((g.matrix().fixed_view::<3, 3>(0, 0) - rz).amax() < 1e-15);
    assert_eq!(g.matrix().column(4).rows(0, 3).amax(), 0.0);
}

#[test]
fn closed_form_matches_series_on_many_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for g in GROUPS {
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..g.algebra_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let target = rng.random_range(0.0..5.0);
            v.iter_mut().for_each(|x| *x *= target / n);
            let t = tangent(g, v);
            let err = (lie::exp(&t).matrix() - series_exp(lie::hat(&t).matrix(), 50)).amax();
            assert!(err < 1e-10, "{g}: {err:e}");
        }
    }
}

#[test]
fn tiny_angles_use_the_expansion() {
    for angle in [1e-12, 1e-9, 3e-8, 1e-7, 2e-7, 1e-5] {
        for g in [GroupId::Se2, GroupId::Se23] {
            let mut v = vec![0.3; g.algebra_dim()];
            v[0] = angle;
            let t = tangent(g, v);
            let err = (lie::exp(&t).matrix() - series_exp(lie::hat(&t).matrix(), 30)).amax();
            assert!(err < 1e-14, "{g} at {angle:e}: {err:e}");
            let back = lie::log(&lie::exp(&t)).unwrap();
            assert!((back.vector() - t.vector()).amax() < 1e-12);
        }
    }
}

#[test]
fn log_of_identity_and_branch_cut() {
    for g in GROUPS {
        assert_eq!(lie::log(&GroupElement::identity(g)).unwrap(), TangentVector::zeros(g));
    }
    let half_turn = element(GroupId::Se2, vec![PI, 0.0, 0.0]);
    assert!(matches!(lie::log(&half_turn), Err(LieError::BranchCut { .. })));
    let near = element(GroupId::Se23, vec![PI - 1e-7, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert!(matches!(lie::log(&near), Err(LieError::BranchCut { .. })));
    let inside = element(GroupId::So3, vec![0.0, PI - 1e-4, 0.0]);
    assert!(lie::log(&inside).is_ok());
}

#[test]
fn adjoint_of_identity() {
    for g in GROUPS {
        let n = g.algebra_dim();
        assert_eq!(lie::adjoint(&GroupElement::identity(g)), DMatrix::identity(n, n));
        assert_eq!(lie::adjoint_alg(&TangentVector::zeros(g)), DMatrix::zeros(n, n));
    }
}

#[test]
fn se2_rotation_adjoint_rotates_translations() {
    let theta = 0.7;
    let ad = lie::adjoint(&element(GroupId::Se2, vec![theta, 0.0, 0.0]));
    // Oracle: Ad·eⱼ from the defining relation g·hat(eⱼ)·g⁻¹.
    let g = element(GroupId::Se2, vec![theta, 0.0, 0.0]);
    for j in 0..3 {
        let mut e = vec![0.0; 3];
        e[j] = 1.0;
        let conj = g.matrix() * lie::hat(&tangent(GroupId::Se2, e)).matrix() * g.inverse().matrix();
        let col = lie::vee(&AlgebraMatrix::new(GroupId::Se2, conj).unwrap()).unwrap();
        assert!((ad.column(j) - col.vector()).amax() < 1e-15);
    }
    let (s, c) = theta.sin_cos();
    assert!((ad.view((1, 1), (2, 2)) - DMatrix::from_row_slice(2, 2, &[c, -s, s, c])).amax() < 1e-15);
    assert_eq!(ad.view((1, 0), (2, 1)).amax(), 0.0);
}

#[test]
fn se2_commutator_with_rotation_generator() {
    let x = tangent(GroupId::Se2, vec![1.0, 0.0, 0.0]);
    let ad = lie::adjoint_alg(&x);
    for j in 0..3 {
        let mut e = vec![0.0; 3];
        e[j] = 1.0;
        let a = lie::hat(&x).into_matrix();
        let b = lie::hat(&tangent(GroupId::Se2, e)).into_matrix();
        let comm = &a * &b - &b * &a;
        let col = lie::vee(&AlgebraMatrix::new(GroupId::Se2, comm).unwrap()).unwrap();
        assert!((ad.column(j) - col.vector()).amax() < 1e-12);
    }
}

#[test]
fn projection_contract() {
    let g = element(GroupId::Se23, vec![0.3, -0.2, 0.5, 1.0, 2.0, 3.0, -1.0, 0.5, 0.2]);
    let p = lie::project_to_group(GroupId::Se23, g.matrix()).unwrap();
    assert!((p.matrix() - g.matrix()).amax() < 1e-14);

    let mut m = DMatrix::<f64>::identity(3, 3);
    m[(0, 1)] += 1e-8;
    m[(1, 0)] += 3e-9;
    let p = lie::project_to_group(GroupId::So3, &m).unwrap();
    let r = p.matrix();
    assert!((r.transpose() * r - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    assert!((r.determinant() - 1.0).abs() < 1e-12);

    let far = DMatrix::<f64>::identity(3, 3) * 1.5;
    assert!(matches!(lie::project_to_group(GroupId::So3, &far), Err(LieError::ProjectionFailure { .. })));
}

#[test]
fn rk4_flow_on_se2_stays_on_the_manifold() {
    use iekf::integrate::rk4_step;
    let nu = lie::hat(&tangent(GroupId::Se2, vec![0.8, 1.0, -0.3])).into_matrix();
    let dt = 1e-3;
    let mut x = GroupElement::identity(GroupId::Se2);
    for k in 0..10_000 {
        let next = rk4_step(k as f64 * dt, x.matrix(), dt, |_, m| m * &nu);
        x = lie::project_to_group(GroupId::Se2, &next).unwrap();
        assert!(x.membership_residual() < 1e-9);
    }
    // After 10 s the flow is exp(10ν).
    let exact = series_exp(&(&nu * 10.0), 80);
    assert!((x.matrix() - exact).amax() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hat_vee_roundtrip(gi in 0..4usize, seed in coords(GroupId::Se23, 10.0)) {
        let g = GROUPS[gi];
        let t = tangent(g, seed[..g.algebra_dim()].to_vec());
        prop_assert_eq!(lie::vee(&lie::hat(&t)).unwrap(), t);
    }

    #[test]
    fn exp_log_roundtrip(gi in 0..4usize, v in coords_with_angle(GroupId::Se23, 3.0, 4.0)) {
        let g = GROUPS[gi];
        let v = match g {
            GroupId::Se2 => vec![v[0].signum() * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(), v[3], v[4]],
            _ => v[..g.algebra_dim()].to_vec(),
        };
        let t = tangent(g, v);
        let back = lie::log(&lie::exp(&t)).unwrap();
        prop_assert!((back.vector() - t.vector()).amax() < 1e-9);
        let again = lie::exp(&back);
        prop_assert!((again.matrix() - lie::exp(&t).matrix()).amax() < 1e-9);
    }

    #[test]
    fn adjoint_defining_relation(gi in 0..4usize, a in coords(GroupId::Se23, 2.0), x in coords(GroupId::Se23, 2.0)) {
        let g = GROUPS[gi];
        let d = g.algebra_dim();
        let el = element(g, a[..d].to_vec());
        let xi = tangent(g, x[..d].to_vec());
        let lhs = lie::hat(&TangentVector::new(g, lie::adjoint(&el) * xi.vector()).unwrap()).into_matrix();
        let rhs = el.matrix() * lie::hat(&xi).matrix() * el.inverse().matrix();
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn adjoint_is_a_homomorphism(gi in 0..4usize, a in coords(GroupId::Se23, 2.0), b in coords(GroupId::Se23, 2.0)) {
        let g = GROUPS[gi];
        let d = g.algebra_dim();
        let (x, y) = (element(g, a[..d].to_vec()), element(g, b[..d].to_vec()));
        let lhs = lie::adjoint(&(&x * &y));
        let rhs = lie::adjoint(&x) * lie::adjoint(&y);
        prop_assert!((lhs - rhs).amax() < 1e-10);
    }

    #[test]
    fn ad_is_the_derivative_of_adjoint(gi in 0..4usize, a in coords(GroupId::Se23, 2.0)) {
        let g = GROUPS[gi];
        let x = tangent(g, a[..g.algebra_dim()].to_vec());
        let h = 1e-5;
        let fd = (lie::adjoint(&lie::exp(&x.scale(h))) - lie::adjoint(&lie::exp(&x.scale(-h)))) / (2.0 * h);
        prop_assert!((fd - lie::adjoint_alg(&x)).amax() < 1e-6);
    }

    #[test]
    fn ad_matches_commutator(gi in 0..4usize, a in coords(GroupId::Se23, 2.0), b in coords(GroupId::Se23, 2.0)) {
        let g = GROUPS[gi];
        let d = g.algebra_dim();
        let (x, y) = (tangent(g, a[..d].to_vec()), tangent(g, b[..d].to_vec()));
        let (hx, hy) = (lie::hat(&x).into_matrix(), lie::hat(&y).into_matrix());
        let lhs = lie::hat(&TangentVector::new(g, lie::adjoint_alg(&x) * y.vector()).unwrap()).into_matrix();
        prop_assert!((lhs - (&hx * &hy - &hy * &hx)).amax() < 1e-12);
    }

    #[test]
    fn inverse_is_exact(gi in 0..4usize, a in coords(GroupId::Se23, 3.0)) {
        let g = GROUPS[gi];
        let x = element(g, a[..g.algebra_dim()].to_vec());
        let n = g.matrix_size();
        prop_assert!(((&x * &x.inverse()).matrix() - DMatrix::<f64>::identity(n, n)).amax() < 1e-12);
    }
}
