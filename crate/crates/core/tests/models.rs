mod common;

use common::*;
use iekf::dynamics::{propagate_state, random_tangent};
use iekf::filter::NoiseSchedule;
use iekf::lie::{self, so3, GroupElement, GroupId};
use iekf::models::car::{car_embed, car_extract, CarDynamics, CarEkf, CarInput, CarState};
use iekf::models::nav::{nav_embed, nav_extract, nav_q_hat, ImuInput, NavDynamics, NavMekf, NavState};
use iekf::{Dynamics, ErrorSide};
use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v3(rng: &mut ChaCha8Rng, r: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

#[test]
fn car_embedding_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let s = CarState {
            theta: rng.random_range(-3.1..3.1),
            x: Vector2::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)),
        };
        let back = car_extract(&car_embed(&s));
        assert!((back.theta - s.theta).abs() < 1e-14);
        assert!((back.x - s.x).amax() < 1e-14);
    }
}

#[test]
fn nav_embedding_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let s = NavState { r: so3::exp(&v3(&mut rng, 2.0)), v: v3(&mut rng, 5.0), x: v3(&mut rng, 50.0) };
        let back = nav_extract(&nav_embed(&s));
        assert!((back.r - s.r).amax() < 1e-14);
        assert_eq!(back.v, s.v);
        assert_eq!(back.x, s.x);
    }
}

#[test]
fn car_drives_an_arc() {
    let (v, u, t) = (2.0, 0.25, 3.0);
    let end = propagate_state(&CarDynamics, &GroupElement::identity(GroupId::Se2), |_| CarInput { v, u }, 0.0, t, 1e-3)
        .unwrap();
    let s = car_extract(&end);
    let th = u * v * t;
    assert!((s.theta - th).abs() < 1e-10);
    assert!((s.x - Vector2::new(th.sin() / u, (1.0 - th.cos()) / u)).amax() < 1e-10);
}

#[test]
fn car_drives_straight() {
    let start = car_embed(&CarState { theta: 0.5, x: Vector2::new(1.0, 1.0) });
    let end = propagate_state(&CarDynamics, &start, |_| CarInput { v: 3.0, u: 0.0 }, 0.0, 2.0, 1e-2).unwrap();
    let s = car_extract(&end);
    assert!((s.theta - 0.5).abs() < 1e-14);
    assert!((s.x - Vector2::new(1.0 + 6.0 * 0.5f64.cos(), 1.0 + 6.0 * 0.5f64.sin())).amax() < 1e-12);
}

#[test]
fn nav_free_fall() {
    let d = NavDynamics::default();
    let still = ImuInput { omega: Vector3::zeros(), u: Vector3::zeros() };
    let end = propagate_state(&d, &GroupElement::identity(GroupId::Se23), |_| still, 0.0, 2.0, 1e-2).unwrap();
    let s = nav_extract(&end);
    assert!((s.v - d.gravity * 2.0).amax() < 1e-12);
    assert!((s.x - d.gravity * 2.0).amax() < 1e-12);
    assert!((s.r - nalgebra::Matrix3::identity()).amax() < 1e-15);
}

#[test]
fn nav_hover_stays_put() {
    let d = NavDynamics::default();
    let hover = ImuInput { omega: Vector3::zeros(), u: -d.gravity };
    let start =
        nav_embed(&NavState { r: nalgebra::Matrix3::identity(), v: Vector3::zeros(), x: Vector3::new(1.0, 2.0, 3.0) });
    let end = propagate_state(&d, &start, |_| hover, 0.0, 5.0, 1e-2).unwrap();
    assert!((end.matrix() - start.matrix()).amax() < 1e-12);
}

#[test]
fn nav_body_noise_matches_the_block_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let x_hat = lie::exp(&random_tangent(GroupId::Se23, 3.0, &mut rng));
        let m = DMatrix::from_fn(9, 9, |_, _| rng.random_range(-1.0..1.0));
        let cov = &m * m.transpose();
        let body = NoiseSchedule::Body(cov.clone()).q_hat(ErrorSide::Right, &x_hat);
        assert!((body - nav_q_hat(&x_hat, &cov)).amax() < 1e-10);
        assert_eq!(NoiseSchedule::Body(cov.clone()).q_hat(ErrorSide::Left, &x_hat), cov);
    }
}

/// MEKF error coordinates of `estimate` against `truth`.
fn mekf_perturb(truth: &NavState, eps: &DVector<f64>) -> NavState {
    let zeta = Vector3::new(eps[0], eps[1], eps[2]);
    NavState {
        r: so3::exp(&zeta) * truth.r,
        v: truth.v + Vector3::new(eps[3], eps[4], eps[5]),
        x: truth.x + Vector3::new(eps[6], eps[7], eps[8]),
    }
}

#[test]
fn mekf_f_is_the_error_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = NavDynamics::default();
    for _ in 0..20 {
        let truth = NavState { r: so3::exp(&v3(&mut rng, 2.0)), v: v3(&mut rng, 3.0), x: v3(&mut rng, 10.0) };
        let input = d.random_input(&mut rng);
        let truth_rate = d.eval(&input, nav_embed(&truth).matrix());
        let error_rate = |eps: &DVector<f64>| {
            let est = mekf_perturb(&truth, eps);
            let rate = d.eval(&input, nav_embed(&est).matrix());
            // d/dt(R̂Rᵀ) = Ṙ̂Rᵀ + R̂Ṙᵀ, read off as a rotation vector at ζ.
            let r_dot = rate.fixed_view::<3, 3>(0, 0) * truth.r.transpose()
                + est.r * truth_rate.fixed_view::<3, 3>(0, 0).transpose();
            let zeta = Vector3::new(eps[0], eps[1], eps[2]);
            let w = so3::unskew(&(r_dot * (so3::exp(&zeta)).transpose()));
            let dv = rate.fixed_view::<3, 1>(0, 3) - truth_rate.fixed_view::<3, 1>(0, 3);
            let dx = rate.fixed_view::<3, 1>(0, 4) - truth_rate.fixed_view::<3, 1>(0, 4);
            DVector::from_iterator(9, w.iter().chain(dv.iter()).chain(dx.iter()).copied())
        };
        let jac = jacobian(&DVector::zeros(9), 1e-6, error_rate);
        assert!((jac - NavMekf::f_matrix(&truth.r, &input.u)).amax() < 1e-5);
    }
}

#[test]
fn mekf_h_is_minus_the_prediction_jacobian() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let landmarks = vec![Vector3::new(0.0, 0.0, 5.0), Vector3::new(10.0, 0.0, 0.0)];
    for _ in 0..20 {
        let truth = NavState { r: so3::exp(&v3(&mut rng, 2.0)), v: v3(&mut rng, 3.0), x: v3(&mut rng, 10.0) };
        let predict = |eps: &DVector<f64>| {
            let est = mekf_perturb(&truth, eps);
            DVector::from_iterator(
                6,
                landmarks.iter().flat_map(|p| (est.r.transpose() * (p - est.x)).iter().copied().collect::<Vec<_>>()),
            )
        };
        let jac = jacobian(&DVector::zeros(9), 1e-6, predict);
        assert!((jac + NavMekf::h_matrix(&truth, &landmarks)).amax() < 1e-6);
    }
}

#[test]
fn car_ekf_jacobians() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let s = DVector::from_vec(vec![
            rng.random_range(-3.0..3.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ]);
        let (v, u) = (rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0));
        let f = |s: &DVector<f64>| DVector::from_vec(vec![u * v, v * s[0].cos(), v * s[0].sin()]);
        assert!((jacobian(&s, 1e-6, f) - CarEkf::f_matrix(s[0], v)).amax() < 1e-8);
        let h = |s: &DVector<f64>| DVector::from_vec(vec![s[1], s[2]]);
        assert!((jacobian(&s, 1e-6, h) - CarEkf::h_matrix()).amax() < 1e-9);
    }
}
