use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use iekf::filter::{propagate, update, FilterState, NoiseSchedule};
use iekf::lie::{self, GroupElement, GroupId, TangentVector};
use iekf::models::car::{car_gps_observation, CarDynamics, CarInput};
use iekf::models::nav::{nav_landmark_observation, ImuInput, NavDynamics};
use iekf::sim::{run, Scenario};
use iekf::ErrorSide;
use nalgebra::{DMatrix, Matrix2, Matrix3, Vector3};

fn lie_kernels(c: &mut Criterion) {
    let v = TangentVector::from_slice(GroupId::Se23, &[0.3, -0.2, 0.5, 1.0, 2.0, 3.0, -1.0, 0.5, 0.2]).unwrap();
    let g = lie::exp(&v);
    c.bench_function("se23_exp", |b| b.iter(|| lie::exp(black_box(&v))));
    c.bench_function("se23_log", |b| b.iter(|| lie::log(black_box(&g))));
    c.bench_function("se23_adjoint", |b| b.iter(|| lie::adjoint(black_box(&g))));
}

fn filter_steps(c: &mut Criterion) {
    let car_q = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3e-4, 1e-4, 1e-4]));
    let state = FilterState::new(GroupElement::identity(GroupId::Se2), DMatrix::identity(3, 3), 0.0).unwrap();
    let car_noise = NoiseSchedule::Body(car_q);
    let u = CarInput { v: 0.8, u: 0.2 };
    c.bench_function("car_propagate_10ms", |b| {
        b.iter(|| propagate(black_box(&state), &CarDynamics, ErrorSide::Left, &car_noise, |_| u, 0.01, 0.01).unwrap())
    });
    let gps = car_gps_observation(&Matrix2::identity());
    let ys = gps.outputs(&GroupElement::identity(GroupId::Se2), &[]);
    c.bench_function("car_gps_update", |b| b.iter(|| update(black_box(&state), &gps, &ys, false).unwrap()));

    let state = FilterState::new(GroupElement::identity(GroupId::Se23), DMatrix::identity(9, 9), 0.0).unwrap();
    let nav_noise = NoiseSchedule::Body(DMatrix::identity(9, 9) * 1e-4);
    let nav = NavDynamics::default();
    let imu = ImuInput { omega: Vector3::new(0.0, 0.0, 0.2), u: Vector3::new(0.0, 0.0, 9.81) };
    c.bench_function("nav_propagate_10ms", |b| {
        b.iter(|| propagate(black_box(&state), &nav, ErrorSide::Right, &nav_noise, |_| imu, 0.01, 0.01).unwrap())
    });
    let lm = [Vector3::new(0.0, 0.0, 5.0), Vector3::new(10.0, 0.0, 0.0), Vector3::new(0.0, 10.0, 2.0)];
    let obs = nav_landmark_observation(&lm, &[Matrix3::identity() * 1e-2; 3]).unwrap();
    let ys = obs.outputs(&GroupElement::identity(GroupId::Se23), &[]);
    c.bench_function("nav_landmark_update", |b| b.iter(|| update(black_box(&state), &obs, &ys, false).unwrap()));
}

fn scenarios(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario");
    group.sample_size(10);
    let fig1 = Scenario::fig1(45.0);
    group.bench_function("fig1_large", |b| b.iter(|| run(black_box(&fig1)).unwrap()));
    let fig2 = Scenario::fig2(1e-8);
    group.bench_function("fig2_q1", |b| b.iter(|| run(black_box(&fig2)).unwrap()));
    group.finish();
}

criterion_group!(benches, lie_kernels, filter_steps, scenarios);
criterion_main!(benches);
