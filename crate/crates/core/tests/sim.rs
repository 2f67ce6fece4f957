use std::f64::consts::PI;

use iekf::lie::{self, so3, GroupId};
use iekf::models::car::CarDynamics;
use iekf::models::nav::NavDynamics;
use iekf::sim::{
    attitude_error_deg, car_circle, nav_circle, reintegration_error, rotation_shift, run, run_shifted, summarize,
    write_csv, CarObservation, FilterKind, RunLog, Scenario, Shift, SummaryOptions,
};
use iekf::{ErrorSide, TangentVector};
use nalgebra::{DMatrix, Vector3};

fn csv_bytes(log: &RunLog) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(log, &mut out).unwrap();
    out
}

fn noisy(mut s: Scenario) -> Scenario {
    s.inject_noise = true;
    s.seed = 17;
    s
}

#[test]
fn same_seed_gives_identical_logs() {
    for s in [noisy(Scenario::fig1(45.0)), noisy(Scenario::fig2(1e-4))] {
        assert_eq!(csv_bytes(&run(&s).unwrap()), csv_bytes(&run(&s).unwrap()));
    }
    let a = noisy(Scenario::fig1(45.0));
    let b = Scenario { seed: 18, ..a.clone() };
    assert_ne!(csv_bytes(&run(&a).unwrap()), csv_bytes(&run(&b).unwrap()));
}

#[test]
fn exact_start_stays_exact() {
    let mut car = Scenario::fig1(0.0);
    car.car.p0_heading_deg = Some(1.0);
    let mut nav = Scenario::fig2(1e-8);
    nav.nav.sigma_attitude_deg = 1e-12;
    nav.nav.sigma_velocity_m_s = 1e-12;
    nav.nav.sigma_position_m = 1e-12;
    for s in [car, nav] {
        let log = run(&s).unwrap();
        for f in &log.filters {
            assert!(f.failure.is_none());
            for row in &f.rows {
                assert!(row.err_att_deg <= 1e-8 && row.err_pos_m <= 1e-8, "{:?}: {row:?}", f.kind);
            }
        }
        for summary in summarize(&log, &SummaryOptions::default()) {
            assert!(!summary.diverged);
        }
    }
}

#[test]
fn row_counts() {
    let log = run(&Scenario::fig1(1.0)).unwrap();
    assert_eq!(log.t.len(), 4001);
    let text = String::from_utf8(csv_bytes(&log)).unwrap();
    assert_eq!(text.lines().count(), 4002);
    assert_eq!(log.filters[0].rows.iter().filter(|r| r.updated).count(), 40);

    let empty = Scenario { duration: 0.0, ..Scenario::fig1(1.0) };
    let log = run(&empty).unwrap();
    assert_eq!(log.t, vec![0.0]);
    assert_eq!(String::from_utf8(csv_bytes(&log)).unwrap().lines().count(), 2);
}

#[test]
fn csv_header_layout() {
    let log = run(&Scenario::fig1(1.0)).unwrap();
    let text = String::from_utf8(csv_bytes(&log)).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[..4], &["t", "true_theta", "true_x", "true_y"]);
    for f in ["iekf", "ekf"] {
        for col in ["err_att_deg", "err_pos_m", "err_log_norm", "trace_P", "updated"] {
            assert!(header.contains(&format!("{f}_{col}").as_str()), "{f}_{col}");
        }
    }
}

#[test]
fn truth_reintegrates() {
    let car = Scenario::fig1(1.0);
    assert!(reintegration_error(&CarDynamics, &car_circle(&car)).unwrap() <= 1e-9);
    let nav = Scenario::fig2(1e-8);
    let d = NavDynamics { gravity: Vector3::from(nav.nav.gravity) };
    assert!(reintegration_error(&d, &nav_circle(&nav)).unwrap() <= 1e-9);
}

#[test]
fn car_circle_inputs() {
    let truth = car_circle(&Scenario::fig1(1.0));
    let u = truth.inputs[0];
    assert!((u.v - PI * 10.0 / 40.0).abs() < 1e-15);
    assert!((u.u * u.v - 2.0 * PI / 40.0).abs() < 1e-15);
    // Half a turn later the car is across the circle, heading backwards.
    let half = &truth.states[2000];
    assert!((half.matrix()[(1, 2)] - 10.0).abs() < 1e-12);
    assert!((half.matrix()[(0, 0)] + 1.0).abs() < 1e-12);
}

#[test]
fn attitude_error_of_a_known_rotation() {
    let truth = nav_circle(&Scenario::fig2(1e-8)).states[100].clone();
    let axis = Vector3::new(1.0, -2.0, 0.5).normalize();
    let zeta = axis * 15f64.to_radians();
    let mut v = vec![0.0; 9];
    v[..3].copy_from_slice(zeta.as_slice());
    let est = &lie::exp(&TangentVector::from_slice(GroupId::Se23, &v).unwrap()) * &truth;
    assert!((attitude_error_deg(&truth, &est) - 15.0).abs() < 1e-9);
    assert_eq!(attitude_error_deg(&truth, &truth), 0.0);
    assert!((so3::angle(&(so3::exp(&zeta))) - 15f64.to_radians()).abs() < 1e-15);
}

fn max_log_gap(a: &RunLog, b: &RunLog, kind: FilterKind) -> f64 {
    let (fa, fb) = (a.filter(kind).unwrap(), b.filter(kind).unwrap());
    fa.rows.iter().zip(&fb.rows).map(|(x, y)| (x.err_log_norm - y.err_log_norm).abs()).fold(0.0, f64::max)
}

#[test]
fn invariant_errors_ignore_a_shift_of_the_truth() {
    let gps = noisy(Scenario::fig1(45.0));
    let left = Shift {
        side: ErrorSide::Left,
        gamma: &rotation_shift(GroupId::Se2, &[1.1]).unwrap()
            * &lie::exp(&TangentVector::from_slice(GroupId::Se2, &[0.0, 5.0, -3.0]).unwrap()),
    };
    let gap = max_log_gap(&run(&gps).unwrap(), &run_shifted(&gps, Some(&left)).unwrap(), FilterKind::Iekf);
    assert!(gap < 1e-10, "{gap:e}");

    let mut lm = noisy(Scenario::fig1(45.0));
    lm.car.observation = CarObservation::Landmarks;
    let right = Shift { side: ErrorSide::Right, gamma: rotation_shift(GroupId::Se2, &[PI]).unwrap() };
    let gap = max_log_gap(&run(&lm).unwrap(), &run_shifted(&lm, Some(&right)).unwrap(), FilterKind::Iekf);
    assert!(gap < 1e-10, "{gap:e}");

    let nav = noisy(Scenario::fig2(1e-4));
    let right = Shift { side: ErrorSide::Right, gamma: rotation_shift(GroupId::Se23, &[0.3, -1.2, 0.8]).unwrap() };
    let gap = max_log_gap(&run(&nav).unwrap(), &run_shifted(&nav, Some(&right)).unwrap(), FilterKind::Iekf);
    assert!(gap < 1e-10, "{gap:e}");
}

#[test]
fn shifts_on_the_wrong_side_are_rejected() {
    let gps = Scenario::fig1(1.0);
    let right = Shift { side: ErrorSide::Right, gamma: rotation_shift(GroupId::Se2, &[PI]).unwrap() };
    assert!(run_shifted(&gps, Some(&right)).is_err());
    let mut lm = Scenario::fig1(1.0);
    lm.car.observation = CarObservation::Landmarks;
    let odd = Shift { side: ErrorSide::Right, gamma: rotation_shift(GroupId::Se2, &[0.5]).unwrap() };
    assert!(run_shifted(&lm, Some(&odd)).is_err());
}

#[test]
fn invalid_scenarios_are_rejected() {
    let bad = [
        Scenario { obs_rate: 3.0, ..Scenario::fig1(1.0) },
        Scenario { duration: -1.0, ..Scenario::fig1(1.0) },
        Scenario { filters: vec![FilterKind::Mekf], ..Scenario::fig1(1.0) },
        Scenario { filters: vec![FilterKind::Iekf, FilterKind::Iekf], ..Scenario::fig1(1.0) },
        Scenario { filters: vec![FilterKind::Ekf], ..Scenario::fig2(1e-8) },
        Scenario::fig1(0.0),
    ];
    for s in bad {
        assert!(run(&s).is_err(), "{s:?}");
    }
}

#[test]
fn covariance_stays_symmetric_and_positive() {
    for s in [Scenario::fig1(45.0), Scenario::fig2(1e-8), noisy(Scenario::fig2(1e-4))] {
        for f in run(&s).unwrap().filters {
            assert!(f.min_p_eigenvalue >= -1e-10, "{:?}", f.kind);
            assert!(f.max_p_asymmetry < 1e-12);
        }
    }
}

#[test]
fn translation_shift_is_refused() {
    assert!(rotation_shift(GroupId::Translation(2), &[0.1]).is_err());
    let g = rotation_shift(GroupId::Se23, &[0.0, 0.0, 0.5]).unwrap();
    assert_eq!(g.matrix().columns(3, 2), DMatrix::identity(5, 5).columns(3, 2));
}
