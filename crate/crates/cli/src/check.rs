//! Structural checks of the built-in models: group-affine dynamics,
//! log-linear errors, Jacobian consistency and landmark observability.

use iekf::dynamics::{check_group_affine, linearize, numeric_jacobian, verify_log_linear};
use iekf::filter::ObservationModel;
use iekf::lie::{self, GroupElement};
use iekf::models::car::{car_gps_observation, car_landmark_h, car_landmark_observation, CarDynamics, CarInput};
use iekf::models::nav::{
    landmarks_non_collinear, nav_a, nav_landmark_h, nav_landmark_observation, ImuInput, NavDynamics,
};
use iekf::observability::{numerical_rank, rank_h_hphi, transition_matrix};
use iekf::{Dynamics, ErrorSide, TangentVector};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct CheckRow {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn row(name: &'static str, pass: bool, detail: String) -> CheckRow {
    CheckRow { name, pass, detail }
}

/// Largest `‖log η − ξ‖` over a few unit initial errors, 10 s at 1 ms.
fn log_linear<D: Dynamics>(d: &D, sides: &[ErrorSide], u: impl Fn(f64) -> D::Input + Copy) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for &side in sides {
        for _ in 0..5 {
            let xi = iekf::dynamics::random_tangent(d.group(), 1.0, &mut rng);
            let xi = TangentVector::new(d.group(), xi.vector().normalize()).expect("same group");
            worst = worst.max(verify_log_linear(d, side, &xi, u, 0.0, 10.0, 1e-3).map_err(|e| e.to_string())?);
        }
    }
    Ok(worst)
}

/// Largest gap between `−H` and the numeric Jacobian of the innovation at
/// random states.
fn h_consistency(obs: &ObservationModel, rng: &mut ChaCha8Rng) -> f64 {
    let g = obs.group();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let chi = lie::exp(&iekf::dynamics::random_tangent(g, 2.0, rng));
        let ys = obs.outputs(&chi, &[]);
        let jac = numeric_jacobian(obs.h().nrows(), g.algebra_dim(), 1e-6, |xi| {
            let eta = lie::exp(&TangentVector::new(g, xi.clone()).expect("same group"));
            let est: GroupElement = match obs.side() {
                ErrorSide::Left => &chi * &eta,
                ErrorSide::Right => &eta * &chi,
            };
            obs.innovation(&est, &ys).expect("dimensions match")
        });
        worst = worst.max((jac + obs.h()).amax());
    }
    worst
}

fn jacobians<D: Dynamics>(d: &D, obs: &[ObservationModel]) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let u = d.random_input(&mut rng);
        for side in [ErrorSide::Left, ErrorSide::Right] {
            if let Err(e) = linearize(d, side, &u) {
                return (false, format!("A ({side:?}): {e}"));
            }
        }
    }
    let worst = obs.iter().map(|o| h_consistency(o, &mut rng)).fold(0.0, f64::max);
    (worst <= 1e-5, format!("A matches on both sides, max H gap {worst:.1e}"))
}

pub fn car(landmarks: Option<Vec<Vec<f64>>>) -> Result<Vec<CheckRow>, String> {
    let landmarks: Vec<Vector2<f64>> = match landmarks {
        None => vec![Vector2::new(10.0, 0.0), Vector2::new(0.0, 10.0)],
        Some(l) => l
            .iter()
            .map(|p| match p.as_slice() {
                [x, y] => Ok(Vector2::new(*x, *y)),
                _ => Err(format!("car landmarks have 2 coordinates, got {}", p.len())),
            })
            .collect::<Result<_, _>>()?,
    };
    let mut rows = Vec::new();
    let affine = check_group_affine(&CarDynamics, 100, 1).map_err(|e| e.to_string())?;
    rows.push(row("group-affine", affine.holds, format!("max residual {:.1e}", affine.max_residual)));
    let u = |t: f64| CarInput { v: 1.0 + 0.5 * t.sin(), u: 0.3 * (0.7 * t).cos() };
    rows.push(match log_linear(&CarDynamics, &[ErrorSide::Left, ErrorSide::Right], u) {
        Ok(w) => row("log-linear", w <= 1e-6, format!("max error {w:.1e}")),
        Err(e) => row("log-linear", false, e),
    });
    let obs = [
        car_gps_observation(&Matrix2::identity()),
        car_landmark_observation(&landmarks, &Matrix2::identity()).map_err(|e| e.to_string())?,
    ];
    let (pass, detail) = jacobians(&CarDynamics, &obs);
    rows.push(row("jacobians", pass, detail));
    let rank = numerical_rank(&car_landmark_h(&landmarks));
    rows.push(row("landmark rank", rank == 3, format!("rank H = {rank} with {} landmarks", landmarks.len())));
    Ok(rows)
}

pub fn nav(landmarks: Option<Vec<Vec<f64>>>) -> Result<Vec<CheckRow>, String> {
    let landmarks: Vec<Vector3<f64>> = match landmarks {
        None => vec![Vector3::new(0.0, 0.0, 5.0), Vector3::new(10.0, 0.0, 0.0), Vector3::new(0.0, 10.0, 2.0)],
        Some(l) => l
            .iter()
            .map(|p| match p.as_slice() {
                [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
                _ => Err(format!("nav landmarks have 3 coordinates, got {}", p.len())),
            })
            .collect::<Result<_, _>>()?,
    };
    let d = NavDynamics::default();
    let mut rows = Vec::new();
    let affine = check_group_affine(&d, 100, 2).map_err(|e| e.to_string())?;
    rows.push(row("group-affine", affine.holds, format!("max residual {:.1e}", affine.max_residual)));
    let u =
        |t: f64| ImuInput { omega: Vector3::new(0.1 * t.cos(), -0.2, 0.3), u: Vector3::new(0.5, -0.3 * t.sin(), 9.81) };
    rows.push(match log_linear(&d, &[ErrorSide::Right, ErrorSide::Left], u) {
        Ok(w) => row("log-linear", w <= 1e-6, format!("max error {w:.1e}")),
        Err(e) => row("log-linear", false, e),
    });
    let covs = vec![Matrix3::identity() * 1e-2; landmarks.len()];
    let obs = [nav_landmark_observation(&landmarks, &covs).map_err(|e| e.to_string())?];
    let (pass, detail) = jacobians(&d, &obs);
    rows.push(row("jacobians", pass, detail));
    let phi = transition_matrix(|_| nav_a(&d.gravity), 9, 0.0, 1.0, 1e-2).map_err(|e| e.to_string())?;
    let rank = rank_h_hphi(&nav_landmark_h(&landmarks), &phi);
    let spread = landmarks_non_collinear(&landmarks);
    rows.push(row(
        "landmark rank",
        rank == 9 && spread,
        format!("rank [H; HΦ(1 s)] = {rank}, non-collinear: {spread}"),
    ));
    Ok(rows)
}

/// Parses `x,y[,z];x,y[,z];...`.
pub fn parse_landmarks(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad landmark coordinate {v:?}: {e}")))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmark_lists() {
        assert_eq!(parse_landmarks("1,2;3, 4").unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(parse_landmarks("0,0,1;").unwrap(), vec![vec![0.0, 0.0, 1.0]]);
        assert!(parse_landmarks("1,x").is_err());
    }
}
