//! Ground-truth trajectories and the exact inputs that generate them.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::dynamics::{propagate_state, Dynamics};
use crate::error::Result;
use crate::lie::{so3, GroupElement};
use crate::models::car::{car_embed, CarInput, CarState};
use crate::models::nav::{nav_embed, ImuInput, NavState};

use super::scenario::Scenario;

/// States at `t_k = k·dt` for `k = 0..=steps`; `inputs[k]` drives
/// `[t_k, t_{k+1}]`.
#[derive(Debug, Clone)]
pub struct Truth<I> {
    pub t: Vec<f64>,
    pub states: Vec<GroupElement>,
    pub inputs: Vec<I>,
}

fn times(s: &Scenario) -> Vec<f64> {
    (0..=s.steps()).map(|k| k as f64 * s.dt()).collect()
}

/// A car driving counter-clockwise from the origin with heading 0.
pub fn car_circle(s: &Scenario) -> Truth<CarInput> {
    let d = s.trajectory.diameter;
    let omega = 2.0 * PI / s.trajectory.period;
    let v = PI * d / s.trajectory.period;
    // u·v = ω; a zero diameter is a spin in place, which the car cannot do,
    // so it degenerates to standing still.
    let u = if v > 0.0 { omega / v } else { 0.0 };
    let t = times(s);
    let states = t
        .iter()
        .map(|&t| {
            let th = if v > 0.0 { omega * t } else { 0.0 };
            car_embed(&CarState { theta: th, x: Vector2::new(0.5 * d * th.sin(), 0.5 * d * (1.0 - th.cos())) })
        })
        .collect();
    let inputs = vec![CarInput { v, u }; s.steps()];
    Truth { t, states, inputs }
}

/// A vehicle flying counter-clockwise around the vertical axis through the
/// origin, nose along the velocity. Gyro and specific force are constant
/// in the body frame.
pub fn nav_circle(s: &Scenario) -> Truth<ImuInput> {
    let r = 0.5 * s.trajectory.diameter;
    let h = s.trajectory.height;
    let omega = 2.0 * PI / s.trajectory.period;
    let g = Vector3::from(s.nav.gravity);
    let t = times(s);
    let state_at = |t: f64| {
        let phi = omega * t;
        let (sp, cp) = phi.sin_cos();
        NavState {
            r: rz(phi + FRAC_PI_2),
            v: Vector3::new(-sp, cp, 0.0) * (r * omega),
            x: Vector3::new(r * cp, r * sp, h),
        }
    };
    let states = t.iter().map(|&t| nav_embed(&state_at(t))).collect();
    let s0 = state_at(0.0);
    let accel = Vector3::new(-r * omega * omega, 0.0, 0.0);
    let input = ImuInput { omega: Vector3::new(0.0, 0.0, omega), u: s0.r.transpose() * (accel - g) };
    Truth { t, states, inputs: vec![input; s.steps()] }
}

fn rz(a: f64) -> Matrix3<f64> {
    so3::exp(&Vector3::new(0.0, 0.0, a))
}

/// Largest deviation between the stored states and a noise-free
/// re-integration of the stored inputs from the initial state.
pub fn reintegration_error<D: Dynamics>(d: &D, truth: &Truth<D::Input>) -> Result<f64> {
    let mut x = truth.states[0].clone();
    let mut worst: f64 = 0.0;
    for k in 0..truth.inputs.len() {
        let dt = truth.t[k + 1] - truth.t[k];
        let u = truth.inputs[k].clone();
        x = propagate_state(d, &x, |_| u.clone(), truth.t[k], truth.t[k + 1], dt)?;
        worst = worst.max((x.matrix() - truth.states[k + 1].matrix()).amax());
    }
    Ok(worst)
}
