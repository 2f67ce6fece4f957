//! Stability preconditions of a scenario, evaluated along its ground truth.

use nalgebra::{DMatrix, Vector3};

use crate::dynamics::{Dynamics, ErrorSide};
use crate::error::Result;
use crate::filter::{NoiseSchedule, ObservationModel};
use crate::lie::GroupElement;
use crate::models::car::CarDynamics;
use crate::models::nav::{nav_landmark_observation, NavDynamics};
use crate::observability::{check_deyst_price, LinearizedSystem, Thresholds, WindowReport};

use super::run::{car_observation, car_spec, nav_landmarks, nav_q};
use super::scenario::{ModelKind, Scenario};
use super::truth::{car_circle, nav_circle};

/// Deyst–Price report for the invariant filter of `s`, linearized along the
/// noise-free truth with `window` update epochs per window.
pub fn deyst_price_report(s: &Scenario, window: usize, thresholds: &Thresholds) -> Result<WindowReport> {
    s.validate()?;
    match s.model {
        ModelKind::Car => {
            let spec = car_spec(s);
            let obs = car_observation(s, &spec)?;
            let truth = car_circle(s);
            let a = CarDynamics.analytic_a(&truth.inputs[0], obs.side()).expect("car has a closed-form A");
            report(s, window, thresholds, a, NoiseSchedule::Body(spec.q()), &obs, &truth.states)
        }
        ModelKind::Nav => {
            let (landmarks, covs) = nav_landmarks(s);
            let obs = nav_landmark_observation(&landmarks, &covs)?;
            let truth = nav_circle(s);
            let d = NavDynamics { gravity: Vector3::from(s.nav.gravity) };
            let a = d.analytic_a(&truth.inputs[0], obs.side()).expect("nav has a closed-form A");
            report(s, window, thresholds, a, NoiseSchedule::Body(nav_q(s)), &obs, &truth.states)
        }
    }
}

/// The circle inputs are constant, so `A` is too; `Q̂` and `N̂` follow the
/// true state on the integration grid.
fn report(
    s: &Scenario,
    window: usize,
    thresholds: &Thresholds,
    a: DMatrix<f64>,
    noise: NoiseSchedule,
    obs: &ObservationModel,
    states: &[GroupElement],
) -> Result<WindowReport> {
    let side: ErrorSide = obs.side();
    let dt = s.dt();
    let ratio = s.steps_per_obs();
    let at = |t: f64| &states[((t / dt).round() as usize).min(states.len() - 1)];
    let a_fn = move |_: f64| a.clone();
    let q_fn = |t: f64| noise.q_hat(side, at(t));
    let h_fn = |_: usize| obs.h().clone();
    let n_fn = |n: usize| obs.n_hat(&states[(n * ratio).min(states.len() - 1)]);
    let sys = LinearizedSystem {
        dim: obs.group().algebra_dim(),
        a: &a_fn,
        q: &q_fn,
        h: &h_fn,
        n: &n_fn,
        t0: 0.0,
        epoch_dt: 1.0 / s.obs_rate,
        epochs: s.steps() / ratio,
        dt,
    };
    check_deyst_price(&sys, window, thresholds)
}
