//! The simulation loop: every filter sees the same inputs and outputs.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{invariant_error, ErrorSide};
use crate::error::{Error, Result};
use crate::filter::{lyapunov_value, FilterState, InvariantEkf, NoiseSchedule, ObservationModel};
use crate::lie::{self, so3, GroupElement, GroupId, TangentVector};
use crate::models::car::{
    car_embed, car_extract, car_gps_observation, car_landmark_observation, CarDynamics, CarEkf, CarInput, CarNoiseSpec,
    CarState,
};
use crate::models::nav::{nav_embed, nav_extract, nav_landmark_observation, ImuInput, NavDynamics, NavMekf};

use super::scenario::{CarObservation, FilterKind, ModelKind, Scenario};
use super::truth::{car_circle, nav_circle};

/// Moves the whole experiment by a fixed group element: the truth becomes
/// `Γχ` (left) or `χΓ` (right), and inputs, outputs and initial estimates
/// follow so that the invariant error is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub side: ErrorSide,
    pub gamma: GroupElement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterRow {
    /// `None` once the filter has failed.
    pub estimate: Option<GroupElement>,
    pub err_att_deg: f64,
    pub err_pos_m: f64,
    /// `‖log η‖` with the run's reference error side.
    pub err_log_norm: f64,
    pub trace_p: f64,
    pub updated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterTrace {
    pub kind: FilterKind,
    pub rows: Vec<FilterRow>,
    /// `(t, ξᵀP⁻¹ξ)` after every update, invariant filters only.
    pub lyapunov: Vec<(f64, f64)>,
    /// Time and message of the first numerical failure.
    pub failure: Option<(f64, String)>,
    /// Updates skipped because the innovation covariance was singular.
    pub skipped_updates: usize,
    pub min_p_eigenvalue: f64,
    pub max_p_asymmetry: f64,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub scenario: Scenario,
    pub t: Vec<f64>,
    pub truth: Vec<GroupElement>,
    /// Side used for `err_log_norm`: the invariant filter's side.
    pub error_side: ErrorSide,
    pub filters: Vec<FilterTrace>,
}

impl RunLog {
    pub fn filter(&self, kind: FilterKind) -> Option<&FilterTrace> {
        self.filters.iter().find(|f| f.kind == kind)
    }
}

/// Attitude error in degrees, the rotation angle of `R̂Rᵀ`.
pub fn attitude_error_deg(truth: &GroupElement, est: &GroupElement) -> f64 {
    let d = est.rotation() * truth.rotation().transpose();
    let angle = match d.nrows() {
        2 => d[(1, 0)].atan2(d[(0, 0)]).abs(),
        3 => so3::angle(&Matrix3::from_iterator(d.iter().copied())),
        _ => 0.0,
    };
    angle.to_degrees()
}

pub fn position(g: &GroupElement) -> DVector<f64> {
    let m = g.matrix();
    let k = g.group().rotation_size();
    let col = m.ncols() - 1;
    m.view((0, col), (k.max(1), 1)).column(0).into_owned()
}

pub fn position_error(truth: &GroupElement, est: &GroupElement) -> f64 {
    (position(est) - position(truth)).norm()
}

fn log_error_norm(side: ErrorSide, truth: &GroupElement, est: &GroupElement) -> f64 {
    invariant_error(side, truth, est).and_then(|e| lie::log(&e)).map(|xi| xi.norm()).unwrap_or(f64::NAN)
}

trait Estimator {
    type Input;
    fn propagate(&mut self, u: &Self::Input, dt: f64) -> Result<()>;
    fn update(&mut self, ys: &[DVector<f64>]) -> Result<()>;
    fn estimate(&self) -> GroupElement;
    fn covariance(&self) -> &DMatrix<f64>;
    fn invariant_side(&self) -> Option<ErrorSide>;
}

struct Iekf<D: crate::dynamics::Dynamics> {
    filter: InvariantEkf<D>,
    obs: ObservationModel,
}

impl<D: crate::dynamics::Dynamics> Estimator for Iekf<D> {
    type Input = D::Input;

    fn propagate(&mut self, u: &D::Input, dt: f64) -> Result<()> {
        self.filter.propagate(u, dt)
    }

    fn update(&mut self, ys: &[DVector<f64>]) -> Result<()> {
        self.filter.update(&self.obs, ys).map(|_| ())
    }

    fn estimate(&self) -> GroupElement {
        self.filter.state.x_hat.clone()
    }

    fn covariance(&self) -> &DMatrix<f64> {
        &self.filter.state.p
    }

    fn invariant_side(&self) -> Option<ErrorSide> {
        Some(self.filter.side)
    }
}

impl Estimator for CarEkf {
    type Input = CarInput;

    fn propagate(&mut self, u: &CarInput, dt: f64) -> Result<()> {
        CarEkf::propagate(self, u, dt, dt)
    }

    fn update(&mut self, ys: &[DVector<f64>]) -> Result<()> {
        CarEkf::update(self, &Vector2::new(ys[0][0], ys[0][1])).map(|_| ())
    }

    fn estimate(&self) -> GroupElement {
        car_embed(&CarEkf::estimate(self))
    }

    fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    fn invariant_side(&self) -> Option<ErrorSide> {
        None
    }
}

impl Estimator for NavMekf {
    type Input = ImuInput;

    fn propagate(&mut self, u: &ImuInput, dt: f64) -> Result<()> {
        NavMekf::propagate(self, u, dt, dt)
    }

    fn update(&mut self, ys: &[DVector<f64>]) -> Result<()> {
        let body: Vec<Vector3<f64>> = ys.iter().map(|y| Vector3::new(y[0], y[1], y[2])).collect();
        NavMekf::update(self, &body).map(|_| ())
    }

    fn estimate(&self) -> GroupElement {
        nav_embed(&self.state)
    }

    fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    fn invariant_side(&self) -> Option<ErrorSide> {
        None
    }
}

/// Everything a filter gets to see, after shifting.
struct Experiment<I> {
    t: Vec<f64>,
    truth: Vec<GroupElement>,
    /// Measured inputs, one per step.
    inputs: Vec<I>,
    /// Outputs available at the end of step `k`, if any.
    outputs: Vec<Option<Vec<DVector<f64>>>>,
    error_side: ErrorSide,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, std: &[f64]) -> DVector<f64> {
    DVector::from_fn(n, |i, _| std[i] * rng.sample::<f64, _>(StandardNormal))
}

fn apply_shift(shift: Option<&Shift>, g: &GroupElement) -> Result<GroupElement> {
    Ok(match shift {
        None => g.clone(),
        Some(s) => match s.side {
            ErrorSide::Left => s.gamma.compose(g)?,
            ErrorSide::Right => g.compose(&s.gamma)?,
        },
    })
}

fn shift_outputs(shift: Option<&Shift>, ys: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    match shift {
        None => ys,
        Some(s) => {
            let t = match s.side {
                ErrorSide::Left => s.gamma.matrix().clone(),
                ErrorSide::Right => s.gamma.inverse().into_matrix(),
            };
            ys.into_iter().map(|y| &t * y).collect()
        }
    }
}

fn check_shift(shift: Option<&Shift>, group: GroupId, obs_side: ErrorSide) -> Result<()> {
    let Some(s) = shift else { return Ok(()) };
    lie::same_group(group, s.gamma.group())?;
    if s.side != obs_side {
        return Err(Error::InvalidArgument("a shift must act on the same side as the observations".into()));
    }
    if s.side == ErrorSide::Right {
        let m = s.gamma.matrix();
        let k = group.rotation_size();
        let translation = m.view((0, k), (k, m.ncols() - k)).amax();
        if translation > 0.0 {
            return Err(Error::InvalidArgument("a right shift must be a pure rotation".into()));
        }
    }
    Ok(())
}

fn drive<I>(
    s: &Scenario,
    exp: &Experiment<I>,
    kind: FilterKind,
    mut f: Box<dyn Estimator<Input = I> + '_>,
) -> FilterTrace {
    let dt = s.dt();
    let mut trace = FilterTrace {
        kind,
        rows: Vec::with_capacity(exp.t.len()),
        lyapunov: Vec::new(),
        failure: None,
        skipped_updates: 0,
        min_p_eigenvalue: f64::INFINITY,
        max_p_asymmetry: 0.0,
    };
    let record = |trace: &mut FilterTrace, k: usize, f: Option<&dyn Estimator<Input = I>>, updated: bool| {
        let row = match f {
            Some(f) => {
                let est = f.estimate();
                let p = f.covariance();
                let truth = &exp.truth[k];
                let eig = crate::filter::symmetrize(p).symmetric_eigen().eigenvalues.min();
                trace.min_p_eigenvalue = trace.min_p_eigenvalue.min(eig);
                trace.max_p_asymmetry = trace.max_p_asymmetry.max((p - p.transpose()).amax());
                FilterRow {
                    err_att_deg: attitude_error_deg(truth, &est),
                    err_pos_m: position_error(truth, &est),
                    err_log_norm: log_error_norm(exp.error_side, truth, &est),
                    trace_p: p.trace(),
                    updated,
                    estimate: Some(est),
                }
            }
            None => FilterRow {
                estimate: None,
                err_att_deg: f64::NAN,
                err_pos_m: f64::NAN,
                err_log_norm: f64::NAN,
                trace_p: f64::NAN,
                updated: false,
            },
        };
        trace.rows.push(row);
    };

    record(&mut trace, 0, Some(f.as_ref()), false);
    let mut alive = true;
    for k in 0..exp.inputs.len() {
        let t_next = exp.t[k + 1];
        let mut updated = false;
        if alive {
            let step = f.propagate(&exp.inputs[k], dt).and_then(|_| {
                let Some(ys) = &exp.outputs[k] else { return Ok(()) };
                match f.update(ys) {
                    Ok(()) => {
                        updated = true;
                        Ok(())
                    }
                    Err(Error::SingularInnovation { .. }) => {
                        trace.skipped_updates += 1;
                        Ok(())
                    }
                    Err(e) => Err(e),
                }
            });
            if let Err(e) = step {
                trace.failure = Some((t_next, e.to_string()));
                alive = false;
            }
        }
        if alive && updated {
            if let Some(side) = f.invariant_side() {
                let v = invariant_error(side, &exp.truth[k + 1], &f.estimate())
                    .map_err(Error::from)
                    .and_then(|e| Ok(lie::log(&e)?))
                    .and_then(|xi| lyapunov_value(f.covariance(), &xi));
                trace.lyapunov.push((t_next, v.unwrap_or(f64::NAN)));
            }
        }
        record(&mut trace, k + 1, alive.then_some(f.as_ref()), updated);
    }
    trace
}

/// Runs the scenario.
pub fn run(s: &Scenario) -> Result<RunLog> {
    run_shifted(s, None)
}

/// Runs the scenario with the whole experiment moved by `shift`.
pub fn run_shifted(s: &Scenario, shift: Option<&Shift>) -> Result<RunLog> {
    s.validate()?;
    match s.model {
        ModelKind::Car => run_car(s, shift),
        ModelKind::Nav => run_nav(s, shift),
    }
}

pub(super) fn car_spec(s: &Scenario) -> CarNoiseSpec {
    let c = &s.car;
    CarNoiseSpec {
        q_theta: c.q[0],
        q_l: c.q[1],
        q_tr: c.q[2],
        gps_cov: Matrix2::from_diagonal(&Vector2::from(c.gps_cov)),
        landmark_cov: Matrix2::from_diagonal(&Vector2::from(c.landmark_cov)),
    }
}

pub(super) fn car_observation(s: &Scenario, spec: &CarNoiseSpec) -> Result<ObservationModel> {
    Ok(match s.car.observation {
        CarObservation::Gps => car_gps_observation(&spec.gps_cov),
        CarObservation::Landmarks => {
            let lm: Vec<Vector2<f64>> = s.car.landmarks.iter().map(|p| Vector2::from(*p)).collect();
            car_landmark_observation(&lm, &spec.landmark_cov)?
        }
    })
}

fn run_car(s: &Scenario, shift: Option<&Shift>) -> Result<RunLog> {
    let c = &s.car;
    let spec = car_spec(s);
    let obs = car_observation(s, &spec)?;
    check_shift(shift, GroupId::Se2, obs.side())?;
    let truth = car_circle(s);
    let dt = s.dt();

    let mut input_rng = rng(s.seed, 1);
    let mut meas_rng = rng(s.seed, 2);
    let input_std = [(c.q[0] / dt).sqrt(), (c.q[1] / dt).sqrt()];
    let meas_std: Vec<f64> = match c.observation {
        CarObservation::Gps => c.gps_cov.iter().map(|v| v.sqrt()).collect(),
        CarObservation::Landmarks => c.landmark_cov.iter().map(|v| v.sqrt()).collect(),
    };

    let mut inputs = Vec::with_capacity(truth.inputs.len());
    for u in &truth.inputs {
        // The odometer and the yaw rate are noisy; the transversal velocity
        // is assumed zero by the model, so its noise never reaches a sensor.
        let (w_theta, w_l) = if s.inject_noise {
            let n = gaussian(&mut input_rng, 2, &input_std);
            (n[0], n[1])
        } else {
            (0.0, 0.0)
        };
        let v = u.v + w_l;
        let yaw_rate = u.u * u.v + w_theta;
        let mut twist = Vector3::new(yaw_rate, v, 0.0);
        if let Some(sh) = shift {
            if sh.side == ErrorSide::Right {
                let ad = lie::adjoint(&sh.gamma.inverse());
                twist = Vector3::from_iterator((ad * DVector::from_column_slice(twist.as_slice())).iter().copied());
                if twist.z.abs() > 1e-12 * (1.0 + twist.y.abs()) {
                    return Err(Error::InvalidArgument("this shift gives the car a transversal velocity".into()));
                }
            }
        }
        let u = if twist.y != 0.0 { twist.x / twist.y } else { 0.0 };
        inputs.push(CarInput { v: twist.y, u });
    }

    let ratio = s.steps_per_obs();
    let mut outputs = vec![None; truth.inputs.len()];
    for (k, slot) in outputs.iter_mut().enumerate() {
        if (k + 1) % ratio != 0 {
            continue;
        }
        let noise: Vec<DVector<f64>> = if s.inject_noise {
            (0..obs.output_count()).map(|_| gaussian(&mut meas_rng, 2, &meas_std)).collect()
        } else {
            vec![]
        };
        *slot = Some(shift_outputs(shift, obs.outputs(&truth.states[k + 1], &noise)));
    }

    let truth_states = truth.states.iter().map(|g| apply_shift(shift, g)).collect::<Result<Vec<_>>>()?;
    let start = car_extract(&truth.states[0]);
    let heading_err = c.init_heading_deg.to_radians();
    let initial = CarState { theta: start.theta + heading_err, x: start.x };
    let initial_g = apply_shift(shift, &car_embed(&initial))?;
    let sigma = c.p0_heading_deg.unwrap_or(c.init_heading_deg).to_radians();
    let p0 = DMatrix::from_diagonal(&DVector::from_vec(vec![sigma * sigma, c.p0_position, c.p0_position]));

    let exp = Experiment { t: truth.t, truth: truth_states, inputs, outputs, error_side: obs.side() };
    let mut traces = Vec::new();
    for kind in s.filters() {
        let f: Box<dyn Estimator<Input = CarInput>> = match kind {
            FilterKind::Iekf => {
                let state = FilterState::new(initial_g.clone(), p0.clone(), 0.0)?;
                let mut filter = InvariantEkf::new(CarDynamics, obs.side(), NoiseSchedule::Body(spec.q()), state);
                filter.joseph = s.joseph;
                Box::new(Iekf { filter, obs: obs.clone() })
            }
            FilterKind::Ekf => Box::new(CarEkf::new(&car_extract(&initial_g), p0.clone(), &spec)),
            FilterKind::Mekf => unreachable!("rejected by validation"),
        };
        traces.push(drive(s, &exp, kind, f));
    }
    Ok(RunLog { scenario: s.clone(), t: exp.t, truth: exp.truth, error_side: exp.error_side, filters: traces })
}

pub(super) fn nav_landmarks(s: &Scenario) -> (Vec<Vector3<f64>>, Vec<Matrix3<f64>>) {
    let landmarks: Vec<Vector3<f64>> = s.nav.landmarks.iter().map(|p| Vector3::from(*p)).collect();
    let covs = vec![Matrix3::identity() * s.nav.landmark_cov; landmarks.len()];
    (landmarks, covs)
}

/// Tuning `Q = blkdiag(q_gyro I, q_accel I, q_position I)`.
pub(super) fn nav_q(s: &Scenario) -> DMatrix<f64> {
    let n = &s.nav;
    DMatrix::from_diagonal(&DVector::from_iterator(9, [n.q_gyro, n.q_accel, n.q_position].iter().flat_map(|&v| [v; 3])))
}

fn run_nav(s: &Scenario, shift: Option<&Shift>) -> Result<RunLog> {
    let n = &s.nav;
    let (landmarks, covs) = nav_landmarks(s);
    let obs = nav_landmark_observation(&landmarks, &covs)?;
    check_shift(shift, GroupId::Se23, obs.side())?;
    let truth = nav_circle(s);
    let dt = s.dt();
    let gravity = Vector3::from(n.gravity);

    let mut init_rng = rng(s.seed, 0);
    let mut input_rng = rng(s.seed, 1);
    let mut meas_rng = rng(s.seed, 2);
    let input_std = [[(n.q_gyro / dt).sqrt(); 3], [(n.q_accel / dt).sqrt(); 3]].concat();
    let meas_std = [n.landmark_cov.sqrt(); 3];
    let rot_shift: Matrix3<f64> = match shift {
        Some(sh) if sh.side == ErrorSide::Right => Matrix3::from_iterator(sh.gamma.rotation().iter().copied()),
        _ => Matrix3::identity(),
    };

    let mut inputs = Vec::with_capacity(truth.inputs.len());
    for u in &truth.inputs {
        let w = if s.inject_noise { gaussian(&mut input_rng, 6, &input_std) } else { DVector::zeros(6) };
        let omega = u.omega + w.fixed_rows::<3>(0);
        let acc = u.u + w.fixed_rows::<3>(3);
        // Ad_{Γ⁻¹} of a pure rotation rotates each block by Rᵀ.
        inputs.push(ImuInput { omega: rot_shift.transpose() * omega, u: rot_shift.transpose() * acc });
    }

    let ratio = s.steps_per_obs();
    let mut outputs = vec![None; truth.inputs.len()];
    for (k, slot) in outputs.iter_mut().enumerate() {
        if (k + 1) % ratio != 0 {
            continue;
        }
        let noise: Vec<DVector<f64>> = if s.inject_noise {
            (0..obs.output_count()).map(|_| gaussian(&mut meas_rng, 3, &meas_std)).collect()
        } else {
            vec![]
        };
        *slot = Some(shift_outputs(shift, obs.outputs(&truth.states[k + 1], &noise)));
    }

    let truth_states = truth.states.iter().map(|g| apply_shift(shift, g)).collect::<Result<Vec<_>>>()?;
    let diag = |a: f64, b: f64, c: f64| DMatrix::from_diagonal(&DVector::from_vec(vec![a, a, a, b, b, b, c, c, c]));
    let sigmas = [n.sigma_attitude_deg.to_radians(), n.sigma_velocity_m_s, n.sigma_position_m];
    let xi0 = gaussian(&mut init_rng, 9, &sigmas.map(|v| [v; 3]).concat());
    let initial_g = apply_shift(shift, &lie::exp(&TangentVector::new(GroupId::Se23, xi0)?).compose(&truth.states[0])?)?;
    let p0 = diag(sigmas[0].powi(2), sigmas[1].powi(2), sigmas[2].powi(2));
    let q = nav_q(s);

    let exp = Experiment { t: truth.t, truth: truth_states, inputs, outputs, error_side: obs.side() };
    let mut traces = Vec::new();
    for kind in s.filters() {
        let f: Box<dyn Estimator<Input = ImuInput>> = match kind {
            FilterKind::Iekf => {
                let state = FilterState::new(initial_g.clone(), p0.clone(), 0.0)?;
                let mut filter =
                    InvariantEkf::new(NavDynamics { gravity }, obs.side(), NoiseSchedule::Body(q.clone()), state);
                filter.joseph = s.joseph;
                Box::new(Iekf { filter, obs: obs.clone() })
            }
            FilterKind::Mekf => Box::new(NavMekf::new(
                nav_extract(&initial_g),
                p0.clone(),
                q.clone(),
                gravity,
                landmarks.clone(),
                covs.clone(),
            )),
            FilterKind::Ekf => unreachable!("rejected by validation"),
        };
        traces.push(drive(s, &exp, kind, f));
    }
    Ok(RunLog { scenario: s.clone(), t: exp.t, truth: exp.truth, error_side: exp.error_side, filters: traces })
}

/// A pure rotation in `group`: an angle for SE(2), a rotation vector
/// otherwise.
pub fn rotation_shift(group: GroupId, axis_angle: &[f64]) -> Result<GroupElement> {
    let mut v = DVector::zeros(group.algebra_dim());
    match group {
        GroupId::Se2 | GroupId::So3 | GroupId::Se23 => {
            let n = if group == GroupId::Se2 { 1 } else { 3 };
            if axis_angle.len() != n {
                return Err(Error::DimensionMismatch { what: "rotation vector", expected: n, got: axis_angle.len() });
            }
            v.rows_mut(0, n).copy_from_slice(axis_angle);
        }
        GroupId::Translation(_) => return Err(Error::InvalidArgument("translation groups have no rotation".into())),
    }
    Ok(lie::exp(&TangentVector::new(group, v)?))
}
