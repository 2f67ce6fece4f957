//! Non-holonomic car on SE(2): odometer velocity `v`, steering coefficient
//! `u` with `dθ/dt = u·v`, GPS and range-and-bearing landmark outputs.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use rand::{Rng, RngCore};

use crate::dynamics::{Dynamics, ErrorSide};
use crate::error::{Error, Result};
use crate::filter::{gain, symmetrize, ObservationModel};
use crate::integrate::{rk4_step, step_count, Pair};
use crate::lie::{self, se2, GroupElement, GroupId, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarState {
    pub theta: f64,
    pub x: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarInput {
    /// Odometer velocity (m/s).
    pub v: f64,
    /// Steering coefficient (1/m).
    pub u: f64,
}

impl CarInput {
    /// Body-frame twist `ν = (uv, v, 0)`.
    pub fn twist(&self) -> Vector3<f64> {
        Vector3::new(self.u * self.v, self.v, 0.0)
    }
}

pub fn car_embed(s: &CarState) -> GroupElement {
    let m = se2::compose(s.theta, &s.x);
    GroupElement::new(GroupId::Se2, DMatrix::from_column_slice(3, 3, m.as_slice()))
        .expect("compose builds a valid SE(2) element")
}

/// Heading comes back in (−π, π].
pub fn car_extract(g: &GroupElement) -> CarState {
    let m = g.matrix();
    CarState { theta: m[(1, 0)].atan2(m[(0, 0)]), x: Vector2::new(m[(0, 2)], m[(1, 2)]) }
}

/// Noise-free part of `dχ/dt = χ(ν + w)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CarDynamics;

impl Dynamics for CarDynamics {
    type Input = CarInput;

    fn group(&self) -> GroupId {
        GroupId::Se2
    }

    fn eval(&self, u: &CarInput, chi: &DMatrix<f64>) -> DMatrix<f64> {
        let nu = TangentVector::from_slice(GroupId::Se2, u.twist().as_slice()).expect("three coordinates");
        chi * lie::hat(&nu).into_matrix()
    }

    fn random_input(&self, rng: &mut dyn RngCore) -> CarInput {
        CarInput { v: rng.random_range(-3.0..3.0), u: rng.random_range(-1.0..1.0) }
    }

    fn analytic_a(&self, u: &CarInput, side: ErrorSide) -> Option<DMatrix<f64>> {
        Some(car_a(u, side))
    }
}

/// Left: `A = −ad_ν`. Right: the error is constant, `A = 0`.
pub fn car_a(u: &CarInput, side: ErrorSide) -> DMatrix<f64> {
    match side {
        ErrorSide::Left => {
            let w = u.u * u.v;
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, w, u.v, -w, 0.0])
        }
        ErrorSide::Right => DMatrix::zeros(3, 3),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarNoiseSpec {
    /// rad²/s
    pub q_theta: f64,
    /// (m/s)², longitudinal
    pub q_l: f64,
    /// (m/s)², transversal
    pub q_tr: f64,
    pub gps_cov: Matrix2<f64>,
    pub landmark_cov: Matrix2<f64>,
}

impl CarNoiseSpec {
    /// The tuning used for the circle experiments.
    pub fn circle_tuning() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            q_theta: deg * deg,
            q_l: 1e-4,
            q_tr: 1e-4,
            gps_cov: Matrix2::identity(),
            landmark_cov: Matrix2::identity(),
        }
    }

    /// Covariance of `(w^θ, w^l, w^tr)`.
    pub fn q(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![self.q_theta, self.q_l, self.q_tr]))
    }
}

fn dm2(m: &Matrix2<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 2, m.as_slice())
}

pub fn car_gps_h() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
}

/// `Y = χ(0, 0, 1)ᵀ + (V, 0)`, a left-invariant output.
pub fn car_gps_observation(gps_cov: &Matrix2<f64>) -> ObservationModel {
    ObservationModel::new(
        ErrorSide::Left,
        GroupId::Se2,
        vec![DVector::from_vec(vec![0.0, 0.0, 1.0])],
        vec![0, 1],
        car_gps_h(),
        vec![dm2(gps_cov)],
    )
    .expect("GPS model dimensions are consistent")
}

/// Stacked `[[−p₂, 1, 0], [p₁, 0, 1]]` blocks.
pub fn car_landmark_h(landmarks: &[Vector2<f64>]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(2 * landmarks.len(), 3);
    for (k, p) in landmarks.iter().enumerate() {
        h.view_mut((2 * k, 0), (2, 3)).copy_from_slice(&[-p.y, p.x, 1.0, 0.0, 0.0, 1.0]);
    }
    h
}

/// `Yᵏ = −χ⁻¹(pₖ, 1) + (Vᵏ, 0)`, a right-invariant output. Its top rows
/// hold `R(θ)ᵀ(x − pₖ)`, the negated body-frame landmark position.
pub fn car_landmark_observation(landmarks: &[Vector2<f64>], cov: &Matrix2<f64>) -> Result<ObservationModel> {
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("at least one landmark is required".into()));
    }
    ObservationModel::new(
        ErrorSide::Right,
        GroupId::Se2,
        landmarks.iter().map(|p| DVector::from_vec(vec![-p.x, -p.y, -1.0])).collect(),
        vec![0, 1],
        car_landmark_h(landmarks),
        vec![dm2(cov); landmarks.len()],
    )
}

/// Conventional EKF on `(θ, x₁, x₂)` with error `truth − estimate` and
/// GPS updates.
#[derive(Debug, Clone, PartialEq)]
pub struct CarEkf {
    pub state: Vector3<f64>,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub gps_cov: DMatrix<f64>,
}

impl CarEkf {
    pub fn new(initial: &CarState, p0: DMatrix<f64>, spec: &CarNoiseSpec) -> Self {
        Self {
            state: Vector3::new(initial.theta, initial.x.x, initial.x.y),
            p: p0,
            q: spec.q(),
            gps_cov: dm2(&spec.gps_cov),
        }
    }

    /// `F = ∂f/∂e` at the estimate.
    pub fn f_matrix(theta_hat: f64, v: f64) -> DMatrix<f64> {
        let (s, c) = theta_hat.sin_cos();
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, -s * v, 0.0, 0.0, c * v, 0.0, 0.0])
    }

    pub fn h_matrix() -> DMatrix<f64> {
        car_gps_h()
    }

    pub fn estimate(&self) -> CarState {
        CarState { theta: self.state.x, x: Vector2::new(self.state.y, self.state.z) }
    }

    /// RK4 over `span` on the estimate and covariance jointly, with the
    /// body-frame noise mapped to the world frame at the current heading.
    pub fn propagate(&mut self, input: &CarInput, span: f64, dt: f64) -> Result<()> {
        let steps = step_count(0.0, span, dt)?;
        let mut y = Pair(DVector::from_column_slice(self.state.as_slice()), self.p.clone());
        for k in 0..steps {
            y = rk4_step(k as f64 * dt, &y, dt, |_, Pair(s, p)| {
                let theta = s[0];
                let f = Self::f_matrix(theta, input.v);
                let mut g = DMatrix::<f64>::identity(3, 3);
                g.view_mut((1, 1), (2, 2)).copy_from(&dm2(&se2::rot(theta)));
                let ds = DVector::from_vec(vec![input.u * input.v, theta.cos() * input.v, theta.sin() * input.v]);
                let dp = &f * p + p * f.transpose() + &g * &self.q * g.transpose();
                Pair(ds, dp)
            });
            if y.0.iter().chain(y.1.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure("non-finite EKF propagation".into()));
            }
        }
        self.state = Vector3::new(y.0[0], y.0[1], y.0[2]);
        self.p = symmetrize(&y.1);
        Ok(())
    }

    /// Additive update with a GPS fix `y` (world frame).
    pub fn update(&mut self, y: &Vector2<f64>) -> Result<f64> {
        let h = Self::h_matrix();
        let g = gain(&self.p, &h, &self.gps_cov, false)?;
        let z = DVector::from_vec(vec![y.x - self.state.y, y.y - self.state.z]);
        self.state += Vector3::from_iterator((&g.l * z).iter().copied());
        self.p = g.p_plus;
        Ok(g.l.norm())
    }
}
