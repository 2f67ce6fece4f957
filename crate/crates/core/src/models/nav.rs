//! Inertial navigation on flat earth, embedded in SE₂(3): gyro `ω`,
//! accelerometer `u`, and body-frame observations of known landmarks.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, RngCore};

use crate::dynamics::{Dynamics, ErrorSide};
use crate::error::{Error, Result};
use crate::filter::{gain, symmetrize, ObservationModel};
use crate::integrate::{rk4_step, step_count, Pair};
use crate::lie::{self, so3, GroupElement, GroupId};

pub const STANDARD_GRAVITY: f64 = 9.81;

pub fn default_gravity() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    /// Body-to-earth attitude.
    pub r: Matrix3<f64>,
    pub v: Vector3<f64>,
    pub x: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuInput {
    /// Gyro (rad/s).
    pub omega: Vector3<f64>,
    /// Accelerometer specific force (m/s²).
    pub u: Vector3<f64>,
}

pub fn nav_embed(s: &NavState) -> GroupElement {
    let mut m = DMatrix::identity(5, 5);
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&s.r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&s.v);
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&s.x);
    lie::project_to_group(GroupId::Se23, &m).expect("attitude must be a rotation")
}

pub fn nav_extract(g: &GroupElement) -> NavState {
    let m = g.matrix();
    NavState {
        r: m.fixed_view::<3, 3>(0, 0).into_owned(),
        v: m.fixed_view::<3, 1>(0, 3).into_owned(),
        x: m.fixed_view::<3, 1>(0, 4).into_owned(),
    }
}

/// `f_{ω,u}(R, v, x) = (R(ω)×, g + Ru, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavDynamics {
    pub gravity: Vector3<f64>,
}

impl Default for NavDynamics {
    fn default() -> Self {
        Self { gravity: default_gravity() }
    }
}

impl Dynamics for NavDynamics {
    type Input = ImuInput;

    fn group(&self) -> GroupId {
        GroupId::Se23
    }

    fn eval(&self, u: &ImuInput, chi: &DMatrix<f64>) -> DMatrix<f64> {
        let r = chi.fixed_view::<3, 3>(0, 0);
        let mut out = DMatrix::zeros(5, 5);
        out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(r * so3::skew(&u.omega)));
        out.fixed_view_mut::<3, 1>(0, 3).copy_from(&(self.gravity + r * u.u));
        out.fixed_view_mut::<3, 1>(0, 4).copy_from(&chi.fixed_view::<3, 1>(0, 3));
        out
    }

    fn random_input(&self, rng: &mut dyn RngCore) -> ImuInput {
        let mut v =
            || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let omega = v();
        let u = v() * 10.0;
        ImuInput { omega, u }
    }

    fn analytic_a(&self, u: &ImuInput, side: ErrorSide) -> Option<DMatrix<f64>> {
        Some(match side {
            ErrorSide::Right => nav_a(&self.gravity),
            ErrorSide::Left => nav_left_a(u),
        })
    }
}

fn blocks(entries: &[(usize, usize, Matrix3<f64>)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(9, 9);
    for &(i, j, b) in entries {
        a.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(&b);
    }
    a
}

/// Right-error `A = [[0, 0, 0], [(g)×, 0, 0], [0, I, 0]]`, constant in time.
pub fn nav_a(gravity: &Vector3<f64>) -> DMatrix<f64> {
    blocks(&[(1, 0, so3::skew(gravity)), (2, 1, Matrix3::identity())])
}

/// Left-error `A = [[−(ω)×, 0, 0], [−(u)×, −(ω)×, 0], [0, I, −(ω)×]]`;
/// gravity drops out.
pub fn nav_left_a(u: &ImuInput) -> DMatrix<f64> {
    let w = -so3::skew(&u.omega);
    blocks(&[(0, 0, w), (1, 0, -so3::skew(&u.u)), (1, 1, w), (2, 1, Matrix3::identity()), (2, 2, w)])
}

/// Stacked `((pⱼ)×, 0, −I)` blocks.
pub fn nav_landmark_h(landmarks: &[Vector3<f64>]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3 * landmarks.len(), 9);
    for (j, p) in landmarks.iter().enumerate() {
        h.fixed_view_mut::<3, 3>(3 * j, 0).copy_from(&so3::skew(p));
        h.fixed_view_mut::<3, 3>(3 * j, 6).copy_from(&(-Matrix3::identity()));
    }
    h
}

/// `Yʲ = χ⁻¹(pⱼ, 0, 1) + (Vʲ, 0, 0)`: top rows hold `Rᵀ(pⱼ − x)`.
pub fn nav_landmark_observation(landmarks: &[Vector3<f64>], covs: &[Matrix3<f64>]) -> Result<ObservationModel> {
    if landmarks.is_empty() {
        return Err(Error::InvalidArgument("at least one landmark is required".into()));
    }
    if covs.len() != landmarks.len() {
        return Err(Error::DimensionMismatch {
            what: "landmark covariances",
            expected: landmarks.len(),
            got: covs.len(),
        });
    }
    ObservationModel::new(
        ErrorSide::Right,
        GroupId::Se23,
        landmarks.iter().map(|p| DVector::from_vec(vec![p.x, p.y, p.z, 0.0, 1.0])).collect(),
        vec![0, 1, 2],
        nav_landmark_h(landmarks),
        covs.iter().map(|c| DMatrix::from_column_slice(3, 3, c.as_slice())).collect(),
    )
}

/// The displayed `Q̂ = M Cov(w) Mᵀ` with `M = [[R̂, 0, 0], [(v̂)×R̂, R̂, 0], [(x̂)×R̂, 0, R̂]]`.
pub fn nav_q_hat(x_hat: &GroupElement, cov: &DMatrix<f64>) -> DMatrix<f64> {
    let s = nav_extract(x_hat);
    let m =
        blocks(&[(0, 0, s.r), (1, 0, so3::skew(&s.v) * s.r), (1, 1, s.r), (2, 0, so3::skew(&s.x) * s.r), (2, 2, s.r)]);
    &m * cov * m.transpose()
}

/// True when the landmarks span at least a plane, i.e. they are not all
/// collinear.
pub fn landmarks_non_collinear(landmarks: &[Vector3<f64>]) -> bool {
    if landmarks.len() < 3 {
        return false;
    }
    let diffs = DMatrix::from_fn(3, landmarks.len() - 1, |i, j| landmarks[j + 1][i] - landmarks[0][i]);
    let sv = diffs.singular_values();
    let top = sv.max();
    top > 0.0 && sv.iter().filter(|&&s| s > 1e-9 * top).count() >= 2
}

/// Multiplicative EKF with error `ε = (ζ, v̂ − v, x̂ − x)` where
/// `R̂R⁻¹ ≈ I + (ζ)×`.
#[derive(Debug, Clone, PartialEq)]
pub struct NavMekf {
    pub state: NavState,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub gravity: Vector3<f64>,
    pub landmarks: Vec<Vector3<f64>>,
    pub covs: Vec<Matrix3<f64>>,
}

impl NavMekf {
    pub fn new(
        initial: NavState,
        p0: DMatrix<f64>,
        q: DMatrix<f64>,
        gravity: Vector3<f64>,
        landmarks: Vec<Vector3<f64>>,
        covs: Vec<Matrix3<f64>>,
    ) -> Self {
        Self { state: initial, p: p0, q, gravity, landmarks, covs }
    }

    pub fn f_matrix(r_hat: &Matrix3<f64>, u: &Vector3<f64>) -> DMatrix<f64> {
        blocks(&[(1, 0, -so3::skew(&(r_hat * u))), (2, 1, Matrix3::identity())])
    }

    pub fn h_matrix(state: &NavState, landmarks: &[Vector3<f64>]) -> DMatrix<f64> {
        let rt = state.r.transpose();
        let mut h = DMatrix::zeros(3 * landmarks.len(), 9);
        for (k, p) in landmarks.iter().enumerate() {
            h.fixed_view_mut::<3, 3>(3 * k, 0).copy_from(&(-rt * so3::skew(&(p - state.x))));
            h.fixed_view_mut::<3, 3>(3 * k, 6).copy_from(&rt);
        }
        h
    }

    /// RK4 over `span` on the estimate and covariance jointly. Sensor noise
    /// enters the error through `blkdiag(R̂, R̂, I)`.
    pub fn propagate(&mut self, input: &ImuInput, span: f64, dt: f64) -> Result<()> {
        let steps = step_count(0.0, span, dt)?;
        let dynamics = NavDynamics { gravity: self.gravity };
        let mut y = Pair(nav_embed(&self.state).into_matrix(), self.p.clone());
        for k in 0..steps {
            let next = rk4_step(k as f64 * dt, &y, dt, |_, Pair(chi, p)| {
                let r: Matrix3<f64> = chi.fixed_view::<3, 3>(0, 0).into_owned();
                let f = Self::f_matrix(&r, &input.u);
                let g = blocks(&[(0, 0, r), (1, 1, r), (2, 2, Matrix3::identity())]);
                let dp = &f * p + p * f.transpose() + &g * &self.q * g.transpose();
                Pair(dynamics.eval(input, chi), dp)
            });
            if next.0.iter().chain(next.1.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure("non-finite MEKF propagation".into()));
            }
            y = Pair(lie::project_to_group(GroupId::Se23, &next.0)?.into_matrix(), symmetrize(&next.1));
        }
        self.state = nav_extract(&GroupElement::new(GroupId::Se23, y.0)?);
        self.p = y.1;
        Ok(())
    }

    /// `ys[k]` is the body-frame measurement `Rᵀ(pₖ − x) + Vᵏ`.
    pub fn update(&mut self, ys: &[Vector3<f64>]) -> Result<f64> {
        if ys.len() != self.landmarks.len() {
            return Err(Error::DimensionMismatch {
                what: "landmark measurements",
                expected: self.landmarks.len(),
                got: ys.len(),
            });
        }
        let h = Self::h_matrix(&self.state, &self.landmarks);
        let k = self.landmarks.len();
        let mut n = DMatrix::zeros(3 * k, 3 * k);
        let mut z = DVector::zeros(3 * k);
        for (j, ((p, y), c)) in self.landmarks.iter().zip(ys).zip(&self.covs).enumerate() {
            n.fixed_view_mut::<3, 3>(3 * j, 3 * j).copy_from(c);
            let predicted = self.state.r.transpose() * (p - self.state.x);
            z.fixed_rows_mut::<3>(3 * j).copy_from(&(y - predicted));
        }
        let g = gain(&self.p, &h, &n, false)?;
        let eps = &g.l * z;
        let zeta = Vector3::new(eps[0], eps[1], eps[2]);
        self.state.r = so3::nearest_rotation(&((Matrix3::identity() - so3::skew(&zeta)) * self.state.r));
        self.state.v -= eps.fixed_rows::<3>(3);
        self.state.x -= eps.fixed_rows::<3>(6);
        self.p = g.p_plus;
        Ok(g.l.norm())
    }
}
