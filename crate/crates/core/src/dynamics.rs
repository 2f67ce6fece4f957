//! Group-affine dynamics, invariant errors and the log-linear property.
//!
//! A system `dχ/dt = f_u(χ)` on a matrix Lie group is group-affine when
//! `f_u(ab) = f_u(a)b + a f_u(b) − a f_u(I)b`. For such systems the left and
//! right invariant errors follow autonomous dynamics `g_u(η)`, and their
//! logarithms follow the linear ODE `dξ/dt = A_u ξ` exactly.

use nalgebra::{DMatrix, DVector, Vector2};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{grid_time, rk4_step, step_count};
use crate::lie::{self, se2, GroupElement, GroupId, LieError, TangentVector};

/// Central-difference step for numeric Jacobians.
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Elementwise agreement required between analytic and numeric Jacobians.
pub const JACOBIAN_TOL: f64 = 1e-5;
/// Relative residual under which a system is certified group-affine.
pub const AFFINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorSide {
    Left,
    Right,
}

/// Continuous dynamics `dχ/dt = f_u(χ)` on a matrix Lie group.
///
/// `eval` takes a raw matrix so it can be called on RK4 stage points, which
/// sit slightly off the manifold.
pub trait Dynamics {
    type Input: Clone;

    fn group(&self) -> GroupId;

    /// `f_u(χ)`, an element of the tangent space at χ.
    fn eval(&self, u: &Self::Input, chi: &DMatrix<f64>) -> DMatrix<f64>;

    /// A random input for property checks.
    fn random_input(&self, rng: &mut dyn RngCore) -> Self::Input;

    /// Closed-form `A_u` of the error dynamics, if the model knows it.
    fn analytic_a(&self, _u: &Self::Input, _side: ErrorSide) -> Option<DMatrix<f64>> {
        None
    }
}

type MatrixField = Box<dyn Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync>;

/// Input-free dynamics built from a closure.
pub struct ClosureDynamics {
    group: GroupId,
    f: MatrixField,
}

impl ClosureDynamics {
    pub fn new(group: GroupId, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { group, f: Box::new(f) }
    }
}

impl Dynamics for ClosureDynamics {
    type Input = ();

    fn group(&self) -> GroupId {
        self.group
    }

    fn eval(&self, _u: &(), chi: &DMatrix<f64>) -> DMatrix<f64> {
        (self.f)(chi)
    }

    fn random_input(&self, _rng: &mut dyn RngCore) {}
}

/// η = χ⁻¹χ̂
pub fn left_error(chi: &GroupElement, chi_hat: &GroupElement) -> Result<GroupElement, LieError> {
    chi.inverse().compose(chi_hat)
}

/// η = χ̂χ⁻¹
pub fn right_error(chi: &GroupElement, chi_hat: &GroupElement) -> Result<GroupElement, LieError> {
    chi_hat.compose(&chi.inverse())
}

pub fn invariant_error(side: ErrorSide, chi: &GroupElement, chi_hat: &GroupElement) -> Result<GroupElement, LieError> {
    match side {
        ErrorSide::Left => left_error(chi, chi_hat),
        ErrorSide::Right => right_error(chi, chi_hat),
    }
}

/// Random tangent vector with norm uniformly drawn in `[0, max_norm]`.
pub fn random_tangent(group: GroupId, max_norm: f64, rng: &mut dyn RngCore) -> TangentVector {
    let dim = group.algebra_dim();
    let mut v = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let n = v.norm();
    if n > 0.0 {
        v *= rng.random_range(0.0..max_norm) / n;
    }
    TangentVector::new(group, v).expect("dimension matches by construction")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupAffineReport {
    pub holds: bool,
    pub max_residual: f64,
}

/// Samples `(u, a, b)` and measures how far `f_u` is from satisfying the
/// group-affine identity, relative to the size of its terms.
pub fn check_group_affine<D: Dynamics>(d: &D, sample_count: usize, seed: u64) -> Result<GroupAffineReport> {
    if sample_count == 0 {
        return Err(Error::InvalidArgument("sample_count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let group = d.group();
    let n = group.matrix_size();
    let id = DMatrix::<f64>::identity(n, n);
    let mut max_residual: f64 = 0.0;
    for _ in 0..sample_count {
        let u = d.random_input(&mut rng);
        let a = lie::exp(&random_tangent(group, 2.0, &mut rng)).into_matrix();
        let b = lie::exp(&random_tangent(group, 2.0, &mut rng)).into_matrix();
        let lhs = d.eval(&u, &(&a * &b));
        let t1 = d.eval(&u, &a) * &b;
        let t2 = &a * d.eval(&u, &b);
        let t3 = &a * d.eval(&u, &id) * &b;
        let scale = lhs.norm() + t1.norm() + t2.norm() + t3.norm();
        let residual = (&lhs - &t1 - &t2 + &t3).norm();
        if residual > 0.0 {
            max_residual = max_residual.max(residual / scale);
        }
    }
    Ok(GroupAffineReport { holds: max_residual < AFFINE_TOL, max_residual })
}

/// `g_u^L(η) = f_u(η) − f_u(I)η` or `g_u^R(η) = f_u(η) − ηf_u(I)`.
pub fn error_dynamics<D: Dynamics>(d: &D, side: ErrorSide, u: &D::Input, eta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.group().matrix_size();
    let f_id = d.eval(u, &DMatrix::identity(n, n));
    match side {
        ErrorSide::Left => d.eval(u, eta) - f_id * eta,
        ErrorSide::Right => d.eval(u, eta) - eta * f_id,
    }
}

/// Central-difference Jacobian at 0 of `ξ ↦ vee(exp(ξ)⁻¹ g_u(exp ξ))`.
///
/// Left-translating by `exp(ξ)⁻¹` keeps the argument of vee in the algebra
/// and only perturbs second-order terms, so the Jacobian is `A_u`.
pub fn numeric_a<D: Dynamics>(d: &D, side: ErrorSide, u: &D::Input) -> DMatrix<f64> {
    let group = d.group();
    numeric_jacobian(group.algebra_dim(), group.algebra_dim(), JACOBIAN_STEP, |xi| {
        let eta = lie::exp(&TangentVector::new(group, xi.clone()).expect("dimension matches"));
        let g = error_dynamics(d, side, u, eta.matrix());
        lie::vee_raw(group, &(eta.inverse().matrix() * g))
    })
}

/// Central-difference Jacobian of `f: ℝⁿ → ℝᵐ` at 0.
pub fn numeric_jacobian(m: usize, n: usize, h: f64, mut f: impl FnMut(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = h;
        let col = (f(&e) - f(&(-&e))) / (2.0 * h);
        jac.set_column(j, &col);
    }
    jac
}

/// `A_u`, analytic when the model supplies one, numeric otherwise.
pub fn a_matrix<D: Dynamics>(d: &D, side: ErrorSide, u: &D::Input) -> DMatrix<f64> {
    d.analytic_a(u, side).unwrap_or_else(|| numeric_a(d, side, u))
}

/// `A_u`, cross-checking any analytic form against the numeric Jacobian.
pub fn linearize<D: Dynamics>(d: &D, side: ErrorSide, u: &D::Input) -> Result<DMatrix<f64>> {
    let numeric = numeric_a(d, side, u);
    match d.analytic_a(u, side) {
        None => Ok(numeric),
        Some(a) => {
            let max_diff = (&a - &numeric).amax();
            if max_diff > JACOBIAN_TOL {
                return Err(Error::ModelInconsistency { max_diff });
            }
            Ok(a)
        }
    }
}

/// Integrates `dX/dt = rhs(t, X)` from `x0` with RK4, projecting back onto
/// the group after every step. `on_step` sees every grid point after the
/// initial one.
pub fn integrate_on_group(
    x0: &GroupElement,
    t0: f64,
    t1: f64,
    dt: f64,
    mut rhs: impl FnMut(f64, &DMatrix<f64>) -> DMatrix<f64>,
    mut on_step: impl FnMut(f64, &GroupElement) -> Result<()>,
) -> Result<GroupElement> {
    let group = x0.group();
    let steps = step_count(t0, t1, dt)?;
    let mut x = x0.clone();
    for k in 0..steps {
        let t = grid_time(t0, dt, k);
        let next = rk4_step(t, x.matrix(), dt, &mut rhs);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite state at t = {t}")));
        }
        x = lie::project_to_group(group, &next)?;
        on_step(grid_time(t0, dt, k + 1), &x)?;
    }
    Ok(x)
}

/// Integrates the system itself from `chi0`.
pub fn propagate_state<D: Dynamics>(
    d: &D,
    chi0: &GroupElement,
    u: impl Fn(f64) -> D::Input,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<GroupElement> {
    integrate_on_group(chi0, t0, t1, dt, |t, x| d.eval(&u(t), x), |_, _| Ok(()))
}

/// Integrates `dη/dt = g_u(η)` directly.
pub fn propagate_error_exact<D: Dynamics>(
    d: &D,
    side: ErrorSide,
    eta0: &GroupElement,
    u: impl Fn(f64) -> D::Input,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<GroupElement> {
    integrate_on_group(eta0, t0, t1, dt, |t, eta| error_dynamics(d, side, &u(t), eta), |_, _| Ok(()))
}

/// Integrates `dξ/dt = A_{u(t)} ξ`.
pub fn propagate_log_linear<D: Dynamics>(
    d: &D,
    side: ErrorSide,
    xi0: &TangentVector,
    u: impl Fn(f64) -> D::Input,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<TangentVector> {
    let steps = step_count(t0, t1, dt)?;
    let mut xi = xi0.vector().clone();
    for k in 0..steps {
        let t = grid_time(t0, dt, k);
        xi = rk4_step(t, &xi, dt, |s, x| a_matrix(d, side, &u(s)) * x);
    }
    Ok(TangentVector::new(xi0.group(), xi)?)
}

/// Largest `‖log(η_t) − ξ_t‖` over the grid, with η integrated exactly
/// from `exp(ξ₀)` and ξ through the linear ODE.
pub fn verify_log_linear<D: Dynamics>(
    d: &D,
    side: ErrorSide,
    xi0: &TangentVector,
    u: impl Fn(f64) -> D::Input,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<f64> {
    let mut xi = xi0.vector().clone();
    let mut worst: f64 = 0.0;
    let mut t_prev = t0;
    integrate_on_group(
        &lie::exp(xi0),
        t0,
        t1,
        dt,
        |t, eta| error_dynamics(d, side, &u(t), eta),
        |t, eta| {
            xi = rk4_step(t_prev, &xi, t - t_prev, |s, x| a_matrix(d, side, &u(s)) * x);
            t_prev = t;
            let log = match lie::log(eta) {
                Ok(l) => l,
                Err(LieError::BranchCut { angle }) => {
                    return Err(Error::VerificationInfeasible(format!(
                        "error rotation reached the branch cut ({angle} rad) at t = {t}"
                    )))
                }
                Err(e) => return Err(e.into()),
            };
            worst = worst.max((log.vector() - &xi).norm());
            Ok(())
        },
    )?;
    Ok(worst)
}

/// `‖Φ_t(η₀η₀′) − Φ_t(η₀)Φ_t(η₀′)‖_F` where Φ is the error flow.
#[allow(clippy::too_many_arguments)]
pub fn check_flow_homomorphism<D: Dynamics>(
    d: &D,
    side: ErrorSide,
    eta0: &GroupElement,
    eta0_prime: &GroupElement,
    u: impl Fn(f64) -> D::Input,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<f64> {
    let product = eta0.compose(eta0_prime)?;
    let flow = |e: &GroupElement| propagate_error_exact(d, side, e, &u, t0, t1, dt);
    let lhs = flow(&product)?;
    let rhs = flow(eta0)?.compose(&flow(eta0_prime)?)?;
    Ok((lhs.matrix() - rhs.matrix()).norm())
}

/// The nonlinear car error of the introductory example,
/// `(s, ½s[a(s)I − J]R(−θ̄)(X − X̄))` with `s = θ − θ̄` and
/// `a(s) = sin s / (1 − cos s)`.
///
/// This equals `log(χ̄⁻¹χ)` on SE(2); at `s = 0` the limit `½s·a(s) → 1` is
/// taken through the series of `(s/2)cot(s/2)`.
pub fn intro_example_xi(theta: f64, x: &Vector2<f64>, theta_bar: f64, x_bar: &Vector2<f64>) -> TangentVector {
    let s = theta - theta_bar;
    let dx = se2::rot(-theta_bar) * (x - x_bar);
    let y = se2::left_jacobian_inv(s) * dx;
    TangentVector::from_slice(GroupId::Se2, &[s, y[0], y[1]]).expect("three coordinates")
}
