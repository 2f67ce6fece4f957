//! Left/right invariant EKF: continuous propagation with a Riccati ODE and
//! discrete multiplicative updates with reduced-row gains.
//!
//! Observation models are linearized so that the innovation satisfies
//! `z ≈ −Hξ` for the invariant log-error ξ. With `L = PHᵀS⁻¹` the update
//! `χ̂·exp(Lz)` (left) or `exp(Lz)·χ̂` (right) then maps ξ to `(I − LH)ξ`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{a_matrix, Dynamics, ErrorSide};
use crate::error::{Error, Result};
use crate::integrate::{grid_time, rk4_step, step_count};
use crate::lie::{self, GroupElement, GroupId, TangentVector};

/// Largest condition number of `S` accepted by [`gain`].
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub x_hat: GroupElement,
    pub p: DMatrix<f64>,
    pub t: f64,
}

impl FilterState {
    pub fn new(x_hat: GroupElement, p: DMatrix<f64>, t: f64) -> Result<Self> {
        let dim = x_hat.group().algebra_dim();
        if p.nrows() != dim || p.ncols() != dim {
            return Err(Error::DimensionMismatch { what: "covariance", expected: dim, got: p.nrows() });
        }
        Ok(Self { x_hat, p: symmetrize(&p), t })
    }

    pub fn group(&self) -> GroupId {
        self.x_hat.group()
    }
}

pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Process noise as seen by the invariant error.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSchedule {
    /// `Q̂ = Q` whatever the estimate.
    Constant(DMatrix<f64>),
    /// Noise entering in the body frame, `dχ/dt = f_u(χ) + χ·hat(w)`:
    /// `Q̂ = Q` for left errors and `Ad_χ̂ Q Ad_χ̂ᵀ` for right errors.
    Body(DMatrix<f64>),
}

impl NoiseSchedule {
    pub fn q_hat(&self, side: ErrorSide, x_hat: &GroupElement) -> DMatrix<f64> {
        match (self, side) {
            (NoiseSchedule::Constant(q), _) | (NoiseSchedule::Body(q), ErrorSide::Left) => q.clone(),
            (NoiseSchedule::Body(q), ErrorSide::Right) => {
                let ad = lie::adjoint(x_hat);
                &ad * q * ad.transpose()
            }
        }
    }
}

/// Outputs of the form `Y = χdⁱ + Vⁱ` (left) or `Y = χ⁻¹dⁱ + Vⁱ` (right),
/// with noise living in the `rows` kept by the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    side: ErrorSide,
    group: GroupId,
    d_list: Vec<DVector<f64>>,
    rows: Vec<usize>,
    h: DMatrix<f64>,
    covs: Vec<DMatrix<f64>>,
}

impl ObservationModel {
    /// `h` is the stacked `k·r × dim 𝔤` Jacobian; `covs[i]` the `r × r`
    /// covariance of `Vⁱ` in the frame it is measured in.
    pub fn new(
        side: ErrorSide,
        group: GroupId,
        d_list: Vec<DVector<f64>>,
        rows: Vec<usize>,
        h: DMatrix<f64>,
        covs: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = group.matrix_size();
        let k = d_list.len();
        let r = rows.len();
        if k == 0 {
            return Err(Error::InvalidArgument("observation model needs at least one output".into()));
        }
        if let Some(d) = d_list.iter().find(|d| d.len() != n) {
            return Err(Error::DimensionMismatch { what: "known vector d", expected: n, got: d.len() });
        }
        if rows.iter().any(|&i| i >= n) {
            return Err(Error::InvalidArgument(format!("reduced row index out of range for {group}")));
        }
        if h.nrows() != k * r || h.ncols() != group.algebra_dim() {
            return Err(Error::DimensionMismatch { what: "H rows", expected: k * r, got: h.nrows() });
        }
        if covs.len() != k || covs.iter().any(|c| c.nrows() != r || c.ncols() != r) {
            return Err(Error::DimensionMismatch { what: "noise covariances", expected: k, got: covs.len() });
        }
        Ok(Self { side, group, d_list, rows, h, covs })
    }

    pub fn side(&self) -> ErrorSide {
        self.side
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn d_list(&self) -> &[DVector<f64>] {
        &self.d_list
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn output_count(&self) -> usize {
        self.d_list.len()
    }

    pub fn reduced_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn reduce(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|&i| y[i]))
    }

    /// Outputs generated by a state `chi`, with `noise[i]` (length r) added
    /// to the reduced rows. Pass an empty slice for noise-free outputs.
    pub fn outputs(&self, chi: &GroupElement, noise: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let transport = match self.side {
            ErrorSide::Left => chi.matrix().clone(),
            ErrorSide::Right => chi.inverse().into_matrix(),
        };
        self.d_list
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut y = &transport * d;
                if let Some(v) = noise.get(i) {
                    for (j, &row) in self.rows.iter().enumerate() {
                        y[row] += v[j];
                    }
                }
                y
            })
            .collect()
    }

    /// Stacked `reduce(χ̂⁻¹Yⁱ − dⁱ)` (left) or `reduce(χ̂Yⁱ − dⁱ)` (right).
    pub fn innovation(&self, x_hat: &GroupElement, ys: &[DVector<f64>]) -> Result<DVector<f64>> {
        if ys.len() != self.d_list.len() {
            return Err(Error::DimensionMismatch {
                what: "observation count",
                expected: self.d_list.len(),
                got: ys.len(),
            });
        }
        let transport = self.transport(x_hat);
        let r = self.rows.len();
        let mut z = DVector::zeros(ys.len() * r);
        for (i, (y, d)) in ys.iter().zip(&self.d_list).enumerate() {
            if y.len() != d.len() {
                return Err(Error::DimensionMismatch { what: "observation vector", expected: d.len(), got: y.len() });
            }
            let full = &transport * y - d;
            z.rows_mut(i * r, r).copy_from(&self.reduce(&full));
        }
        Ok(z)
    }

    /// Innovation noise covariance: each `Vⁱ` reaches the innovation through
    /// the reduced block of χ̂⁻¹ (left) or χ̂ (right).
    pub fn n_hat(&self, x_hat: &GroupElement) -> DMatrix<f64> {
        let transport = self.transport(x_hat);
        let r = self.rows.len();
        let t = DMatrix::from_fn(r, r, |i, j| transport[(self.rows[i], self.rows[j])]);
        let k = self.covs.len();
        let mut n = DMatrix::zeros(k * r, k * r);
        for (i, c) in self.covs.iter().enumerate() {
            n.view_mut((i * r, i * r), (r, r)).copy_from(&(&t * c * t.transpose()));
        }
        n
    }

    fn transport(&self, x_hat: &GroupElement) -> DMatrix<f64> {
        match self.side {
            ErrorSide::Left => x_hat.inverse().into_matrix(),
            ErrorSide::Right => x_hat.matrix().clone(),
        }
    }
}

/// Integrates the estimate and the Riccati ODE `dP/dt = AP + PAᵀ + Q̂` over
/// `[fs.t, fs.t + span]` with RK4 steps of `dt`. `Q̂` is frozen at the
/// start of each step.
#[allow(clippy::too_many_arguments)]
pub fn propagate<D: Dynamics>(
    fs: &FilterState,
    d: &D,
    side: ErrorSide,
    noise: &NoiseSchedule,
    u: impl Fn(f64) -> D::Input,
    span: f64,
    dt: f64,
) -> Result<FilterState> {
    let steps = step_count(fs.t, fs.t + span, dt)?;
    let group = fs.group();
    let mut x = fs.x_hat.clone();
    let mut p = fs.p.clone();
    for k in 0..steps {
        let t = grid_time(fs.t, dt, k);
        let q = noise.q_hat(side, &x);
        let next_x = rk4_step(t, x.matrix(), dt, |s, m| d.eval(&u(s), m));
        p = rk4_step(t, &p, dt, |s, p| {
            let a = a_matrix(d, side, &u(s));
            &a * p + p * a.transpose() + &q
        });
        p = symmetrize(&p);
        if next_x.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite propagation at t = {t}")));
        }
        x = lie::project_to_group(group, &next_x)?;
    }
    Ok(FilterState { x_hat: x, p, t: fs.t + span })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gain {
    pub l: DMatrix<f64>,
    pub p_plus: DMatrix<f64>,
}

/// `S = HPHᵀ + N̂`, `L = PHᵀS⁻¹`, `P⁺ = (I − LH)P` (or the Joseph form).
pub fn gain(p: &DMatrix<f64>, h: &DMatrix<f64>, n_hat: &DMatrix<f64>, joseph: bool) -> Result<Gain> {
    let s = symmetrize(&(h * p * h.transpose() + n_hat));
    let eig = s.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition < MAX_INNOVATION_CONDITION) {
        return Err(Error::SingularInnovation { condition });
    }
    let chol = s.cholesky().ok_or(Error::SingularInnovation { condition })?;
    // L = PHᵀS⁻¹ = (S⁻¹HP)ᵀ since S and P are symmetric.
    let l = chol.solve(&(h * p)).transpose();
    let dim = p.nrows();
    let i_lh = DMatrix::identity(dim, dim) - &l * h;
    let p_plus = if joseph { &i_lh * p * i_lh.transpose() + &l * n_hat * l.transpose() } else { &i_lh * p };
    Ok(Gain { l, p_plus: symmetrize(&p_plus) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateInfo {
    pub innovation: DVector<f64>,
    pub gain_norm: f64,
}

pub fn update(
    fs: &FilterState,
    obs: &ObservationModel,
    ys: &[DVector<f64>],
    joseph: bool,
) -> Result<(FilterState, UpdateInfo)> {
    lie::same_group(fs.group(), obs.group())?;
    let z = obs.innovation(&fs.x_hat, ys)?;
    let g = gain(&fs.p, obs.h(), &obs.n_hat(&fs.x_hat), joseph)?;
    let correction = lie::exp(&TangentVector::new(fs.group(), &g.l * &z)?);
    let x_hat = match obs.side() {
        ErrorSide::Left => &fs.x_hat * &correction,
        ErrorSide::Right => &correction * &fs.x_hat,
    };
    let x_hat = lie::project_to_group(fs.group(), x_hat.matrix())?;
    let info = UpdateInfo { gain_norm: g.l.norm(), innovation: z };
    Ok((FilterState { x_hat, p: g.p_plus, t: fs.t }, info))
}

/// `V(P, ξ) = ξᵀP⁻¹ξ`.
pub fn lyapunov_value(p: &DMatrix<f64>, xi: &TangentVector) -> Result<f64> {
    let chol = p.clone().cholesky().ok_or(Error::SingularCovariance)?;
    let v = xi.vector();
    Ok(v.dot(&chol.solve(v)))
}

/// A ready-to-run invariant filter bundling dynamics, side, noise and state.
pub struct InvariantEkf<D: Dynamics> {
    pub dynamics: D,
    pub side: ErrorSide,
    pub noise: NoiseSchedule,
    pub joseph: bool,
    pub state: FilterState,
}

impl<D: Dynamics> InvariantEkf<D> {
    pub fn new(dynamics: D, side: ErrorSide, noise: NoiseSchedule, state: FilterState) -> Self {
        Self { dynamics, side, noise, joseph: false, state }
    }

    /// Propagates over `dt` with the input held at `u`.
    pub fn propagate(&mut self, u: &D::Input, dt: f64) -> Result<()> {
        self.state = propagate(&self.state, &self.dynamics, self.side, &self.noise, |_| u.clone(), dt, dt)?;
        Ok(())
    }

    pub fn update(&mut self, obs: &ObservationModel, ys: &[DVector<f64>]) -> Result<UpdateInfo> {
        if obs.side() != self.side {
            return Err(Error::InvalidArgument("observation side does not match the filter side".into()));
        }
        let (state, info) = update(&self.state, obs, ys, self.joseph)?;
        self.state = state;
        Ok(info)
    }
}
