//! Numerical checks of the Deyst–Price stability conditions for the
//! linearized error system `dξ/dt = A_t ξ`, `y_n = Hξ_{t_n}`, and the
//! `[H; HΦ]` rank test.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrate::{grid_time, rk4_step, step_count};

/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

/// `Φ` with `Φ(t₀) = I` and `dΦ/dt = A_t Φ`, integrated by RK4.
pub fn transition_matrix(
    a: impl Fn(f64) -> DMatrix<f64>,
    dim: usize,
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<DMatrix<f64>> {
    let steps = step_count(t0, t1, dt)?;
    let mut phi = DMatrix::identity(dim, dim);
    for k in 0..steps {
        phi = rk4_step(grid_time(t0, dt, k), &phi, dt, |s, p| a(s) * p);
    }
    Ok(phi)
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let top = sv.max();
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Rank of `[H; HΦ]`.
pub fn rank_h_hphi(h: &DMatrix<f64>, phi: &DMatrix<f64>) -> usize {
    let hphi = h * phi;
    let mut stacked = DMatrix::zeros(2 * h.nrows(), h.ncols());
    stacked.rows_mut(0, h.nrows()).copy_from(h);
    stacked.rows_mut(h.nrows(), h.nrows()).copy_from(&hphi);
    numerical_rank(&stacked)
}

/// Lower floors for conditions i–v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { delta1: 1e-8, delta2: 1e-8, delta3: 1e-8, alpha1: 1e-8, beta1: 1e-8 }
    }
}

/// The linearized system sampled on the filter's time grid. Updates happen
/// at `t0 + n·epoch_dt` for `n = 1..=epochs`.
pub struct LinearizedSystem<'a> {
    pub dim: usize,
    pub a: &'a dyn Fn(f64) -> DMatrix<f64>,
    pub q: &'a dyn Fn(f64) -> DMatrix<f64>,
    /// `H` at update epoch `n`.
    pub h: &'a dyn Fn(usize) -> DMatrix<f64>,
    /// `N̂` at update epoch `n`.
    pub n: &'a dyn Fn(usize) -> DMatrix<f64>,
    pub t0: f64,
    pub epoch_dt: f64,
    pub epochs: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub t0: f64,
    pub t1: f64,
    /// Extreme eigenvalues of `ΦᵀΦ` over one epoch (condition i).
    pub phi_eigen_bounds: (f64, f64),
    /// Smallest nonzero eigenvalue of `Q̂` on its column space (condition ii).
    pub q_floor: f64,
    /// Smallest eigenvalue of `N̂` (condition iii).
    pub n_floor: f64,
    /// `(α₁, α₂)`: extreme eigenvalues of the windowed reachability Gramian.
    pub gramian_bounds: (f64, f64),
    /// `(β₁, β₂)`: extreme eigenvalues of the windowed observability sum.
    pub obs_bounds: (f64, f64),
    /// Rank of `[H; HΦ]` over the first epoch.
    pub rank_h_hphi: usize,
    pub conditions_met: [bool; 5],
}

impl WindowReport {
    pub fn all_met(&self) -> bool {
        self.conditions_met.iter().all(|&c| c)
    }
}

fn eig_bounds(m: &DMatrix<f64>) -> (f64, f64) {
    let e = ((m + m.transpose()) * 0.5).symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

/// Smallest eigenvalue of the symmetric `q` among those that are not
/// numerically zero; 0 when `q` vanishes.
fn column_space_floor(q: &DMatrix<f64>) -> f64 {
    let e = ((q + q.transpose()) * 0.5).symmetric_eigen().eigenvalues;
    let top = e.amax();
    if top == 0.0 {
        return 0.0;
    }
    e.iter().copied().filter(|&v| v.abs() > 1e-12 * top).fold(f64::INFINITY, f64::min)
}

/// Evaluates conditions i–v over every window of `window` consecutive
/// epochs and reports the worst bounds.
///
/// The reachability Gramian `∫Φ(s→t_n) Q̂_s Φ(s→t_n)ᵀ ds` uses trapezoidal
/// accumulation on the RK4 grid. The observability sum weights each
/// measurement by the backward transition from the window end, so it is the
/// information the window carries about `ξ_{t_n}`.
pub fn check_deyst_price(sys: &LinearizedSystem<'_>, window: usize, thresholds: &Thresholds) -> Result<WindowReport> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    if sys.epochs < window {
        return Err(Error::InvalidArgument(format!("{} epochs cannot fill a window of {window}", sys.epochs)));
    }
    let dim = sys.dim;
    let sub = step_count(0.0, sys.epoch_dt, sys.dt)?;

    // Per-epoch transition and reachability contribution.
    let mut phis = Vec::with_capacity(sys.epochs);
    let mut reach = Vec::with_capacity(sys.epochs);
    let mut phi_min = f64::INFINITY;
    let mut phi_max: f64 = 0.0;
    let mut q_floor = f64::INFINITY;
    for k in 0..sys.epochs {
        let tk = grid_time(sys.t0, sys.epoch_dt, k);
        // Φ(t_k → s) on the grid, then Φ(s → t_{k+1}) = Φ_k Φ(t_k → s)⁻¹.
        let mut partial = vec![DMatrix::<f64>::identity(dim, dim)];
        for j in 0..sub {
            let s = tk + j as f64 * sys.dt;
            let next = rk4_step(s, &partial[j], sys.dt, |t, p| (sys.a)(t) * p);
            partial.push(next);
        }
        let phi = partial[sub].clone();
        let mut g = DMatrix::zeros(dim, dim);
        for (j, pj) in partial.iter().enumerate() {
            let s = tk + j as f64 * sys.dt;
            let q = (sys.q)(s);
            q_floor = q_floor.min(column_space_floor(&q));
            let back =
                pj.clone().try_inverse().ok_or_else(|| Error::NumericalFailure("singular transition matrix".into()))?;
            let to_end = &phi * back;
            let w = if j == 0 || j == sub { 0.5 } else { 1.0 };
            g += &to_end * q * to_end.transpose() * (w * sys.dt);
        }
        let (lo, hi) = eig_bounds(&(phi.transpose() * &phi));
        phi_min = phi_min.min(lo);
        phi_max = phi_max.max(hi);
        phis.push(phi);
        reach.push(g);
    }

    let mut n_floor = f64::INFINITY;
    let mut info = Vec::with_capacity(sys.epochs);
    for n in 1..=sys.epochs {
        let nn = (sys.n)(n);
        n_floor = n_floor.min(eig_bounds(&nn).0);
        let h = (sys.h)(n);
        let n_inv =
            nn.try_inverse().ok_or_else(|| Error::NumericalFailure("singular measurement covariance".into()))?;
        info.push(h.transpose() * n_inv * h);
    }

    let mut alpha = (f64::INFINITY, 0.0f64);
    let mut beta = (f64::INFINITY, 0.0f64);
    for end in window..=sys.epochs {
        let start = end - window;
        // Walk backwards from the window end, carrying Φ(t_{k+1} → t_end).
        let mut fwd = DMatrix::<f64>::identity(dim, dim);
        let mut gram = DMatrix::zeros(dim, dim);
        let mut obs = DMatrix::zeros(dim, dim);
        for k in (start..end).rev() {
            gram += &fwd * &reach[k] * fwd.transpose();
            let back = fwd
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::NumericalFailure("singular transition matrix".into()))?;
            obs += back.transpose() * &info[k] * &back;
            fwd = &fwd * &phis[k];
        }
        let (glo, ghi) = eig_bounds(&gram);
        let (olo, ohi) = eig_bounds(&obs);
        alpha = (alpha.0.min(glo), alpha.1.max(ghi));
        beta = (beta.0.min(olo), beta.1.max(ohi));
    }

    let rank = rank_h_hphi(&(sys.h)(1), &phis[0]);
    if !q_floor.is_finite() {
        q_floor = 0.0;
    }
    let conditions_met = [
        phi_min >= thresholds.delta1 && phi_max.is_finite(),
        q_floor >= thresholds.delta2,
        n_floor >= thresholds.delta3,
        alpha.0 >= thresholds.alpha1 && alpha.1.is_finite(),
        beta.0 >= thresholds.beta1 && beta.1.is_finite(),
    ];
    Ok(WindowReport {
        t0: sys.t0,
        t1: grid_time(sys.t0, sys.epoch_dt, sys.epochs),
        phi_eigen_bounds: (phi_min, phi_max),
        q_floor,
        n_floor,
        gramian_bounds: alpha,
        obs_bounds: beta,
        rank_h_hphi: rank,
        conditions_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_system_meets_everything() {
        let a = |_: f64| DMatrix::<f64>::zeros(3, 3);
        let q = |_: f64| DMatrix::<f64>::identity(3, 3);
        let h = |_: usize| DMatrix::<f64>::identity(3, 3);
        let sys = LinearizedSystem { dim: 3, a: &a, q: &q, h: &h, n: &h, t0: 0.0, epoch_dt: 0.5, epochs: 4, dt: 0.01 };
        let report = check_deyst_price(&sys, 1, &Thresholds::default()).unwrap();
        assert!(report.all_met());
        assert!((report.gramian_bounds.0 - 0.5).abs() < 1e-12);
        assert!((report.gramian_bounds.1 - 0.5).abs() < 1e-12);
        assert!((report.obs_bounds.0 - 1.0).abs() < 1e-12);
        assert!((report.obs_bounds.1 - 1.0).abs() < 1e-12);
        assert_eq!(report.rank_h_hphi, 3);
        assert!(check_deyst_price(&sys, 0, &Thresholds::default()).is_err());
    }

    #[test]
    fn transition_of_zero_span_is_identity() {
        let phi = transition_matrix(|_| DMatrix::from_element(2, 2, 1.0), 2, 3.0, 3.0, 0.1).unwrap();
        assert_eq!(phi, DMatrix::identity(2, 2));
    }
}
