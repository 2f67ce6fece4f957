//! Fixed-step RK4 on anything that forms a vector space over `f64`.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};

pub fn rk4_step<T, F>(t: f64, y: &T, dt: f64, mut f: F) -> T
where
    T: Clone + Add<Output = T> + Mul<f64, Output = T>,
    F: FnMut(f64, &T) -> T,
{
    let half = 0.5 * dt;
    let k1 = f(t, y);
    let k2 = f(t + half, &(y.clone() + k1.clone() * half));
    let k3 = f(t + half, &(y.clone() + k2.clone() * half));
    let k4 = f(t + dt, &(y.clone() + k3.clone() * dt));
    y.clone() + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Two states integrated jointly, e.g. an estimate and its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair<A, B>(pub A, pub B);

impl<A: Add<Output = A>, B: Add<Output = B>> Add for Pair<A, B> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Pair(self.0 + rhs.0, self.1 + rhs.1)
    }
}

impl<A: Mul<f64, Output = A>, B: Mul<f64, Output = B>> Mul<f64> for Pair<A, B> {
    type Output = Self;

    fn mul(self, s: f64) -> Self {
        Pair(self.0 * s, self.1 * s)
    }
}

/// Number of `dt` steps spanning `[t0, t1]`. The span must be a whole
/// multiple of `dt` (to 1e-9 relative), so every grid point is hit exactly.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {dt}")));
    }
    let span = t1 - t0;
    if span < 0.0 || !span.is_finite() {
        return Err(Error::InvalidArgument(format!("invalid time span [{t0}, {t1}]")));
    }
    let n = (span / dt).round();
    if (n * dt - span).abs() > 1e-9 * span.max(dt) {
        return Err(Error::InvalidArgument(format!("span {span} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Grid time of step `k`, computed without accumulating roundoff.
pub fn grid_time(t0: f64, dt: f64, k: usize) -> f64 {
    t0 + k as f64 * dt
}
