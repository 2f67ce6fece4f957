//! Trigonometric coefficient functions shared by the closed-form
//! exponentials and logarithms. Each switches to a 4th-order Taylor
//! expansion below [`TAYLOR_EPS`]. The two coefficients whose direct
//! formulas cancel catastrophically (θ − sin θ, and 1/θ² − cot(θ/2)/(2θ))
//! switch earlier, below [`CANCELLATION_EPS`], where the dropped θ⁶ term is
//! still under 1e-17.

use super::TAYLOR_EPS;

pub(crate) const CANCELLATION_EPS: f64 = 1e-2;

/// sin(θ)/θ
pub(crate) fn sinc(theta: f64) -> f64 {
    if theta.abs() < TAYLOR_EPS {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// (1 − cos θ)/θ²
pub(crate) fn one_minus_cos_over_sq(theta: f64) -> f64 {
    if theta.abs() < TAYLOR_EPS {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        let h = (0.5 * theta).sin();
        2.0 * h * h / (theta * theta)
    }
}

/// (θ − sin θ)/θ³
pub(crate) fn theta_minus_sin_over_cube(theta: f64) -> f64 {
    if theta.abs() < CANCELLATION_EPS {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// (θ/2)·cot(θ/2), the scalar part of the inverse SE(2) left Jacobian.
pub(crate) fn half_cot_half(theta: f64) -> f64 {
    if theta.abs() < TAYLOR_EPS {
        let t2 = theta * theta;
        1.0 - t2 / 12.0 - t2 * t2 / 720.0
    } else {
        0.5 * theta / (0.5 * theta).tan()
    }
}

/// 1/θ² − cot(θ/2)/(2θ), the K² coefficient of the inverse SO(3) left Jacobian.
pub(crate) fn inv_jacobian_sq_coeff(theta: f64) -> f64 {
    if theta.abs() < CANCELLATION_EPS {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / (theta * theta) - 1.0 / (2.0 * theta * (0.5 * theta).tan())
    }
}
