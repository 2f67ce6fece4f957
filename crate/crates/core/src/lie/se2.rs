//! SE(2) kernels. Tangent ordering is (θ, u₁, u₂).

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use super::coeffs::{half_cot_half, one_minus_cos_over_sq, sinc};
use super::{LieError, BRANCH_MARGIN};

/// Planar rotation matrix R(θ).
pub fn rot(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// J₂, the 90° rotation generator.
pub fn j2() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// Left Jacobian V(θ) = sin θ/θ·I + (1−cos θ)/θ·J₂, mapping u to the
/// translation of exp((θ, u)).
pub fn left_jacobian(theta: f64) -> Matrix2<f64> {
    Matrix2::identity() * sinc(theta) + j2() * (theta * one_minus_cos_over_sq(theta))
}

/// V(θ)⁻¹ = (θ/2)·cot(θ/2)·I − (θ/2)·J₂.
pub fn left_jacobian_inv(theta: f64) -> Matrix2<f64> {
    Matrix2::identity() * half_cot_half(theta) - j2() * (0.5 * theta)
}

pub fn exp(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta = v[0];
    let x = left_jacobian(theta) * Vector2::new(v[1], v[2]);
    compose(theta, &x)
}

pub fn log(m: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let theta = m[(1, 0)].atan2(m[(0, 0)]);
    if theta.abs() >= std::f64::consts::PI - BRANCH_MARGIN {
        return Err(LieError::BranchCut { angle: theta });
    }
    let u = left_jacobian_inv(theta) * Vector2::new(m[(0, 2)], m[(1, 2)]);
    Ok(Vector3::new(theta, u[0], u[1]))
}

pub fn compose(theta: f64, x: &Vector2<f64>) -> Matrix3<f64> {
    let r = rot(theta);
    Matrix3::new(r[(0, 0)], r[(0, 1)], x[0], r[(1, 0)], r[(1, 1)], x[1], 0.0, 0.0, 1.0)
}

/// Nearest rotation (Frobenius) to an arbitrary 2×2 block.
pub fn nearest_rotation(b: &Matrix2<f64>) -> Matrix2<f64> {
    rot((b[(1, 0)] - b[(0, 1)]).atan2(b[(0, 0)] + b[(1, 1)]))
}
