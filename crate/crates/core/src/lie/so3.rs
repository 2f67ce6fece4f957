//! SO(3) kernels on static 3×3 matrices.

use nalgebra::{Matrix3, Vector3};

use super::coeffs::{inv_jacobian_sq_coeff, one_minus_cos_over_sq, sinc, theta_minus_sin_over_cube};
use super::{LieError, BRANCH_MARGIN};

/// Cross-product matrix: `skew(w) * b == w.cross(&b)`.
pub fn skew(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues formula.
pub fn exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = skew(w);
    Matrix3::identity() + k * sinc(theta) + k * k * one_minus_cos_over_sq(theta)
}

/// Left Jacobian: `I + (1−cos θ)/θ² K + (θ−sin θ)/θ³ K²`.
pub fn left_jacobian(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = skew(w);
    Matrix3::identity() + k * one_minus_cos_over_sq(theta) + k * k * theta_minus_sin_over_cube(theta)
}

pub fn left_jacobian_inv(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = skew(w);
    Matrix3::identity() - k * 0.5 + k * k * inv_jacobian_sq_coeff(theta)
}

/// Rotation angle of `r` in [0, π], computed with atan2 for accuracy at
/// both ends of the range.
pub fn angle(r: &Matrix3<f64>) -> f64 {
    let s = 0.5 * unskew(&(r - r.transpose())).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

pub fn log(r: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let theta = angle(r);
    if theta >= std::f64::consts::PI - BRANCH_MARGIN {
        return Err(LieError::BranchCut { angle: theta });
    }
    let axis_sin = 0.5 * unskew(&(r - r.transpose()));
    Ok(axis_sin / sinc(theta))
}

/// Orthogonal polar factor of `b` with the determinant forced to +1.
pub fn nearest_rotation(b: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = b.svd(true, true);
    let (mut u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let r = u * vt;
    if r.determinant() >= 0.0 {
        return r;
    }
    u.column_mut(2).neg_mut();
    u * vt
}
