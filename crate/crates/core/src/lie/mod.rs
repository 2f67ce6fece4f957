//! Matrix Lie group kernels for SE(2), SO(3), SE₂(3) and the abelian
//! translation groups ℝⁿ (as homogeneous matrices).
//!
//! Elements are stored as dense `N×N` matrices tagged with their
//! [`GroupId`]; tangent vectors as `dim 𝔤` coordinate vectors. All maps are
//! closed form, no matrix exponentiation happens at run time.
//!
//! Tangent orderings:
//! - SE(2): (θ, u₁, u₂)
//! - SO(3): (ξ₁, ξ₂, ξ₃)
//! - SE₂(3): (rotation ξ, velocity u, position y)
//! - ℝⁿ: the translation itself

mod coeffs;
pub mod se2;
pub mod so3;

use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};
use thiserror::Error;

/// Group-membership tolerance for rotation orthonormality and structural rows.
pub const GROUP_TOL: f64 = 1e-9;
/// Rotation magnitude below which trigonometric coefficients use Taylor series.
pub const TAYLOR_EPS: f64 = 1e-7;
/// The logarithm refuses rotations with angle ≥ π − `BRANCH_MARGIN`.
pub const BRANCH_MARGIN: f64 = 1e-6;
/// Largest Frobenius distance from the orthogonal matrices that
/// [`project_to_group`] will repair.
pub const PROJECTION_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("matrix is not in the Lie algebra of {group} (residual {residual:e})")]
    NotInAlgebra { group: GroupId, residual: f64 },
    #[error("matrix is not an element of {group} (residual {residual:e})")]
    NotInGroup { group: GroupId, residual: f64 },
    #[error("rotation angle {angle} rad is at or beyond the logarithm branch cut")]
    BranchCut { angle: f64 },
    #[error("rotation block is {distance:e} away from the orthogonal group, cannot project")]
    ProjectionFailure { distance: f64 },
    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(GroupId, GroupId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupId {
    Se2,
    So3,
    Se23,
    /// ℝⁿ under addition, embedded as `(n+1)×(n+1)` homogeneous matrices.
    Translation(usize),
}

impl GroupId {
    pub fn matrix_size(self) -> usize {
        match self {
            GroupId::Se2 | GroupId::So3 => 3,
            GroupId::Se23 => 5,
            GroupId::Translation(n) => n + 1,
        }
    }

    pub fn algebra_dim(self) -> usize {
        match self {
            GroupId::Se2 | GroupId::So3 => 3,
            GroupId::Se23 => 9,
            GroupId::Translation(n) => n,
        }
    }

    /// Size of the rotation block in the top-left corner (0 for ℝⁿ).
    pub fn rotation_size(self) -> usize {
        match self {
            GroupId::Se2 => 2,
            GroupId::So3 | GroupId::Se23 => 3,
            GroupId::Translation(_) => 0,
        }
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupId::Se2 => write!(f, "SE(2)"),
            GroupId::So3 => write!(f, "SO(3)"),
            GroupId::Se23 => write!(f, "SE_2(3)"),
            GroupId::Translation(n) => write!(f, "R^{n}"),
        }
    }
}

/// Coordinates of a Lie-algebra element.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    group: GroupId,
    v: DVector<f64>,
}

impl TangentVector {
    pub fn new(group: GroupId, v: DVector<f64>) -> Result<Self, LieError> {
        check_len("tangent vector", group.algebra_dim(), v.len())?;
        Ok(Self { group, v })
    }

    pub fn from_slice(group: GroupId, v: &[f64]) -> Result<Self, LieError> {
        Self::new(group, DVector::from_column_slice(v))
    }

    pub fn zeros(group: GroupId) -> Self {
        Self { group, v: DVector::zeros(group.algebra_dim()) }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.v
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    /// Magnitude of the rotational part (the quantity the branch cut applies to).
    pub fn rotation_norm(&self) -> f64 {
        match self.group {
            GroupId::Se2 => self.v[0].abs(),
            GroupId::So3 | GroupId::Se23 => self.v.rows(0, 3).norm(),
            GroupId::Translation(_) => 0.0,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { group: self.group, v: &self.v * s }
    }
}

/// A matrix in the span of the algebra basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraMatrix {
    group: GroupId,
    m: DMatrix<f64>,
}

impl AlgebraMatrix {
    /// Wraps a raw matrix; membership is checked by [`vee`].
    pub fn new(group: GroupId, m: DMatrix<f64>) -> Result<Self, LieError> {
        let n = group.matrix_size();
        if m.nrows() != n || m.ncols() != n {
            return Err(LieError::DimensionMismatch { what: "algebra matrix", expected: n, got: m.nrows() });
        }
        Ok(Self { group, m })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }
}

/// An element of one of the supported matrix Lie groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    group: GroupId,
    m: DMatrix<f64>,
}

impl GroupElement {
    /// Validates `m` against the group's constraints at [`GROUP_TOL`].
    pub fn new(group: GroupId, m: DMatrix<f64>) -> Result<Self, LieError> {
        let n = group.matrix_size();
        if m.nrows() != n || m.ncols() != n {
            return Err(LieError::DimensionMismatch { what: "group element", expected: n, got: m.nrows() });
        }
        let residual = membership_residual(group, &m);
        if residual > GROUP_TOL {
            return Err(LieError::NotInGroup { group, residual });
        }
        Ok(Self { group, m })
    }

    pub fn identity(group: GroupId) -> Self {
        let n = group.matrix_size();
        Self { group, m: DMatrix::identity(n, n) }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Closed-form inverse using the block structure.
    pub fn inverse(&self) -> Self {
        let k = self.group.rotation_size();
        let n = self.group.matrix_size();
        let mut inv = DMatrix::identity(n, n);
        let rt = self.m.view((0, 0), (k, k)).transpose();
        inv.view_mut((0, 0), (k, k)).copy_from(&rt);
        match self.group {
            GroupId::So3 => {}
            GroupId::Translation(t) => {
                let x = self.m.view((0, t), (t, 1));
                inv.view_mut((0, t), (t, 1)).copy_from(&(-x));
            }
            _ => {
                let cols = n - k;
                let neg = -(&rt * self.m.view((0, k), (k, cols)));
                inv.view_mut((0, k), (k, cols)).copy_from(&neg);
            }
        }
        Self { group: self.group, m: inv }
    }

    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, LieError> {
        same_group(self.group, other.group)?;
        Ok(Self { group: self.group, m: &self.m * &other.m })
    }

    /// Rotation block (empty for translation groups).
    pub fn rotation(&self) -> DMatrix<f64> {
        let k = self.group.rotation_size();
        self.m.view((0, 0), (k, k)).into_owned()
    }

    /// Distance from satisfying the group constraints.
    pub fn membership_residual(&self) -> f64 {
        membership_residual(self.group, &self.m)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;

    /// Panics on group mismatch; use [`GroupElement::compose`] to get an error instead.
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        self.compose(rhs).expect("group mismatch in product")
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), LieError> {
    if expected != got {
        return Err(LieError::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

pub(crate) fn same_group(a: GroupId, b: GroupId) -> Result<(), LieError> {
    if a != b {
        return Err(LieError::GroupMismatch(a, b));
    }
    Ok(())
}

fn v3(v: &DVector<f64>, start: usize) -> Vector3<f64> {
    Vector3::new(v[start], v[start + 1], v[start + 2])
}

fn m3(m: &DMatrix<f64>, r: usize, c: usize) -> Matrix3<f64> {
    m.fixed_view::<3, 3>(r, c).into_owned()
}

fn col3(m: &DMatrix<f64>, c: usize) -> Vector3<f64> {
    Vector3::new(m[(0, c)], m[(1, c)], m[(2, c)])
}

fn membership_residual(group: GroupId, m: &DMatrix<f64>) -> f64 {
    let n = group.matrix_size();
    let k = group.rotation_size();
    let mut res: f64 = 0.0;
    if k > 0 {
        let r = m.view((0, 0), (k, k));
        let ortho = (r.transpose() * r - DMatrix::<f64>::identity(k, k)).norm();
        res = res.max(ortho);
        if r.determinant() <= 0.0 {
            res = res.max(1.0);
        }
    }
    // Structural rows below the rotation block must match the identity.
    let top = match group {
        GroupId::Translation(t) => t,
        _ => k,
    };
    for i in top..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            res = res.max((m[(i, j)] - target).abs());
        }
    }
    res
}

/// Raw hat map on coordinates; `v` must have length `dim 𝔤`.
pub(crate) fn hat_raw(group: GroupId, v: &DVector<f64>) -> DMatrix<f64> {
    let n = group.matrix_size();
    let mut m = DMatrix::zeros(n, n);
    match group {
        GroupId::Se2 => {
            m[(0, 1)] = -v[0];
            m[(1, 0)] = v[0];
            m[(0, 2)] = v[1];
            m[(1, 2)] = v[2];
        }
        GroupId::So3 => {
            m.copy_from(&so3::skew(&v3(v, 0)));
        }
        GroupId::Se23 => {
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&so3::skew(&v3(v, 0)));
            for i in 0..3 {
                m[(i, 3)] = v[3 + i];
                m[(i, 4)] = v[6 + i];
            }
        }
        GroupId::Translation(t) => {
            for i in 0..t {
                m[(i, t)] = v[i];
            }
        }
    }
    m
}

/// Least-squares coordinates of `m`, without checking algebra membership.
pub(crate) fn vee_raw(group: GroupId, m: &DMatrix<f64>) -> DVector<f64> {
    match group {
        GroupId::Se2 => DVector::from_vec(vec![0.5 * (m[(1, 0)] - m[(0, 1)]), m[(0, 2)], m[(1, 2)]]),
        GroupId::So3 => {
            let a = m3(m, 0, 0);
            DVector::from_column_slice(so3::unskew(&(0.5 * (a - a.transpose()))).as_slice())
        }
        GroupId::Se23 => {
            let a = m3(m, 0, 0);
            let w = so3::unskew(&(0.5 * (a - a.transpose())));
            let mut out = DVector::zeros(9);
            for i in 0..3 {
                out[i] = w[i];
                out[3 + i] = m[(i, 3)];
                out[6 + i] = m[(i, 4)];
            }
            out
        }
        GroupId::Translation(t) => DVector::from_fn(t, |i, _| m[(i, t)]),
    }
}

pub fn hat(v: &TangentVector) -> AlgebraMatrix {
    AlgebraMatrix { group: v.group, m: hat_raw(v.group, &v.v) }
}

pub fn vee(m: &AlgebraMatrix) -> Result<TangentVector, LieError> {
    let v = vee_raw(m.group, &m.m);
    let residual = (hat_raw(m.group, &v) - &m.m).norm();
    if residual > GROUP_TOL * m.m.norm().max(1.0) {
        return Err(LieError::NotInAlgebra { group: m.group, residual });
    }
    Ok(TangentVector { group: m.group, v })
}

/// Closed-form group exponential `exp_m(hat(v))`.
pub fn exp(v: &TangentVector) -> GroupElement {
    let group = v.group;
    let m = match group {
        GroupId::Se2 => {
            let e = se2::exp(&Vector3::new(v.v[0], v.v[1], v.v[2]));
            DMatrix::from_column_slice(3, 3, e.as_slice())
        }
        GroupId::So3 => {
            let e = so3::exp(&v3(&v.v, 0));
            DMatrix::from_column_slice(3, 3, e.as_slice())
        }
        GroupId::Se23 => {
            let w = v3(&v.v, 0);
            let jl = so3::left_jacobian(&w);
            let mut m = DMatrix::identity(5, 5);
            m.fixed_view_mut::<3, 3>(0, 0).copy_from(&so3::exp(&w));
            m.fixed_view_mut::<3, 1>(0, 3).copy_from(&(jl * v3(&v.v, 3)));
            m.fixed_view_mut::<3, 1>(0, 4).copy_from(&(jl * v3(&v.v, 6)));
            m
        }
        GroupId::Translation(t) => {
            let mut m = DMatrix::identity(t + 1, t + 1);
            m.view_mut((0, t), (t, 1)).copy_from(&v.v);
            m
        }
    };
    GroupElement { group, m }
}

/// Principal logarithm. Fails with [`LieError::BranchCut`] when the
/// rotation angle reaches π − [`BRANCH_MARGIN`].
pub fn log(g: &GroupElement) -> Result<TangentVector, LieError> {
    let group = g.group;
    let v = match group {
        GroupId::Se2 => {
            let l = se2::log(&g.m.fixed_view::<3, 3>(0, 0).into_owned())?;
            DVector::from_column_slice(l.as_slice())
        }
        GroupId::So3 => {
            let l = so3::log(&m3(&g.m, 0, 0))?;
            DVector::from_column_slice(l.as_slice())
        }
        GroupId::Se23 => {
            let w = so3::log(&m3(&g.m, 0, 0))?;
            let jinv = so3::left_jacobian_inv(&w);
            let u = jinv * col3(&g.m, 3);
            let y = jinv * col3(&g.m, 4);
            DVector::from_iterator(9, w.iter().chain(u.iter()).chain(y.iter()).copied())
        }
        GroupId::Translation(t) => DVector::from_fn(t, |i, _| g.m[(i, t)]),
    };
    Ok(TangentVector { group, v })
}

/// `Ad_g`, defined by `g·hat(ξ)·g⁻¹ = hat(Ad_g ξ)`.
pub fn adjoint(g: &GroupElement) -> DMatrix<f64> {
    match g.group {
        GroupId::Se2 => {
            let mut a = DMatrix::zeros(3, 3);
            a[(0, 0)] = 1.0;
            a[(1, 0)] = g.m[(1, 2)];
            a[(2, 0)] = -g.m[(0, 2)];
            a.view_mut((1, 1), (2, 2)).copy_from(&g.m.view((0, 0), (2, 2)));
            a
        }
        GroupId::So3 => g.m.clone(),
        GroupId::Se23 => {
            let r = m3(&g.m, 0, 0);
            let mut a = DMatrix::zeros(9, 9);
            for b in 0..3 {
                a.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(&r);
            }
            a.fixed_view_mut::<3, 3>(3, 0).copy_from(&(so3::skew(&col3(&g.m, 3)) * r));
            a.fixed_view_mut::<3, 3>(6, 0).copy_from(&(so3::skew(&col3(&g.m, 4)) * r));
            a
        }
        GroupId::Translation(t) => DMatrix::identity(t, t),
    }
}

/// `ad_x`, defined by `[hat(x), hat(ξ)] = hat(ad_x ξ)`.
pub fn adjoint_alg(x: &TangentVector) -> DMatrix<f64> {
    let v = &x.v;
    match x.group {
        GroupId::Se2 => {
            let mut a = DMatrix::zeros(3, 3);
            a[(1, 0)] = v[2];
            a[(2, 0)] = -v[1];
            a[(1, 2)] = -v[0];
            a[(2, 1)] = v[0];
            a
        }
        GroupId::So3 => {
            let s = so3::skew(&v3(v, 0));
            DMatrix::from_column_slice(3, 3, s.as_slice())
        }
        GroupId::Se23 => {
            let w = so3::skew(&v3(v, 0));
            let mut a = DMatrix::zeros(9, 9);
            for b in 0..3 {
                a.fixed_view_mut::<3, 3>(3 * b, 3 * b).copy_from(&w);
            }
            a.fixed_view_mut::<3, 3>(3, 0).copy_from(&so3::skew(&v3(v, 3)));
            a.fixed_view_mut::<3, 3>(6, 0).copy_from(&so3::skew(&v3(v, 6)));
            a
        }
        GroupId::Translation(t) => DMatrix::zeros(t, t),
    }
}

/// Re-imposes the group structure on a matrix that drifted off the
/// manifold: the rotation block is replaced by its nearest rotation (polar
/// decomposition) and the structural rows are reset.
pub fn project_to_group(group: GroupId, m: &DMatrix<f64>) -> Result<GroupElement, LieError> {
    let n = group.matrix_size();
    if m.nrows() != n || m.ncols() != n {
        return Err(LieError::DimensionMismatch { what: "matrix to project", expected: n, got: m.nrows() });
    }
    let k = group.rotation_size();
    let mut out = m.clone();
    match k {
        2 => {
            let b: Matrix2<f64> = m.fixed_view::<2, 2>(0, 0).into_owned();
            let r = se2::nearest_rotation(&b);
            check_projection_distance((b - r).norm())?;
            out.fixed_view_mut::<2, 2>(0, 0).copy_from(&r);
        }
        3 => {
            let b = m3(m, 0, 0);
            let r = so3::nearest_rotation(&b);
            check_projection_distance((b - r).norm())?;
            out.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        }
        _ => {}
    }
    let top = match group {
        GroupId::Translation(t) => t,
        _ => k,
    };
    for i in top..n {
        for j in 0..n {
            out[(i, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    Ok(GroupElement { group, m: out })
}

fn check_projection_distance(distance: f64) -> Result<(), LieError> {
    if !(distance <= PROJECTION_LIMIT) {
        return Err(LieError::ProjectionFailure { distance });
    }
    Ok(())
}
