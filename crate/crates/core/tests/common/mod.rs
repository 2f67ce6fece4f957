#![allow(dead_code)]

use iekf::lie::{self, GroupElement, GroupId, TangentVector};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Truncated power series `Σ Mᵏ/k!`, the reference matrix exponential.
pub fn series_exp(m: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..terms {
        term = &term * m / k as f64;
        sum += &term;
    }
    sum
}

/// `expm` by scaling and squaring on top of the series.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = m.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let mut e = series_exp(&(m / 2f64.powi(s)), 30);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

pub fn tangent(group: GroupId, v: Vec<f64>) -> TangentVector {
    TangentVector::new(group, DVector::from_vec(v)).unwrap()
}

pub fn element(group: GroupId, v: Vec<f64>) -> GroupElement {
    lie::exp(&tangent(group, v))
}

/// Coordinates in `[-r, r]` for a vector of the group's algebra dimension.
pub fn coords(group: GroupId, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, group.algebra_dim())
}

/// Coordinates with the rotation part scaled to norm at most `max_angle`.
pub fn coords_with_angle(group: GroupId, max_angle: f64, r: f64) -> impl Strategy<Value = Vec<f64>> {
    (coords(group, r), 0.0..max_angle).prop_map(move |(mut v, angle)| {
        let k = match group {
            GroupId::Se2 => 1,
            GroupId::So3 | GroupId::Se23 => 3,
            GroupId::Translation(_) => 0,
        };
        let n: f64 = v[..k].iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            for x in &mut v[..k] {
                *x *= angle / n;
            }
        }
        v
    })
}

pub const GROUPS: [GroupId; 4] = [GroupId::Se2, GroupId::So3, GroupId::Se23, GroupId::Translation(3)];

/// Central-difference Jacobian of `f` at `x`.
pub fn jacobian(x: &DVector<f64>, h: f64, mut f: impl FnMut(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
    let m = f(x).len();
    let mut j = DMatrix::zeros(m, x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        j.set_column(i, &((f(&xp) - f(&xm)) / (2.0 * h)));
    }
    j
}
