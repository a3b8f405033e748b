// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Kite curves: where the footpoint tangent planes of a conflict point meet,
//! and the Gauss image of the conflict set lifted to space-time.

use alloc::vec;
use alloc::vec::Vec;

use crate::conflict::{ConflictBranch, ConflictPoint};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetric_eigen, Matrix};

/// Tangent planes whose linear system is worse conditioned than this do not
/// meet in a well-defined point.
pub const MAX_CONDITION: f64 = 1e8;

/// Intersection of the tangent planes at the footpoints of one conflict point.
#[derive(Debug, Clone, PartialEq)]
pub struct KitePoint {
    pub y: Vec<f64>,
    /// Condition number of the linear system.
    pub condition: f64,
    pub source: ConflictPoint,
}

/// Solves `<x - y, xi_i> = t` for `y`; needs as many footpoints as ambient
/// dimensions.
pub fn kite_point(cp: &ConflictPoint) -> Result<KitePoint> {
    let n = cp.x.len();
    if cp.conormals.len() != n {
        return Err(Error::Invalid("kite points need exactly n footpoints".into()));
    }
    let t = cp.t.abs();
    let rows: Vec<&[f64]> = cp.conormals.iter().map(|v| v.as_slice()).collect();
    let a = Matrix::from_rows(&rows);
    let svd = a.svd();
    let condition = svd.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateKite { condition });
    }
    let rhs: Vec<f64> = cp.conormals.iter().map(|xi| dot(&cp.x, xi) - t).collect();
    let y = svd.solve(&rhs, 0.0);
    Ok(KitePoint { y, condition, source: cp.clone() })
}

/// Largest `|<x - y, xi_i> - t|` of a kite point.
pub fn kite_residual(k: &KitePoint) -> f64 {
    let t = k.source.t.abs();
    k.source
        .conormals
        .iter()
        .map(|xi| {
            let d: Vec<f64> = k.source.x.iter().zip(&k.y).map(|(a, b)| a - b).collect();
            (dot(&d, xi) - t).abs()
        })
        .fold(0.0, f64::max)
}

/// Kite point per vertex; degenerate vertices are gaps (`None`).
pub fn kite_curve(branch: &ConflictBranch) -> Vec<Option<KitePoint>> {
    branch.points.iter().map(|cp| kite_point(cp).ok()).collect()
}

/// Largest distance of the points to their principal-axis line.
pub fn collinearity_residual(points: &[Vec<f64>]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let n = points[0].len();
    let m = points.len() as f64;
    let mut mean = vec![0.0; n];
    for p in points {
        for (a, b) in mean.iter_mut().zip(p) {
            *a += b / m;
        }
    }
    let mut cov = Matrix::zeros(n, n);
    for p in points {
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] += (p[i] - mean[i]) * (p[j] - mean[j]);
            }
        }
    }
    let (_, vecs) = symmetric_eigen(&cov);
    let dir = vecs.column(n - 1);
    points
        .iter()
        .map(|p| {
            let d: Vec<f64> = p.iter().zip(&mean).map(|(a, b)| a - b).collect();
            let along = dot(&d, &dir);
            let perp: Vec<f64> = d.iter().zip(&dir).map(|(a, b)| a - along * b).collect();
            norm(&perp)
        })
        .fold(0.0, f64::max)
}

/// A point `(v, mu)` of the cotangent bundle of the unit sphere: `|v| = 1`,
/// `<v, mu> = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    pub v: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Gauss image of a lifted conflict point. The lift is `xbar = (t, x)` with
/// covectors `(-1, xi_i)`, summed over the surfaces.
pub fn gauss_image_of_lift_point(cp: &ConflictPoint) -> Result<SpherePoint> {
    let mut xbar = vec![cp.t];
    xbar.extend_from_slice(&cp.x);
    let mut eta = vec![0.0; xbar.len()];
    for xi in &cp.conormals {
        eta[0] -= 1.0;
        for (e, c) in eta[1..].iter_mut().zip(xi) {
            *e += c;
        }
    }
    sphere_point(&xbar, &eta)
}

/// `v = eta/|eta|`, `mu = x - <x, eta> eta / |eta|^2`.
pub fn sphere_point(x: &[f64], eta: &[f64]) -> Result<SpherePoint> {
    let len = norm(eta);
    if !(len > 0.0) {
        return Err(Error::DegenerateCovector);
    }
    let v: Vec<f64> = eta.iter().map(|e| e / len).collect();
    let proj = dot(x, &v);
    let mu = x.iter().zip(&v).map(|(a, b)| a - proj * b).collect();
    Ok(SpherePoint { v, mu })
}

/// Gauss image along a branch; vertices with vanishing covector sum are gaps.
pub fn gauss_image_of_lift(branch: &ConflictBranch) -> Vec<Option<SpherePoint>> {
    branch.points.iter().map(|cp| gauss_image_of_lift_point(cp).ok()).collect()
}
