// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Truncated Taylor series arithmetic, used to push jets of the embedding
//! through the travel-time formula without finite differences.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::math::factorial;

/// Coefficients `c_k` of `sum c_k tau^k`, truncated at a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<f64>);

impl Series {
    pub fn zeros(order: usize) -> Self {
        Series(vec![0.0; order + 1])
    }

    /// Series from derivative values `f^(k)(0)`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        Series(derivs.iter().enumerate().map(|(k, d)| d / factorial(k)).collect())
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// Derivative values `f^(k)(0)`.
    pub fn derivatives(&self) -> Vec<f64> {
        self.0.iter().enumerate().map(|(k, c)| c * factorial(k)).collect()
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.order().min(other.order());
        let mut out = Series::zeros(n);
        for k in 0..=n {
            out.0[k] = (0..=k).map(|j| self.0[j] * other.0[k - j]).sum();
        }
        out
    }

    /// Square root of a series with positive constant term, from `f^2 = g`.
    pub fn sqrt(&self) -> Option<Series> {
        let g = &self.0;
        if !(g[0] > 0.0) {
            return None;
        }
        let mut f = vec![0.0; g.len()];
        f[0] = g[0].sqrt();
        for k in 1..g.len() {
            let cross: f64 = (1..k).map(|j| f[j] * f[k - j]).sum();
            f[k] = (g[k] - cross) / (2.0 * f[0]);
        }
        Some(Series(f))
    }
}

/// Series of the quadratic form `d(tau)^T P d(tau)` for a vector series `d`
/// given as one coefficient vector per order.
pub fn quadratic_form_series(d: &[Vec<f64>], p: &crate::Matrix) -> Series {
    let order = d.len() - 1;
    let pd: Vec<Vec<f64>> = d.iter().map(|v| p.mul_vec(v)).collect();
    let mut out = Series::zeros(order);
    for k in 0..=order {
        out.0[k] = (0..=k).map(|j| crate::linalg::dot(&d[j], &pd[k - j])).sum();
    }
    out
}
