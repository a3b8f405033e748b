// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Fronts of polynomial generating families and their intersections.
//!
//! A family `G(s, x) = s^d + sum_j <a_j, x> s^j` defines the front
//! `{(x_0, x) : x_0 = G(s, x), dG/ds = 0}`. Intersecting `l` such fronts and
//! dropping `x_0` gives a model multi-germ; two cusp families
//! `s_1^3 + x_1 s_1 + x_2` and `s_2^3 + x_3 s_2 - x_2` meet along the
//! `A_2 A_2` surface.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::classify::{classify_germ_1d, multigerm_label, GermLabel, MultiGermLabel, MAX_ORDER};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::solver::{slice_surface, ContinuationSettings, NonlinearSystem, Slice, SliceResult};

/// `G(s, x) = s^degree + sum_j <linear[j], x> s^j`, `j < degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct VersalFamily {
    pub degree: usize,
    /// `linear[j]` is the coefficient vector of `s^j`.
    pub linear: Vec<Vec<f64>>,
}

impl VersalFamily {
    pub fn new(degree: usize, linear: Vec<Vec<f64>>) -> Result<Self> {
        if degree < 2 || linear.len() > degree {
            return Err(Error::Invalid(format!("bad family of degree {degree} with {} terms", linear.len())));
        }
        if linear.windows(2).any(|w| w[0].len() != w[1].len()) {
            return Err(Error::Invalid("coefficient vectors differ in length".into()));
        }
        Ok(VersalFamily { degree, linear })
    }

    fn coeff(&self, j: usize, x: &[f64]) -> f64 {
        self.linear.get(j).map_or(0.0, |a| dot(a, x))
    }

    /// `d^m G / ds^m`.
    pub fn ds(&self, m: usize, s: f64, x: &[f64]) -> f64 {
        let falling = |k: usize| ((k - m + 1)..=k).fold(1.0, |acc, j| acc * j as f64);
        let mut v = if m <= self.degree { falling(self.degree) * s.powi((self.degree - m) as i32) } else { 0.0 };
        for j in m..self.linear.len() {
            v += self.coeff(j, x) * falling(j) * s.powi((j - m) as i32);
        }
        v
    }

    pub fn value(&self, s: f64, x: &[f64]) -> f64 {
        self.ds(0, s, x)
    }

    /// `d^(m+1) G / ds^m dx`.
    fn ds_dx(&self, m: usize, s: f64, dim: usize) -> Vec<f64> {
        let falling = |k: usize| ((k - m + 1)..=k).fold(1.0, |acc, j| acc * j as f64);
        let mut g = vec![0.0; dim];
        for j in m..self.linear.len() {
            let w = falling(j) * s.powi((j - m) as i32);
            for (gi, ai) in g.iter_mut().zip(&self.linear[j]) {
                *gi += w * ai;
            }
        }
        g
    }

    /// Germ label of `s -> G(s, x)` (unit scale).
    pub fn germ(&self, s: f64, x: &[f64]) -> Result<GermLabel> {
        let d: Vec<f64> = (1..=MAX_ORDER).map(|m| self.ds(m, s, x)).collect();
        classify_germ_1d(&d, 1.0)
    }
}

/// Intersection of the fronts of several families sharing the base `x`.
/// Unknowns `[x_0, x_1 .. x_m, s_1 .. s_l]`; equations `x_0 - G_i = 0` and
/// `dG_i/ds_i = 0`. Footpoints are confined to `s_box`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontIntersection {
    pub families: Vec<VersalFamily>,
    pub base_dim: usize,
    pub s_box: (f64, f64),
}

impl FrontIntersection {
    pub fn new(families: Vec<VersalFamily>, base_dim: usize, s_box: (f64, f64)) -> Result<Self> {
        if families.is_empty() || families.iter().any(|f| f.linear.iter().any(|a| a.len() != base_dim)) {
            return Err(Error::Invalid("families must share the base dimension".into()));
        }
        Ok(FrontIntersection { families, base_dim, s_box })
    }

    /// The two cusp families meeting along the `A_2 A_2` surface in `R^3`.
    pub fn a2a2() -> Self {
        let g1 = VersalFamily::new(3, vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).expect("valid");
        let g2 = VersalFamily::new(3, vec![vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 1.0]]).expect("valid");
        FrontIntersection::new(vec![g1, g2], 3, (-1.0, 1.0)).expect("valid")
    }

    pub fn pack(&self, x0: f64, x: &[f64], s: &[f64]) -> Vec<f64> {
        let mut u = vec![x0];
        u.extend_from_slice(x);
        u.extend_from_slice(s);
        u
    }

    /// `(x_0, x, s)`.
    pub fn unpack<'u>(&self, u: &'u [f64]) -> (f64, &'u [f64], &'u [f64]) {
        (u[0], &u[1..1 + self.base_dim], &u[1 + self.base_dim..])
    }

    /// Projection of a solution to the base, dropping `x_0`.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        self.unpack(u).1.to_vec()
    }

    /// Traces the slices `x[axis] = value` of a two-dimensional intersection.
    /// Seeds start at `x = 0` on a `density`-per-axis grid of footpoints.
    pub fn trace_slices(
        &self,
        axis: usize,
        values: &[f64],
        density: usize,
        settings: &ContinuationSettings,
    ) -> Result<SliceResult> {
        if axis >= self.base_dim || density < 2 {
            return Err(Error::Invalid(format!("bad slice axis {axis} or density {density}")));
        }
        let l = self.families.len();
        let (lo, hi) = self.s_box;
        let total = density.pow(l as u32);
        let seeds: Vec<Vec<f64>> = (0..total)
            .map(|idx| {
                let mut rest = idx;
                let s: Vec<f64> = (0..l)
                    .map(|_| {
                        let k = rest % density;
                        rest /= density;
                        lo + (hi - lo) * (k as f64 + 0.5) / density as f64
                    })
                    .collect();
                self.pack(0.0, &vec![0.0; self.base_dim], &s)
            })
            .collect();
        let slices: Vec<Slice> = values
            .iter()
            .map(|&v| {
                let mut normal = vec![0.0; self.unknown_dim()];
                normal[1 + axis] = 1.0;
                Slice { normal, offset: v }
            })
            .collect();
        slice_surface(self, &slices, &seeds, settings)
    }

    /// Germ labels at a solution, combined.
    pub fn multigerm(&self, u: &[f64]) -> Result<MultiGermLabel> {
        let (_, x, s) = self.unpack(u);
        let labels = self.families.iter().zip(s).map(|(f, &si)| f.germ(si, x)).collect::<Result<Vec<_>>>()?;
        Ok(multigerm_label(&labels, self.base_dim))
    }
}

impl NonlinearSystem for FrontIntersection {
    fn unknown_dim(&self) -> usize {
        1 + self.base_dim + self.families.len()
    }

    fn equation_dim(&self) -> usize {
        2 * self.families.len()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (x0, x, s) = self.unpack(u);
        let l = self.families.len();
        let mut r = vec![0.0; 2 * l];
        for (i, f) in self.families.iter().enumerate() {
            r[i] = x0 - f.value(s[i], x);
            r[l + i] = f.ds(1, s[i], x);
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let (_, x, s) = self.unpack(u);
        let l = self.families.len();
        let m = self.base_dim;
        let mut j = Matrix::zeros(2 * l, self.unknown_dim());
        for (i, f) in self.families.iter().enumerate() {
            j[(i, 0)] = 1.0;
            for (k, d) in f.ds_dx(0, s[i], m).into_iter().enumerate() {
                j[(i, 1 + k)] = -d;
            }
            j[(i, 1 + m + i)] = -f.ds(1, s[i], x);
            for (k, d) in f.ds_dx(1, s[i], m).into_iter().enumerate() {
                j[(l + i, 1 + k)] = d;
            }
            j[(l + i, 1 + m + i)] = f.ds(2, s[i], x);
        }
        Ok(j)
    }

    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        let (_, _, s) = self.unpack(u);
        s.iter().flat_map(|&v| [v - self.s_box.0, self.s_box.1 - v]).collect()
    }

    fn constraint_gradients(&self, _u: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.unknown_dim();
        let off = 1 + self.base_dim;
        (0..self.families.len())
            .flat_map(|i| {
                let mut a = vec![0.0; dim];
                a[off + i] = 1.0;
                let mut b = vec![0.0; dim];
                b[off + i] = -1.0;
                [a, b]
            })
            .collect()
    }
}
