// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Surfaces, metrics and scenes.
//!
//! Every surface kind ships closed-form derivatives ("jets") up to
//! [`MAX_JET_ORDER`]; the classifier needs sixth derivatives of the time
//! function, which finite differences cannot deliver.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::error::{Error, Result};
use crate::linalg::{self, cross, dot, norm, Matrix};
use crate::math::{binomial, wrap};
use crate::solver::ContinuationSettings;

/// Highest derivative order any surface kind can supply.
pub const MAX_JET_ORDER: usize = 6;

/// Samples per parameter axis for the immersion check at construction time.
const VALIDATION_SAMPLES: usize = 24;

/// Built-in embedding families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    /// `[px, py, dx, dy]`: `p + s d` in the plane.
    Line,
    /// `[cx, cy, r]`: `c + r (cos s, sin s)`.
    Circle,
    /// `[cx, cy, a, b]` or `[cx, cy, a, b, angle]`: a rotated `(a cos s, b sin s)`.
    Ellipse,
    /// `[cx, cy, cz, r]` with parameters (longitude, latitude).
    Sphere,
    /// `[px, py, pz, ux, uy, uz, vx, vy, vz]`: `p + s1 u + s2 v`.
    Plane,
    /// Graph of a polynomial. In the plane `[c0, c1, ..]` gives `(s, sum c_k s^k)`;
    /// in space `(d+1)^2` coefficients `c[i*(d+1)+j]` of `s1^i s2^j` give
    /// `(s1, s2, p(s1, s2))`.
    GraphPolynomial,
    /// Four coefficients `[ax_k, bx_k, ay_k, by_k]` per harmonic `k = 0, 1, ..`:
    /// `x = sum ax_k cos ks + bx_k sin ks`, likewise for `y`.
    FourierCurve,
    /// 27 coefficients: control vectors `P_ij` (i major) of `sum P_ij u^i v^j`.
    BiquadraticPatch,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Line => "line",
            SurfaceKind::Circle => "circle",
            SurfaceKind::Ellipse => "ellipse",
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Plane => "plane",
            SurfaceKind::GraphPolynomial => "graph-polynomial",
            SurfaceKind::FourierCurve => "fourier-curve",
            SurfaceKind::BiquadraticPatch => "biquadratic-patch",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "line" => SurfaceKind::Line,
            "circle" => SurfaceKind::Circle,
            "ellipse" => SurfaceKind::Ellipse,
            "sphere" => SurfaceKind::Sphere,
            "plane" => SurfaceKind::Plane,
            "graph-polynomial" => SurfaceKind::GraphPolynomial,
            "fourier-curve" => SurfaceKind::FourierCurve,
            "biquadratic-patch" => SurfaceKind::BiquadraticPatch,
            _ => return None,
        })
    }

    pub const ALL: [SurfaceKind; 8] = [
        SurfaceKind::Line,
        SurfaceKind::Circle,
        SurfaceKind::Ellipse,
        SurfaceKind::Sphere,
        SurfaceKind::Plane,
        SurfaceKind::GraphPolynomial,
        SurfaceKind::FourierCurve,
        SurfaceKind::BiquadraticPatch,
    ];
}

/// A parameter range; periodic ranges wrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: false }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, periodic: true }
    }

    pub fn full_turn() -> Self {
        Interval::periodic(0.0, 2.0 * PI)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Position and partial derivatives of an embedding at one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    param_dim: usize,
    ambient_dim: usize,
    order: usize,
    data: Vec<f64>,
}

impl Jet {
    fn new(param_dim: usize, ambient_dim: usize, order: usize) -> Self {
        let slots = if param_dim == 1 { order + 1 } else { (order + 1) * (order + 1) };
        Jet { param_dim, ambient_dim, order, data: vec![0.0; slots * ambient_dim] }
    }

    fn slot(&self, counts: &[usize]) -> usize {
        let total: usize = counts.iter().sum();
        assert!(total <= self.order, "derivative order {total} not in jet of order {}", self.order);
        let idx = match self.param_dim {
            1 => counts[0],
            _ => counts[0] * (self.order + 1) + counts[1],
        };
        idx * self.ambient_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    /// The derivative taken `counts[a]` times along parameter `a`.
    pub fn partial(&self, counts: &[usize]) -> &[f64] {
        let i = self.slot(counts);
        &self.data[i..i + self.ambient_dim]
    }

    fn partial_mut(&mut self, counts: &[usize]) -> &mut [f64] {
        let i = self.slot(counts);
        let n = self.ambient_dim;
        &mut self.data[i..i + n]
    }

    pub fn position(&self) -> &[f64] {
        self.partial(&self.counts_of(&[]))
    }

    /// First derivative along parameter `a`.
    pub fn first(&self, a: usize) -> &[f64] {
        self.partial(&self.counts_of(&[a]))
    }

    /// Second derivative along parameters `a`, `b`.
    pub fn second(&self, a: usize, b: usize) -> &[f64] {
        self.partial(&self.counts_of(&[a, b]))
    }

    fn counts_of(&self, params: &[usize]) -> [usize; 2] {
        let mut c = [0usize; 2];
        for &a in params {
            c[a] += 1;
        }
        c
    }

    /// Taylor coefficient vectors of `tau -> gamma(s + tau w)`.
    pub fn along(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let n = self.ambient_dim;
        let mut out = Vec::with_capacity(self.order + 1);
        for m in 0..=self.order {
            let mut c = vec![0.0; n];
            if self.param_dim == 1 {
                let wm = w[0].powi(m as i32);
                for (ci, di) in c.iter_mut().zip(self.partial(&[m, 0])) {
                    *ci = di * wm;
                }
            } else {
                for i in 0..=m {
                    let coeff = binomial(m, i) * w[0].powi(i as i32) * w[1].powi((m - i) as i32);
                    if coeff == 0.0 {
                        continue;
                    }
                    for (ci, di) in c.iter_mut().zip(self.partial(&[i, m - i])) {
                        *ci += coeff * di;
                    }
                }
            }
            let fact = crate::math::factorial(m);
            c.iter_mut().for_each(|v| *v /= fact);
            out.push(c);
        }
        out
    }
}

/// `d^m/dx^m cos(k x)`.
fn dcos(k: f64, m: usize, x: f64) -> f64 {
    let km = k.powi(m as i32);
    let a = k * x;
    km * match m % 4 {
        0 => a.cos(),
        1 => -a.sin(),
        2 => -a.cos(),
        _ => a.sin(),
    }
}

/// `d^m/dx^m sin(k x)`.
fn dsin(k: f64, m: usize, x: f64) -> f64 {
    let km = k.powi(m as i32);
    let a = k * x;
    km * match m % 4 {
        0 => a.sin(),
        1 => a.cos(),
        2 => -a.sin(),
        _ => -a.cos(),
    }
}

/// `d^m/ds^m s^k`.
fn dpow(k: usize, m: usize, s: f64) -> f64 {
    if m > k {
        return 0.0;
    }
    let falling = ((k - m + 1)..=k).fold(1.0, |acc, j| acc * j as f64);
    falling * s.powi((k - m) as i32)
}

/// An immersed hypersurface `gamma: domain -> R^n`, `n` in {2, 3}.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricHypersurface {
    kind: SurfaceKind,
    ambient_dim: usize,
    coefficients: Vec<f64>,
    domain: Vec<Interval>,
    orientation: f64,
}

impl ParametricHypersurface {
    /// Validates coefficients, domain and orientation, then checks that the
    /// embedding is immersive on a grid and that periodic parameters close up.
    pub fn new(
        kind: SurfaceKind,
        ambient_dim: usize,
        coefficients: Vec<f64>,
        domain: Vec<Interval>,
        orientation: i8,
    ) -> Result<Self> {
        if !(ambient_dim == 2 || ambient_dim == 3) {
            return Err(Error::Invalid(format!("ambient dimension {ambient_dim} not in {{2, 3}}")));
        }
        let planar = matches!(
            kind,
            SurfaceKind::Line | SurfaceKind::Circle | SurfaceKind::Ellipse | SurfaceKind::FourierCurve
        );
        let spatial = matches!(kind, SurfaceKind::Sphere | SurfaceKind::Plane | SurfaceKind::BiquadraticPatch);
        if (planar && ambient_dim != 2) || (spatial && ambient_dim != 3) {
            return Err(Error::Invalid(format!("{} cannot live in R^{ambient_dim}", kind.name())));
        }
        if domain.len() != ambient_dim - 1 {
            return Err(Error::Invalid(format!(
                "{} needs {} parameter interval(s), got {}",
                kind.name(),
                ambient_dim - 1,
                domain.len()
            )));
        }
        for iv in &domain {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
                return Err(Error::Invalid(format!("bad interval [{}, {}]", iv.lo, iv.hi)));
            }
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("non-finite coefficient".into()));
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::Invalid(format!("orientation must be +1 or -1, got {orientation}")));
        }
        let count = coefficients.len();
        let ok = match kind {
            SurfaceKind::Line => count == 4,
            SurfaceKind::Circle => count == 3 && coefficients[2] > 0.0,
            SurfaceKind::Ellipse => (count == 4 || count == 5) && coefficients[2] > 0.0 && coefficients[3] > 0.0,
            SurfaceKind::Sphere => count == 4 && coefficients[3] > 0.0,
            SurfaceKind::Plane => count == 9,
            SurfaceKind::GraphPolynomial => {
                if ambient_dim == 2 {
                    count >= 1
                } else {
                    let d = isqrt(count);
                    d * d == count && d >= 1
                }
            }
            SurfaceKind::FourierCurve => count >= 4 && count % 4 == 0,
            SurfaceKind::BiquadraticPatch => count == 27,
        };
        if !ok {
            return Err(Error::Invalid(format!(
                "{} does not accept {count} coefficients {:?}",
                kind.name(),
                coefficients
            )));
        }
        let surface = ParametricHypersurface {
            kind,
            ambient_dim,
            coefficients,
            domain,
            orientation: orientation as f64,
        };
        surface.check_periodic_closure()?;
        surface.check_immersion()?;
        Ok(surface)
    }

    /// Line through `p` with direction `d`, parameter range `[lo, hi]`.
    pub fn line(p: [f64; 2], d: [f64; 2], lo: f64, hi: f64) -> Result<Self> {
        Self::new(SurfaceKind::Line, 2, vec![p[0], p[1], d[0], d[1]], vec![Interval::new(lo, hi)], 1)
    }

    pub fn circle(center: [f64; 2], radius: f64) -> Result<Self> {
        Self::new(
            SurfaceKind::Circle,
            2,
            vec![center[0], center[1], radius],
            vec![Interval::full_turn()],
            1,
        )
    }

    pub fn ellipse(center: [f64; 2], a: f64, b: f64, angle: f64) -> Result<Self> {
        Self::new(
            SurfaceKind::Ellipse,
            2,
            vec![center[0], center[1], a, b, angle],
            vec![Interval::full_turn()],
            1,
        )
    }

    /// Sphere parametrized by longitude on a full turn and latitude in `[-lat, lat]`.
    pub fn sphere(center: [f64; 3], radius: f64, lat: f64) -> Result<Self> {
        Self::new(
            SurfaceKind::Sphere,
            3,
            vec![center[0], center[1], center[2], radius],
            vec![Interval::full_turn(), Interval::new(-lat, lat)],
            1,
        )
    }

    pub fn plane(p: [f64; 3], u: [f64; 3], v: [f64; 3], extent: f64) -> Result<Self> {
        let mut c = Vec::with_capacity(9);
        c.extend_from_slice(&p);
        c.extend_from_slice(&u);
        c.extend_from_slice(&v);
        Self::new(
            SurfaceKind::Plane,
            3,
            c,
            vec![Interval::new(-extent, extent), Interval::new(-extent, extent)],
            1,
        )
    }

    /// Planar Fourier curve from `[ax, bx, ay, by]` per harmonic.
    pub fn fourier_curve(harmonics: &[[f64; 4]]) -> Result<Self> {
        Self::new(
            SurfaceKind::FourierCurve,
            2,
            harmonics.iter().flatten().copied().collect(),
            vec![Interval::full_turn()],
            1,
        )
    }

    /// Returns the same surface with the given orientation sign.
    pub fn with_orientation(mut self, orientation: i8) -> Self {
        assert!(orientation == 1 || orientation == -1);
        self.orientation = orientation as f64;
        self
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn param_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn domain(&self) -> &[Interval] {
        &self.domain
    }

    pub fn orientation(&self) -> i8 {
        if self.orientation > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Wraps periodic parameters into their interval; rejects non-periodic
    /// parameters outside theirs (up to a relative slack of `1e-9`).
    pub fn normalize_parameter(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.param_dim() {
            return Err(Error::Invalid(format!(
                "expected {} parameter(s), got {}",
                self.param_dim(),
                s.len()
            )));
        }
        let mut out = Vec::with_capacity(s.len());
        for (a, (&v, iv)) in s.iter().zip(&self.domain).enumerate() {
            if !v.is_finite() {
                return Err(Error::Domain { parameter: a, value: v, lo: iv.lo, hi: iv.hi });
            }
            if iv.periodic {
                out.push(wrap(v, iv.lo, iv.length()));
            } else {
                let slack = 1e-9 * iv.length();
                if v < iv.lo - slack || v > iv.hi + slack {
                    return Err(Error::Domain { parameter: a, value: v, lo: iv.lo, hi: iv.hi });
                }
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Exact derivatives of the embedding up to `order` (at most [`MAX_JET_ORDER`]).
    pub fn evaluate_jet(&self, s: &[f64], order: usize) -> Result<Jet> {
        if order > MAX_JET_ORDER {
            return Err(Error::Invalid(format!("jet order {order} exceeds {MAX_JET_ORDER}")));
        }
        let s = self.normalize_parameter(s)?;
        let mut jet = Jet::new(self.param_dim(), self.ambient_dim, order);
        let c = &self.coefficients;
        match self.kind {
            SurfaceKind::Line => {
                for m in 0..=order {
                    let d = jet.partial_mut(&[m, 0]);
                    match m {
                        0 => {
                            d[0] = c[0] + s[0] * c[2];
                            d[1] = c[1] + s[0] * c[3];
                        }
                        1 => {
                            d[0] = c[2];
                            d[1] = c[3];
                        }
                        _ => {}
                    }
                }
            }
            SurfaceKind::Circle => {
                for m in 0..=order {
                    let d = jet.partial_mut(&[m, 0]);
                    d[0] = c[2] * dcos(1.0, m, s[0]);
                    d[1] = c[2] * dsin(1.0, m, s[0]);
                    if m == 0 {
                        d[0] += c[0];
                        d[1] += c[1];
                    }
                }
            }
            SurfaceKind::Ellipse => {
                let angle = c.get(4).copied().unwrap_or(0.0);
                let (sa, ca) = (angle.sin(), angle.cos());
                for m in 0..=order {
                    let lx = c[2] * dcos(1.0, m, s[0]);
                    let ly = c[3] * dsin(1.0, m, s[0]);
                    let d = jet.partial_mut(&[m, 0]);
                    d[0] = ca * lx - sa * ly;
                    d[1] = sa * lx + ca * ly;
                    if m == 0 {
                        d[0] += c[0];
                        d[1] += c[1];
                    }
                }
            }
            SurfaceKind::FourierCurve => {
                for m in 0..=order {
                    let d = jet.partial_mut(&[m, 0]);
                    for (k, h) in c.chunks_exact(4).enumerate() {
                        let kf = k as f64;
                        let (cs, sn) = (dcos(kf, m, s[0]), dsin(kf, m, s[0]));
                        d[0] += h[0] * cs + h[1] * sn;
                        d[1] += h[2] * cs + h[3] * sn;
                    }
                }
            }
            SurfaceKind::GraphPolynomial if self.ambient_dim == 2 => {
                for m in 0..=order {
                    let d = jet.partial_mut(&[m, 0]);
                    d[0] = match m {
                        0 => s[0],
                        1 => 1.0,
                        _ => 0.0,
                    };
                    d[1] = c.iter().enumerate().map(|(k, ck)| ck * dpow(k, m, s[0])).sum();
                }
            }
            SurfaceKind::GraphPolynomial => {
                let deg = isqrt(c.len()) - 1;
                for i in 0..=order {
                    for j in 0..=(order - i) {
                        let d = jet.partial_mut(&[i, j]);
                        d[0] = match (i, j) {
                            (0, 0) => s[0],
                            (1, 0) => 1.0,
                            _ => 0.0,
                        };
                        d[1] = match (i, j) {
                            (0, 0) => s[1],
                            (0, 1) => 1.0,
                            _ => 0.0,
                        };
                        let mut z = 0.0;
                        for a in 0..=deg {
                            for b in 0..=deg {
                                let cab = c[a * (deg + 1) + b];
                                if cab != 0.0 {
                                    z += cab * dpow(a, i, s[0]) * dpow(b, j, s[1]);
                                }
                            }
                        }
                        d[2] = z;
                    }
                }
            }
            SurfaceKind::Sphere => {
                let r = c[3];
                for i in 0..=order {
                    for j in 0..=(order - i) {
                        let d = jet.partial_mut(&[i, j]);
                        d[0] = r * dcos(1.0, j, s[1]) * dcos(1.0, i, s[0]);
                        d[1] = r * dcos(1.0, j, s[1]) * dsin(1.0, i, s[0]);
                        d[2] = if i == 0 { r * dsin(1.0, j, s[1]) } else { 0.0 };
                        if i == 0 && j == 0 {
                            d[0] += c[0];
                            d[1] += c[1];
                            d[2] += c[2];
                        }
                    }
                }
            }
            SurfaceKind::Plane => {
                for i in 0..=order {
                    for j in 0..=(order - i) {
                        let d = jet.partial_mut(&[i, j]);
                        for k in 0..3 {
                            d[k] = match (i, j) {
                                (0, 0) => c[k] + s[0] * c[3 + k] + s[1] * c[6 + k],
                                (1, 0) => c[3 + k],
                                (0, 1) => c[6 + k],
                                _ => 0.0,
                            };
                        }
                    }
                }
            }
            SurfaceKind::BiquadraticPatch => {
                for i in 0..=order {
                    for j in 0..=(order - i) {
                        let d = jet.partial_mut(&[i, j]);
                        for a in 0..3 {
                            for b in 0..3 {
                                let w = dpow(a, i, s[0]) * dpow(b, j, s[1]);
                                if w == 0.0 {
                                    continue;
                                }
                                let p = &c[(a * 3 + b) * 3..(a * 3 + b) * 3 + 3];
                                for k in 0..3 {
                                    d[k] += w * p[k];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(jet)
    }

    pub fn point(&self, s: &[f64]) -> Result<Vec<f64>> {
        Ok(self.evaluate_jet(s, 0)?.position().to_vec())
    }

    /// Oriented, non-normalized Euclidean normal from a jet of order >= 1.
    /// In the plane this is the tangent turned clockwise, in space `g_u x g_v`.
    pub fn normal_from_jet(&self, jet: &Jet) -> Result<Vec<f64>> {
        let n = if self.ambient_dim == 2 {
            let t = jet.first(0);
            vec![t[1], -t[0]]
        } else {
            cross(jet.first(0), jet.first(1)).to_vec()
        };
        let tangent_scale: f64 = (0..self.param_dim()).map(|a| norm(jet.first(a))).product();
        let len = norm(&n);
        if !(len > 1e-12 * tangent_scale) || len == 0.0 {
            return Err(Error::Immersion { at: Vec::new() });
        }
        Ok(n.into_iter().map(|v| v * self.orientation).collect())
    }

    /// Derivatives of [`Self::normal_from_jet`] along each parameter
    /// (jet order >= 2).
    pub fn normal_derivatives(&self, jet: &Jet) -> Vec<Vec<f64>> {
        let o = self.orientation;
        if self.ambient_dim == 2 {
            let t2 = jet.second(0, 0);
            vec![vec![o * t2[1], -o * t2[0]]]
        } else {
            let (gu, gv) = (jet.first(0), jet.first(1));
            let (guu, guv, gvv) = (jet.second(0, 0), jet.second(0, 1), jet.second(1, 1));
            let du = add3(cross(guu, gv), cross(gu, guv));
            let dv = add3(cross(guv, gv), cross(gu, gvv));
            vec![du.iter().map(|v| o * v).collect(), dv.iter().map(|v| o * v).collect()]
        }
    }

    /// Oriented unit Euclidean normal.
    pub fn unit_normal(&self, s: &[f64]) -> Result<Vec<f64>> {
        let jet = self.evaluate_jet(s, 1)?;
        let n = self.normal_from_jet(&jet).map_err(|_| Error::Immersion { at: s.to_vec() })?;
        let len = norm(&n);
        Ok(n.into_iter().map(|v| v / len).collect())
    }

    fn check_immersion(&self) -> Result<()> {
        // normal lengths are compared against the largest one on the grid, so
        // a chart that collapses (a sphere pole) is caught
        let mut lengths = Vec::new();
        for s in self.validation_grid(VALIDATION_SAMPLES) {
            let jet = self.evaluate_jet(&s, 1)?;
            let n = self.normal_from_jet(&jet).map_err(|_| Error::Immersion { at: s.clone() })?;
            lengths.push((norm(&n), s));
        }
        let largest = lengths.iter().map(|(l, _)| *l).fold(0.0, f64::max);
        match lengths.into_iter().find(|(l, _)| *l < 1e-10 * largest) {
            Some((_, at)) => Err(Error::Immersion { at }),
            None => Ok(()),
        }
    }

    fn check_periodic_closure(&self) -> Result<()> {
        for (a, iv) in self.domain.iter().enumerate() {
            if !iv.periodic {
                continue;
            }
            // probe the other parameter at its midpoint
            let mut lo = vec![0.0; self.param_dim()];
            for (b, other) in self.domain.iter().enumerate() {
                lo[b] = 0.5 * (other.lo + other.hi);
            }
            let mut hi = lo.clone();
            lo[a] = iv.lo;
            hi[a] = iv.hi;
            let ja = self.evaluate_raw(&lo, 5);
            let jb = self.evaluate_raw(&hi, 5);
            for (x, y) in ja.data.iter().zip(&jb.data) {
                if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                    return Err(Error::Invalid(format!(
                        "{} parameter {a} is flagged periodic but does not close over [{}, {}]",
                        self.kind.name(),
                        iv.lo,
                        iv.hi
                    )));
                }
            }
        }
        Ok(())
    }

    /// Jet without wrapping, for the closure check.
    fn evaluate_raw(&self, s: &[f64], order: usize) -> Jet {
        let unwrapped = ParametricHypersurface {
            domain: self
                .domain
                .iter()
                .map(|iv| Interval { lo: iv.lo - 1.0, hi: iv.hi + 1.0, periodic: false })
                .collect(),
            ..self.clone()
        };
        unwrapped.evaluate_jet(s, order).expect("closure probe inside widened domain")
    }

    /// Regular grid over the domain, `samples` per axis; periodic axes skip the
    /// duplicate endpoint.
    pub fn validation_grid(&self, samples: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .map(|iv| {
                let n = samples.max(2);
                let denom = if iv.periodic { n } else { n - 1 } as f64;
                (0..n).map(|k| iv.lo + iv.length() * k as f64 / denom).collect()
            })
            .collect();
        if axes.len() == 1 {
            axes[0].iter().map(|&s| vec![s]).collect()
        } else {
            let mut out = Vec::new();
            for &u in &axes[0] {
                for &v in &axes[1] {
                    out.push(vec![u, v]);
                }
            }
            out
        }
    }
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn isqrt(n: usize) -> usize {
    let mut r = 0;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Quadratic Finsler metric `H(xi) = sqrt(xi^T Q xi)`, `Q` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerMetric {
    q: Matrix,
    q_inv: Matrix,
}

impl FinslerMetric {
    pub fn new(q: Matrix) -> Result<Self> {
        let n = q.rows();
        if q.cols() != n || n == 0 {
            return Err(Error::Invalid("metric matrix must be square".into()));
        }
        if !q.is_finite() {
            return Err(Error::Invalid("metric matrix has non-finite entries".into()));
        }
        let scale = (0..n).map(|i| q[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Invalid("metric matrix is not symmetric".into()));
                }
            }
        }
        let q_inv = linalg::spd_inverse(&q)
            .ok_or_else(|| Error::Invalid("metric matrix is not positive definite".into()))?;
        Ok(FinslerMetric { q, q_inv })
    }

    pub fn euclidean(n: usize) -> Self {
        FinslerMetric { q: Matrix::identity(n), q_inv: Matrix::identity(n) }
    }

    /// `H = eta |xi|`, i.e. `Q = eta^2 I`: fronts move at speed `eta`.
    pub fn scaled(n: usize, eta: f64) -> Result<Self> {
        Self::new(Matrix::from_diagonal(&vec![eta * eta; n]))
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn q_inv(&self) -> &Matrix {
        &self.q_inv
    }

    pub fn hamiltonian(&self, xi: &[f64]) -> f64 {
        dot(xi, &self.q.mul_vec(xi)).max(0.0).sqrt()
    }

    /// `grad H(xi) = Q xi / H(xi)`, the ray direction for covector `xi`.
    pub fn front_velocity(&self, xi: &[f64]) -> Result<Vec<f64>> {
        let h = self.hamiltonian(xi);
        if !(h > 0.0) {
            return Err(Error::DegenerateCovector);
        }
        Ok(self.q.mul_vec(xi).into_iter().map(|v| v / h).collect())
    }

    /// Time to cover displacement `d` along a straight ray: `sqrt(d^T Q^-1 d)`.
    pub fn travel_time(&self, d: &[f64]) -> f64 {
        dot(d, &self.q_inv.mul_vec(d)).max(0.0).sqrt()
    }

    pub fn is_euclidean(&self) -> bool {
        self.q == Matrix::identity(self.dim())
    }
}

/// Unit covector (`H = 1`) annihilating the tangent space, on the oriented side.
pub fn unit_conormal(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    s: &[f64],
) -> Result<Vec<f64>> {
    let jet = surface.evaluate_jet(s, 1)?;
    let n = surface.normal_from_jet(&jet).map_err(|_| Error::Immersion { at: s.to_vec() })?;
    let h = metric.hamiltonian(&n);
    Ok(n.into_iter().map(|v| v / h).collect())
}

/// Front velocity `grad H(xi)`.
pub fn front_velocity(metric: &FinslerMetric, xi: &[f64]) -> Result<Vec<f64>> {
    metric.front_velocity(xi)
}

/// A surface together with its metric and label.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSurface {
    pub label: String,
    pub surface: ParametricHypersurface,
    pub metric: FinslerMetric,
}

impl SceneSurface {
    pub fn new(label: impl Into<String>, surface: ParametricHypersurface, metric: FinslerMetric) -> Self {
        SceneSurface { label: label.into(), surface, metric }
    }

    pub fn euclidean(label: impl Into<String>, surface: ParametricHypersurface) -> Self {
        let n = surface.ambient_dim();
        Self::new(label, surface, FinslerMetric::euclidean(n))
    }
}

/// Solver knobs carried by a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneOptions {
    pub settings: ContinuationSettings,
    /// Ambient grid nodes per axis for seeding.
    pub seed_density: usize,
    /// Parameter samples per axis when scanning for critical footpoints.
    pub footpoint_samples: usize,
    /// Minimal footpoint separation for self-pairs, as a fraction of the
    /// domain length.
    pub separation: f64,
    /// Ambient axis used to slice two-dimensional conflict sets.
    pub slice_axis: Option<usize>,
    /// Slice positions along that axis; empty means nine evenly spaced slices.
    pub slice_values: Vec<f64>,
    /// Shift of the seeding grid from the cell centers, in cells, in
    /// `[-0.5, 0.5)`.
    pub seed_offset: f64,
}

impl Default for SceneOptions {
    fn default() -> Self {
        SceneOptions {
            settings: ContinuationSettings::default(),
            seed_density: 32,
            footpoint_samples: 64,
            separation: 1e-2,
            slice_axis: None,
            slice_values: Vec::new(),
            seed_offset: 0.0,
        }
    }
}

/// Ordered surfaces sharing one ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    ambient_dim: usize,
    surfaces: Vec<SceneSurface>,
    pub options: SceneOptions,
}

impl Scene {
    pub fn new(ambient_dim: usize, surfaces: Vec<SceneSurface>, options: SceneOptions) -> Result<Self> {
        let l = surfaces.len();
        if l == 0 {
            return Err(Error::Invalid("scene has no surfaces".into()));
        }
        if l > ambient_dim + 1 {
            return Err(Error::Overdetermined { surfaces: l, ambient_dim });
        }
        for (i, s) in surfaces.iter().enumerate() {
            if s.surface.ambient_dim() != ambient_dim || s.metric.dim() != ambient_dim {
                return Err(Error::Invalid(format!(
                    "surface '{}' does not live in R^{ambient_dim}",
                    s.label
                )));
            }
            if surfaces[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::Invalid(format!("duplicate surface label '{}'", s.label)));
            }
        }
        let st = &options.settings;
        st.validate()?;
        if options.seed_density < 2 || options.footpoint_samples < 4 {
            return Err(Error::Invalid("seed_density must be >= 2 and footpoint_samples >= 4".into()));
        }
        if !(-0.5..0.5).contains(&options.seed_offset) {
            return Err(Error::Invalid(format!("seed_offset {} not in [-0.5, 0.5)", options.seed_offset)));
        }
        if let Some(axis) = options.slice_axis {
            if axis >= ambient_dim {
                return Err(Error::Invalid(format!("slice axis {axis} out of range")));
            }
        }
        Ok(Scene { ambient_dim, surfaces, options })
    }

    /// Scene with default options.
    pub fn with_surfaces(ambient_dim: usize, surfaces: Vec<SceneSurface>) -> Result<Self> {
        Self::new(ambient_dim, surfaces, SceneOptions::default())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn surfaces(&self) -> &[SceneSurface] {
        &self.surfaces
    }

    pub fn surface(&self, i: usize) -> &SceneSurface {
        &self.surfaces[i]
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Axis-aligned bounding box of all surfaces, sampled on their validation grids.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.ambient_dim];
        for s in &self.surfaces {
            for p in s.surface.validation_grid(VALIDATION_SAMPLES) {
                if let Ok(x) = s.surface.point(&p) {
                    for (b, v) in bb.iter_mut().zip(x) {
                        b.0 = b.0.min(v);
                        b.1 = b.1.max(v);
                    }
                }
            }
        }
        bb
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn unit_circle_jet() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let jet = c.evaluate_jet(&[0.0], 1).unwrap();
        assert!(close(jet.position(), &[1.0, 0.0], 1e-15));
        assert!(close(jet.first(0), &[0.0, 1.0], 1e-15));
    }

    #[test]
    fn line_jet() {
        let l = ParametricHypersurface::line([0.0, 0.0], [1.0, 0.0], -10.0, 10.0).unwrap();
        let jet = l.evaluate_jet(&[2.0], 2).unwrap();
        assert_eq!(jet.position(), &[2.0, 0.0]);
        assert_eq!(jet.first(0), &[1.0, 0.0]);
        assert_eq!(jet.second(0, 0), &[0.0, 0.0]);
    }

    #[test]
    fn fourier_curve_jet_matches_hand_derivative() {
        // gamma = (cos s + 0.2 cos 3s, sin s); gamma' = (-sin s - 0.6 sin 3s, cos s)
        let f = ParametricHypersurface::fourier_curve(&[
            [0.0; 4],
            [1.0, 0.0, 0.0, 1.0],
            [0.0; 4],
            [0.2, 0.0, 0.0, 0.0],
        ])
        .unwrap();
        let s = PI / 2.0;
        let jet = f.evaluate_jet(&[s], 1).unwrap();
        assert!(close(jet.position(), &[0.0, 1.0], 1e-15));
        // -1 - 0.6 sin(3 pi / 2) = -1 + 0.6
        assert!(close(jet.first(0), &[-0.4, 0.0], 1e-15));
    }

    #[test]
    fn out_of_domain_rejected() {
        let l = ParametricHypersurface::line([0.0, 0.0], [1.0, 0.0], -1.0, 1.0).unwrap();
        assert!(matches!(l.evaluate_jet(&[1.5], 0), Err(Error::Domain { .. })));
        // periodic parameters wrap instead
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let a = c.point(&[0.3]).unwrap();
        let b = c.point(&[0.3 + 4.0 * PI]).unwrap();
        assert!(close(&a, &b, 1e-14));
    }

    #[test]
    fn conormals() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let xi = unit_conormal(&c, &FinslerMetric::euclidean(2), &[0.0]).unwrap();
        assert!(close(&xi, &[1.0, 0.0], 1e-15));
        let xi = unit_conormal(&c, &FinslerMetric::scaled(2, 2.0).unwrap(), &[0.0]).unwrap();
        assert!(close(&xi, &[0.5, 0.0], 1e-15));

        let p = ParametricHypersurface::plane([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 5.0).unwrap();
        let xi = unit_conormal(&p, &FinslerMetric::euclidean(3), &[0.7, -1.2]).unwrap();
        assert!(close(&xi, &[0.0, 0.0, 1.0], 1e-15));
    }

    #[test]
    fn velocities() {
        let e = FinslerMetric::euclidean(2);
        assert!(close(&e.front_velocity(&[0.0, 1.0]).unwrap(), &[0.0, 1.0], 1e-15));
        let s = FinslerMetric::scaled(2, 2.0).unwrap();
        assert!(close(&s.front_velocity(&[0.5, 0.0]).unwrap(), &[2.0, 0.0], 1e-15));
        let d = FinslerMetric::new(Matrix::from_diagonal(&[4.0, 1.0])).unwrap();
        assert!(close(&d.front_velocity(&[1.0, 0.0]).unwrap(), &[2.0, 0.0], 1e-15));
        assert_eq!(e.front_velocity(&[0.0, 0.0]), Err(Error::DegenerateCovector));
    }

    #[test]
    fn metric_validation() {
        assert!(FinslerMetric::new(Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]])).is_err());
        assert!(FinslerMetric::new(Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]])).is_err());
        assert!(FinslerMetric::new(Matrix::from_rows(&[&[2.0, 0.5], &[0.5, 1.0]])).is_ok());
    }

    #[test]
    fn sphere_pole_excluded() {
        // latitude reaching the pole is not immersive
        assert!(matches!(
            ParametricHypersurface::sphere([0.0; 3], 1.0, PI / 2.0),
            Err(Error::Immersion { .. })
        ));
        assert!(ParametricHypersurface::sphere([0.0; 3], 1.0, 1.4).is_ok());
    }

    #[test]
    fn periodic_flag_must_close() {
        let r = ParametricHypersurface::new(
            SurfaceKind::Circle,
            2,
            vec![0.0, 0.0, 1.0],
            vec![Interval::periodic(0.0, 3.0)],
            1,
        );
        assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn scene_limits() {
        let c = |x: f64| SceneSurface::euclidean(format!("c{x}"), ParametricHypersurface::circle([x, 0.0], 0.5).unwrap());
        let too_many = Scene::with_surfaces(2, vec![c(0.0), c(2.0), c(4.0), c(6.0)]);
        assert!(matches!(too_many, Err(Error::Overdetermined { .. })));
        let dup = Scene::with_surfaces(2, vec![c(0.0), c(0.0)]);
        assert!(matches!(dup, Err(Error::Invalid(_))));
    }
}
