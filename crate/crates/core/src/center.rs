// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Footpoints with parallel normals, center sets and normal chords.
//!
//! Everything here uses Euclidean unit normals; scene metrics are ignored.
//! For surfaces `M_1 .. M_l` the unknowns are `s_1 .. s_l` and the equations
//! `<n_1(s_1), d gamma_i / d s_i> = 0`, so every normal is parallel to the
//! first one and the solution set has dimension `n - 1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::error::{Error, Result};
use crate::kite::{sphere_point, SpherePoint};
use crate::linalg::{dot, norm, null_vector, smallest_singular_value, Matrix};
use crate::scene::{Jet, ParametricHypersurface, Scene};
use crate::solver::{dedup_sorted, newton_refine, trace_seeds, ContinuationSettings, NonlinearSystem, TraceResult};

/// Unit normal and its parameter derivatives from a jet of order >= 2.
fn unit_normal_jet(surface: &ParametricHypersurface, jet: &Jet) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = surface.normal_from_jet(jet)?;
    let dn = surface.normal_derivatives(jet);
    let len = norm(&n);
    let nh: Vec<f64> = n.iter().map(|v| v / len).collect();
    let dnh = dn
        .iter()
        .map(|d| {
            let along = dot(&nh, d);
            d.iter().zip(&nh).map(|(a, b)| (a - along * b) / len).collect()
        })
        .collect();
    Ok((nh, dnh))
}

/// Oriented line image `(v, mu)` of a footpoint: `v` the unit normal and `mu`
/// the part of `gamma(s)` orthogonal to it.
pub fn gauss_image(surface: &ParametricHypersurface, s: &[f64]) -> Result<SpherePoint> {
    let jet = surface.evaluate_jet(s, 1)?;
    let n = surface.normal_from_jet(&jet).map_err(|_| Error::Immersion { at: s.to_vec() })?;
    sphere_point(jet.position(), &n)
}

/// Parallel-normal system over surfaces of a scene (indices may repeat).
#[derive(Debug, Clone)]
pub struct ParallelSystem<'a> {
    scene: &'a Scene,
    surfaces: Vec<usize>,
    separation: Option<f64>,
}

impl<'a> ParallelSystem<'a> {
    pub fn new(scene: &'a Scene, surfaces: Vec<usize>) -> Result<Self> {
        if surfaces.len() < 2 || surfaces.iter().any(|&i| i >= scene.len()) {
            return Err(Error::Invalid("parallel tuples need at least two valid surfaces".into()));
        }
        Ok(ParallelSystem { scene, surfaces, separation: None })
    }

    /// Keeps the two footpoints of a self-pair `separation` apart.
    pub fn with_separation(mut self, separation: f64) -> Self {
        self.separation = Some(separation);
        self
    }

    fn p(&self) -> usize {
        self.scene.ambient_dim() - 1
    }

    fn surface(&self, i: usize) -> &ParametricHypersurface {
        &self.scene.surface(self.surfaces[i]).surface
    }

    pub fn unpack(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let p = self.p();
        (0..self.surfaces.len()).map(|i| u[i * p..(i + 1) * p].to_vec()).collect()
    }

    fn swapped(&self, u: &[f64]) -> Vec<f64> {
        let mut s = self.unpack(u);
        if s.len() == 2 {
            s.swap(0, 1);
        }
        s.concat()
    }

    fn separation_vector(&self, u: &[f64]) -> Vec<f64> {
        let p = self.p();
        (0..p)
            .map(|a| {
                let d = u[p + a] - u[a];
                match self.period(a) {
                    Some((_, per)) => d - per * (d / per).round(),
                    None => d,
                }
            })
            .collect()
    }
}

impl NonlinearSystem for ParallelSystem<'_> {
    fn unknown_dim(&self) -> usize {
        self.surfaces.len() * self.p()
    }

    fn equation_dim(&self) -> usize {
        (self.surfaces.len() - 1) * self.p()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let s = self.unpack(u);
        let j1 = self.surface(0).evaluate_jet(&s[0], 1)?;
        let n1 = self.surface(0).normal_from_jet(&j1)?;
        let len = norm(&n1);
        let mut r = Vec::with_capacity(self.equation_dim());
        for (i, si) in s.iter().enumerate().skip(1) {
            let ji = self.surface(i).evaluate_jet(si, 1)?;
            for a in 0..self.p() {
                r.push(dot(&n1, ji.first(a)) / len);
            }
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let s = self.unpack(u);
        let p = self.p();
        let j1 = self.surface(0).evaluate_jet(&s[0], 2)?;
        let (n1, dn1) = unit_normal_jet(self.surface(0), &j1)?;
        let mut m = Matrix::zeros(self.equation_dim(), self.unknown_dim());
        for (i, si) in s.iter().enumerate().skip(1) {
            let ji = self.surface(i).evaluate_jet(si, 2)?;
            for a in 0..p {
                let row = (i - 1) * p + a;
                for b in 0..p {
                    m[(row, b)] += dot(&dn1[b], ji.first(a));
                    m[(row, i * p + b)] += dot(&n1, ji.second(a, b));
                }
            }
        }
        Ok(m)
    }

    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        let mut g = Vec::new();
        let s = self.unpack(u);
        for (i, si) in s.iter().enumerate() {
            for (a, iv) in self.surface(i).domain().iter().enumerate() {
                if !iv.periodic {
                    g.push(si[a] - iv.lo);
                    g.push(iv.hi - si[a]);
                }
            }
        }
        if let Some(sep) = self.separation {
            g.push(norm(&self.separation_vector(u)) - sep);
        }
        g
    }

    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.unknown_dim();
        let p = self.p();
        let mut out = Vec::new();
        for i in 0..self.surfaces.len() {
            for (a, iv) in self.surface(i).domain().iter().enumerate() {
                if !iv.periodic {
                    let mut g = vec![0.0; dim];
                    g[i * p + a] = 1.0;
                    out.push(g.clone());
                    g[i * p + a] = -1.0;
                    out.push(g);
                }
            }
        }
        if self.separation.is_some() {
            let d = self.separation_vector(u);
            let len = norm(&d).max(f64::MIN_POSITIVE);
            let mut g = vec![0.0; dim];
            for (a, da) in d.iter().enumerate() {
                g[a] = -da / len;
                g[p + a] = da / len;
            }
            out.push(g);
        }
        out
    }

    fn period(&self, index: usize) -> Option<(f64, f64)> {
        let p = self.p();
        let iv = self.surface(index / p).domain()[index % p];
        iv.periodic.then(|| (iv.lo, iv.length()))
    }
}

/// Footpoints on each surface whose unit normals are all parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelPair {
    pub surfaces: Vec<usize>,
    pub params: Vec<Vec<f64>>,
    /// Unit normal of the first surface.
    pub v: Vec<f64>,
    /// `sign(<n_1, n_i>)` per surface (`+1` for the first).
    pub signs: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Chord transversality margin (pairs only, else `NaN`).
    pub margin: f64,
}

impl ParallelPair {
    pub fn new(scene: &Scene, surfaces: Vec<usize>, params: Vec<Vec<f64>>) -> Result<Self> {
        let normals = surfaces
            .iter()
            .zip(&params)
            .map(|(&i, s)| scene.surface(i).surface.unit_normal(s))
            .collect::<Result<Vec<_>>>()?;
        let points = surfaces
            .iter()
            .zip(&params)
            .map(|(&i, s)| scene.surface(i).surface.point(s))
            .collect::<Result<Vec<_>>>()?;
        let v = normals[0].clone();
        let signs = normals.iter().map(|n| if dot(n, &v) < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut pair = ParallelPair { surfaces, params, v, signs, points, margin: f64::NAN };
        if pair.surfaces.len() == 2 {
            pair.margin = transversality_margin_chords(scene, &pair)?;
        }
        Ok(pair)
    }

    /// `max_i |n_1 - sign_i n_i|`.
    pub fn parallel_residual(&self, scene: &Scene) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ((&i, s), sign) in self.surfaces.iter().zip(&self.params).zip(&self.signs) {
            let n = scene.surface(i).surface.unit_normal(s)?;
            let d: Vec<f64> = self.v.iter().zip(&n).map(|(a, b)| a - sign * b).collect();
            worst = worst.max(norm(&d));
        }
        Ok(worst)
    }

    /// `max_i |d <v, gamma_i> / d s_i|`.
    pub fn height_residual(&self, scene: &Scene) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (&i, s) in self.surfaces.iter().zip(&self.params) {
            let jet = scene.surface(i).surface.evaluate_jet(s, 1)?;
            for a in 0..jet.param_dim() {
                worst = worst.max(dot(&self.v, jet.first(a)).abs());
            }
        }
        Ok(worst)
    }
}

/// One traced family of parallel tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelBranch {
    pub trace: TraceResult,
    pub pairs: Vec<ParallelPair>,
}

/// Critical points of the height `s -> <v, gamma(s)>`.
pub fn height_critical_points(surface: &ParametricHypersurface, v: &[f64], samples: usize) -> Vec<Vec<f64>> {
    let grad = |s: &[f64]| -> Result<Vec<f64>> {
        let jet = surface.evaluate_jet(s, 1)?;
        Ok((0..surface.param_dim()).map(|a| dot(v, jet.first(a))).collect())
    };
    let hess = |s: &[f64]| -> Result<Matrix> {
        let jet = surface.evaluate_jet(s, 2)?;
        let p = surface.param_dim();
        let mut h = Matrix::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                h[(a, b)] = dot(v, jet.second(a, b));
            }
        }
        Ok(h)
    };
    let mut sys = crate::solver::FnSystem::new(surface.param_dim(), surface.param_dim(), grad, hess);
    for (a, iv) in surface.domain().iter().enumerate() {
        if iv.periodic {
            sys = sys.with_period(a, iv.lo, iv.length());
        }
    }
    let settings = ContinuationSettings { newton_tol: 1e-13, newton_max_iter: 40, ..Default::default() };
    let found: Vec<Vec<f64>> = surface
        .validation_grid(samples)
        .into_iter()
        .filter_map(|s0| newton_refine(&sys, &s0, &settings).ok())
        .map(|r| r.solution)
        .filter(|s| surface.normalize_parameter(s).is_ok())
        .collect();
    let radius = 1e-7 * surface.domain().iter().map(|iv| iv.length()).fold(0.0, f64::max);
    dedup_sorted(&sys, found, radius)
}

/// Traces all parallel-normal tuples of the given surfaces. With a repeated
/// surface (`[i, i]`) the footpoints are kept `separation` (fraction of the
/// domain length) apart. Curves in the plane only: surfaces in space have a
/// two-dimensional family and are not traced here.
pub fn parallel_pairs(
    scene: &Scene,
    surfaces: Vec<usize>,
    separation: f64,
    settings: &ContinuationSettings,
) -> Result<Vec<ParallelBranch>> {
    if scene.ambient_dim() != 2 {
        return Err(Error::Invalid(format!(
            "parallel pairs are traced for curves in the plane, scene is in R^{}",
            scene.ambient_dim()
        )));
    }
    let self_pair = surfaces.len() == 2 && surfaces[0] == surfaces[1];
    let mut system = ParallelSystem::new(scene, surfaces.clone())?;
    if self_pair {
        let length = scene.surface(surfaces[0]).surface.domain()[0].length();
        system = system.with_separation(separation * length);
    }
    let samples = scene.options.footpoint_samples;
    let first = &scene.surface(surfaces[0]).surface;
    let mut guesses = Vec::new();
    for s1 in first.validation_grid(samples.max(8) / 2) {
        let Ok(v) = first.unit_normal(&s1) else { continue };
        let per: Vec<Vec<Vec<f64>>> = surfaces[1..]
            .iter()
            .map(|&i| height_critical_points(&scene.surface(i).surface, &v, samples))
            .collect();
        let mut combos: Vec<Vec<f64>> = vec![s1.clone()];
        for options in &per {
            let mut next = Vec::new();
            for c in &combos {
                for o in options {
                    let mut d = c.clone();
                    d.extend_from_slice(o);
                    next.push(d);
                }
            }
            combos = next;
        }
        guesses.extend(combos);
    }
    let seeds: Vec<Vec<f64>> = guesses
        .into_iter()
        .filter_map(|g| newton_refine(&system, &g, settings).ok())
        .map(|r| r.solution)
        .filter(|u| system.constraints(u).iter().all(|&g| g >= 0.0))
        .collect();
    let seeds = dedup_sorted(&system, seeds, 10.0 * settings.newton_tol);
    let (traces, _) = trace_seeds(&system, &seeds, settings, |u| {
        if self_pair {
            vec![u.to_vec(), system.swapped(u)]
        } else {
            vec![u.to_vec()]
        }
    });
    traces
        .into_iter()
        .map(|trace| {
            let pairs = trace
                .points
                .iter()
                .map(|u| ParallelPair::new(scene, surfaces.clone(), system.unpack(u)))
                .collect::<Result<Vec<_>>>()?;
            Ok(ParallelBranch { trace, pairs })
        })
        .collect()
}

/// Sign pattern `sign(a_i) sign(a_1)` a weighted center set requires.
fn weight_signs(weights: &[f64]) -> Vec<f64> {
    let s1 = weights[0].signum();
    weights.iter().map(|a| a.signum() * s1).collect()
}

/// `y = sum a_i x_i` along a branch. Without weights every tuple contributes
/// its centroid. With weights and more than two surfaces only branches whose
/// normal signs match `sign(a_i) sign(a_1)` contribute (`None` otherwise);
/// pairs take either sign.
pub fn center_set(branch: &ParallelBranch, weights: Option<&[f64]>) -> Result<Option<Vec<Vec<f64>>>> {
    let l = branch.pairs.first().map_or(0, |p| p.points.len());
    let owned;
    let a: &[f64] = match weights {
        Some(w) => {
            if w.iter().any(|&v| v == 0.0 || !v.is_finite()) {
                return Err(Error::Invalid("center weights must be finite and nonzero".into()));
            }
            if l != 0 && w.len() != l {
                return Err(Error::Invalid(format!("{} weights for {l} surfaces", w.len())));
            }
            w
        }
        None => {
            owned = vec![1.0 / l.max(1) as f64; l];
            &owned
        }
    };
    if weights.is_some() && l > 2 {
        let want = weight_signs(a);
        if branch.pairs.iter().any(|p| p.signs != want) {
            return Ok(None);
        }
    }
    Ok(Some(
        branch
            .pairs
            .iter()
            .map(|p| {
                let n = p.points[0].len();
                let mut y = vec![0.0; n];
                for (ai, x) in a.iter().zip(&p.points) {
                    for (yk, xk) in y.iter_mut().zip(x) {
                        *yk += ai * xk;
                    }
                }
                y
            })
            .collect(),
    ))
}

/// A chord between two parallel-normal footpoints as an oriented line.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordImagePoint {
    pub v: Vec<f64>,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    /// The chord runs along `v`, so `mu1 = mu2` and it is a normal chord.
    pub normal: bool,
}

/// Chord images of pairs; a chord is normal when both footpoints project to
/// the same `mu`.
pub fn normal_chord_set(pairs: &[ParallelPair]) -> Vec<ChordImagePoint> {
    pairs
        .iter()
        .filter(|p| p.points.len() == 2)
        .map(|p| {
            let proj = |x: &[f64]| -> Vec<f64> {
                let a = dot(x, &p.v);
                x.iter().zip(&p.v).map(|(xi, vi)| xi - a * vi).collect()
            };
            let mu1 = proj(&p.points[0]);
            let mu2 = proj(&p.points[1]);
            let scale = 1.0 + norm(&p.points[0]).max(norm(&p.points[1]));
            let gap: Vec<f64> = mu1.iter().zip(&mu2).map(|(a, b)| a - b).collect();
            let normal = norm(&gap) < 1e-9 * scale;
            ChordImagePoint { v: p.v.clone(), mu1, mu2, normal }
        })
        .collect()
}

/// Smallest singular value of `d_{v, s_1, s_2}(d_{s_1, s_2} F)` for
/// `F = <v, gamma_1(s_1)> + <v, gamma_2(s_2)>`, with `v` moving in the
/// tangent space of the unit sphere and rows normalized.
pub fn transversality_margin_chords(scene: &Scene, pair: &ParallelPair) -> Result<f64> {
    if pair.surfaces.len() != 2 {
        return Err(Error::Invalid("chord margins are defined for pairs".into()));
    }
    let n = scene.ambient_dim();
    let p = n - 1;
    // orthonormal basis of the tangent space at v
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut vm = Matrix::zeros(0, n);
    vm.push_row(&pair.v);
    for _ in 0..p {
        let e = null_vector(&vm);
        vm.push_row(&e);
        basis.push(e);
    }
    let mut m = Matrix::zeros(0, p + 2 * p);
    for (k, (&i, s)) in pair.surfaces.iter().zip(&pair.params).enumerate() {
        let jet = scene.surface(i).surface.evaluate_jet(s, 2)?;
        for a in 0..p {
            let mut row = vec![0.0; 3 * p];
            for (c, e) in basis.iter().enumerate() {
                row[c] = dot(e, jet.first(a));
            }
            for b in 0..p {
                row[p + k * p + b] = dot(&pair.v, jet.second(a, b));
            }
            m.push_row(&row);
        }
    }
    Ok(smallest_singular_value(&m.row_normalized()))
}
