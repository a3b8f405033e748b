// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Conflict sets, oriented conflict sets and symmetry sets.
//!
//! The unoriented system has unknowns `[x, t, s_1, .., s_l]` and equations
//! `t - F_i(x, s_i) = 0`, `d F_i / d s_i = 0`. The oriented system has
//! unknowns `[t, s_1, .., s_l]` and equations
//! `gamma_1 + t v_1 = gamma_i + t v_i`, with `x` recovered from the first ray.
//! Both leave `n - l + 1` degrees of freedom: curves are traced directly,
//! surfaces are cut into slices along one ambient axis.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::classify::{germ_at, transversality_margin_conflict, GermKind, GermLabel, MAX_ORDER};
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm, Matrix};
use crate::propagation::{critical_footpoints, ray_velocity_jet, travel_time_jet};
use crate::scene::{unit_conormal, Scene};
use crate::solver::{
    box_constraint_gradients, box_constraints, dedup_sorted, newton_refine, trace_seeds, AffineSlice,
    ContinuationSettings, NonlinearSystem, Termination, TraceResult,
};

/// What an inequality constraint of a conflict system guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Wall of the ambient box.
    Box,
    /// Edge of a non-periodic parameter domain.
    Domain,
    /// Minimal footpoint separation of a self-pair.
    Separation,
}

/// Unoriented conflict system over surfaces `surfaces` of a scene (indices
/// may repeat for symmetry sets).
#[derive(Debug, Clone)]
pub struct ConflictSystem<'a> {
    scene: &'a Scene,
    surfaces: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    separation: Option<f64>,
}

impl<'a> ConflictSystem<'a> {
    pub fn new(scene: &'a Scene, surfaces: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        check_box(scene, &bounds)?;
        let l = surfaces.len();
        if l > scene.ambient_dim() + 1 {
            return Err(Error::Overdetermined { surfaces: l, ambient_dim: scene.ambient_dim() });
        }
        if l < 2 || surfaces.iter().any(|&i| i >= scene.len()) {
            return Err(Error::Invalid("a conflict system needs at least two valid surfaces".into()));
        }
        Ok(ConflictSystem { scene, surfaces, bounds, separation: None })
    }

    /// Requires `|s_1 - s_2| >= separation` (periodic-aware); used for self-pairs.
    pub fn with_separation(mut self, separation: f64) -> Self {
        self.separation = Some(separation);
        self
    }

    fn n(&self) -> usize {
        self.scene.ambient_dim()
    }

    fn p(&self) -> usize {
        self.scene.ambient_dim() - 1
    }

    fn s_offset(&self, i: usize) -> usize {
        self.n() + 1 + i * self.p()
    }

    /// Degrees of freedom of the solution set.
    pub fn dof(&self) -> usize {
        self.n() + 1 - self.surfaces.len()
    }

    pub fn surfaces(&self) -> &[usize] {
        &self.surfaces
    }

    pub fn constraint_kind(&self, k: usize) -> ConstraintKind {
        let nb = 2 * self.n();
        let nd = self.domain_constraints().len();
        if k < nb {
            ConstraintKind::Box
        } else if k < nb + 2 * nd {
            ConstraintKind::Domain
        } else {
            ConstraintKind::Separation
        }
    }

    /// `(unknown index, lo, hi)` for every non-periodic parameter.
    fn domain_constraints(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::new();
        for (i, &si) in self.surfaces.iter().enumerate() {
            for (a, iv) in self.scene.surface(si).surface.domain().iter().enumerate() {
                if !iv.periodic {
                    out.push((self.s_offset(i) + a, iv.lo, iv.hi));
                }
            }
        }
        out
    }

    fn separation_vector(&self, u: &[f64]) -> Vec<f64> {
        let (o1, o2) = (self.s_offset(0), self.s_offset(1));
        (0..self.p())
            .map(|a| {
                let d = u[o2 + a] - u[o1 + a];
                match self.period(o1 + a) {
                    Some((_, per)) => d - per * (d / per).round(),
                    None => d,
                }
            })
            .collect()
    }

    /// Splits a solution vector into `(x, t, footpoints)`.
    pub fn unpack(&self, u: &[f64]) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
        let n = self.n();
        let p = self.p();
        let x = u[..n].to_vec();
        let t = u[n];
        let s = (0..self.surfaces.len()).map(|i| u[self.s_offset(i)..self.s_offset(i) + p].to_vec()).collect();
        (x, t, s)
    }

    /// Builds a solution vector from its parts.
    pub fn pack(&self, x: &[f64], t: f64, footpoints: &[Vec<f64>]) -> Vec<f64> {
        let mut u = x.to_vec();
        u.push(t);
        for s in footpoints {
            u.extend_from_slice(s);
        }
        u
    }

    /// The same point with the footpoints of a self-pair exchanged.
    pub fn swapped(&self, u: &[f64]) -> Vec<f64> {
        let (x, t, mut s) = self.unpack(u);
        if s.len() == 2 {
            s.swap(0, 1);
        }
        self.pack(&x, t, &s)
    }
}

fn check_box(scene: &Scene, bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.len() != scene.ambient_dim() {
        return Err(Error::Invalid(format!("box has {} axes, scene has {}", bounds.len(), scene.ambient_dim())));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(Error::Invalid("box must be finite and nonempty".into()));
    }
    Ok(())
}

impl NonlinearSystem for ConflictSystem<'_> {
    fn unknown_dim(&self) -> usize {
        self.n() + 1 + self.surfaces.len() * self.p()
    }

    fn equation_dim(&self) -> usize {
        self.surfaces.len() * (1 + self.p())
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (x, t, s) = self.unpack(u);
        let l = self.surfaces.len();
        let mut r = vec![0.0; self.equation_dim()];
        for (i, &si) in self.surfaces.iter().enumerate() {
            let ss = self.scene.surface(si);
            let tj = travel_time_jet(&ss.surface, &ss.metric, &x, &s[i], 1)?;
            r[i] = t - tj.value;
            for a in 0..self.p() {
                r[l + i * self.p() + a] = tj.grad_s[a];
            }
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let (x, _, s) = self.unpack(u);
        let (n, p, l) = (self.n(), self.p(), self.surfaces.len());
        let mut j = Matrix::zeros(self.equation_dim(), self.unknown_dim());
        for (i, &si) in self.surfaces.iter().enumerate() {
            let ss = self.scene.surface(si);
            let tj = travel_time_jet(&ss.surface, &ss.metric, &x, &s[i], 2)?;
            let off = self.s_offset(i);
            for k in 0..n {
                j[(i, k)] = -tj.grad_x[k];
            }
            j[(i, n)] = 1.0;
            for a in 0..p {
                j[(i, off + a)] = -tj.grad_s[a];
                let row = l + i * p + a;
                for k in 0..n {
                    j[(row, k)] = tj.mixed[(a, k)];
                }
                for b in 0..p {
                    j[(row, off + b)] = tj.hess_s[(a, b)];
                }
            }
        }
        Ok(j)
    }

    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        let mut g = box_constraints(&self.bounds, u);
        for (idx, lo, hi) in self.domain_constraints() {
            g.push(u[idx] - lo);
            g.push(hi - u[idx]);
        }
        if let Some(sep) = self.separation {
            g.push(norm(&self.separation_vector(u)) - sep);
        }
        g
    }

    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.unknown_dim();
        let mut out = box_constraint_gradients(&self.bounds, dim);
        for (idx, _, _) in self.domain_constraints() {
            let mut a = vec![0.0; dim];
            a[idx] = 1.0;
            out.push(a.clone());
            a[idx] = -1.0;
            out.push(a);
        }
        if self.separation.is_some() {
            let d = self.separation_vector(u);
            let len = norm(&d).max(f64::MIN_POSITIVE);
            let mut a = vec![0.0; dim];
            let (o1, o2) = (self.s_offset(0), self.s_offset(1));
            for (k, dk) in d.iter().enumerate() {
                a[o1 + k] = -dk / len;
                a[o2 + k] = dk / len;
            }
            out.push(a);
        }
        out
    }

    fn period(&self, index: usize) -> Option<(f64, f64)> {
        let base = self.n() + 1;
        if index < base {
            return None;
        }
        let i = (index - base) / self.p();
        let a = (index - base) % self.p();
        let iv = self.scene.surface(self.surfaces[i]).surface.domain()[a];
        iv.periodic.then(|| (iv.lo, iv.length()))
    }
}

/// Ray point, its `t`-derivative and its `s`-derivatives.
type RayJet = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

/// Oriented system: unknowns `[t, s_1, .., s_l]`.
#[derive(Debug, Clone)]
pub struct OrientedSystem<'a> {
    scene: &'a Scene,
    bounds: Vec<(f64, f64)>,
}

impl<'a> OrientedSystem<'a> {
    pub fn new(scene: &'a Scene, bounds: Vec<(f64, f64)>) -> Result<Self> {
        check_box(scene, &bounds)?;
        if scene.len() < 2 {
            return Err(Error::Invalid("an oriented conflict system needs at least two surfaces".into()));
        }
        if scene.len() > scene.ambient_dim() + 1 {
            return Err(Error::Overdetermined { surfaces: scene.len(), ambient_dim: scene.ambient_dim() });
        }
        Ok(OrientedSystem { scene, bounds })
    }

    fn n(&self) -> usize {
        self.scene.ambient_dim()
    }

    fn p(&self) -> usize {
        self.n() - 1
    }

    pub fn dof(&self) -> usize {
        self.n() + 1 - self.scene.len()
    }

    pub fn unpack(&self, u: &[f64]) -> (f64, Vec<Vec<f64>>) {
        let p = self.p();
        (u[0], (0..self.scene.len()).map(|i| u[1 + i * p..1 + (i + 1) * p].to_vec()).collect())
    }

    /// Ray point `gamma_i + t v_i`, its derivatives in `t` and `s_i`.
    fn ray(&self, i: usize, t: f64, s: &[f64]) -> Result<RayJet> {
        let ss = self.scene.surface(i);
        let jet = ss.surface.evaluate_jet(s, 2)?;
        let (v, dv) = ray_velocity_jet(&ss.surface, &ss.metric, &jet)?;
        let x = jet.position().iter().zip(&v).map(|(g, w)| g + t * w).collect();
        let ds = (0..self.p()).map(|a| jet.first(a).iter().zip(&dv[a]).map(|(g, d)| g + t * d).collect()).collect();
        Ok((x, v, ds))
    }

    /// Ambient point reached at signed time `t` along the first surface's ray.
    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (t, s) = self.unpack(u);
        Ok(self.ray(0, t, &s[0])?.0)
    }
}

impl NonlinearSystem for OrientedSystem<'_> {
    fn unknown_dim(&self) -> usize {
        1 + self.scene.len() * self.p()
    }

    fn equation_dim(&self) -> usize {
        (self.scene.len() - 1) * self.n()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (t, s) = self.unpack(u);
        let (x1, _, _) = self.ray(0, t, &s[0])?;
        let mut r = Vec::with_capacity(self.equation_dim());
        for (i, si) in s.iter().enumerate().skip(1) {
            let (xi, _, _) = self.ray(i, t, si)?;
            r.extend(x1.iter().zip(&xi).map(|(a, b)| a - b));
        }
        Ok(r)
    }

    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let (t, s) = self.unpack(u);
        let (n, p) = (self.n(), self.p());
        let (_, v1, d1) = self.ray(0, t, &s[0])?;
        let mut j = Matrix::zeros(self.equation_dim(), self.unknown_dim());
        for (i, si) in s.iter().enumerate().skip(1) {
            let (_, vi, di) = self.ray(i, t, si)?;
            let r0 = (i - 1) * n;
            for k in 0..n {
                j[(r0 + k, 0)] = v1[k] - vi[k];
                for a in 0..p {
                    j[(r0 + k, 1 + a)] = d1[a][k];
                    j[(r0 + k, 1 + i * p + a)] = -di[a][k];
                }
            }
        }
        Ok(j)
    }

    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        let mut g = match self.point(u) {
            Ok(x) => box_constraints(&self.bounds, &x),
            Err(_) => vec![-1.0; 2 * self.n()],
        };
        let (_, s) = self.unpack(u);
        for (i, si) in s.iter().enumerate() {
            for (a, iv) in self.scene.surface(i).surface.domain().iter().enumerate() {
                if !iv.periodic {
                    g.push(si[a] - iv.lo);
                    g.push(iv.hi - si[a]);
                }
            }
        }
        g
    }

    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let dim = self.unknown_dim();
        let (t, s) = self.unpack(u);
        let p = self.p();
        let mut out = Vec::new();
        let ray = self.ray(0, t, &s[0]);
        for k in 0..self.n() {
            let mut a = vec![0.0; dim];
            if let Ok((_, v, d)) = &ray {
                a[0] = v[k];
                for b in 0..p {
                    a[1 + b] = d[b][k];
                }
            }
            out.push(a.clone());
            out.push(a.iter().map(|c| -c).collect());
        }
        for (i, _) in s.iter().enumerate() {
            for (b, iv) in self.scene.surface(i).surface.domain().iter().enumerate() {
                if !iv.periodic {
                    let mut a = vec![0.0; dim];
                    a[1 + i * p + b] = 1.0;
                    out.push(a.clone());
                    a[1 + i * p + b] = -1.0;
                    out.push(a);
                }
            }
        }
        out
    }

    fn period(&self, index: usize) -> Option<(f64, f64)> {
        if index == 0 {
            return None;
        }
        let i = (index - 1) / self.p();
        let a = (index - 1) % self.p();
        let iv = self.scene.surface(i).surface.domain()[a];
        iv.periodic.then(|| (iv.lo, iv.length()))
    }
}

/// Either conflict system behind one interface.
#[derive(Debug, Clone)]
pub enum BuiltSystem<'a> {
    Unoriented(ConflictSystem<'a>),
    Oriented(OrientedSystem<'a>),
}

impl BuiltSystem<'_> {
    pub fn dof(&self) -> usize {
        match self {
            BuiltSystem::Unoriented(s) => s.dof(),
            BuiltSystem::Oriented(s) => s.dof(),
        }
    }

    fn inner(&self) -> &dyn NonlinearSystem {
        match self {
            BuiltSystem::Unoriented(s) => s,
            BuiltSystem::Oriented(s) => s,
        }
    }
}

impl NonlinearSystem for BuiltSystem<'_> {
    fn unknown_dim(&self) -> usize {
        self.inner().unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        self.inner().equation_dim()
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.inner().residual(u)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        self.inner().jacobian(u)
    }
    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        self.inner().constraints(u)
    }
    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.inner().constraint_gradients(u)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        self.inner().period(index)
    }
}

/// The conflict system of all scene surfaces restricted to `bounds`.
pub fn build_conflict_system<'a>(scene: &'a Scene, oriented: bool, bounds: Vec<(f64, f64)>) -> Result<BuiltSystem<'a>> {
    if oriented {
        Ok(BuiltSystem::Oriented(OrientedSystem::new(scene, bounds)?))
    } else {
        Ok(BuiltSystem::Unoriented(ConflictSystem::new(scene, (0..scene.len()).collect(), bounds)?))
    }
}

/// A solved point of a conflict set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictPoint {
    pub x: Vec<f64>,
    /// Common travel time; signed in oriented mode.
    pub t: f64,
    /// Scene indices of the surfaces, one per footpoint.
    pub surfaces: Vec<usize>,
    pub footpoints: Vec<Vec<f64>>,
    /// Unit covectors (`H_i = 1`) at the footpoints, pointing along the rays
    /// that reach `x`.
    pub conormals: Vec<Vec<f64>>,
    /// Sign of each time function in the phase function (`-1` only for
    /// oriented points reached at negative time).
    pub signs: Vec<f64>,
    /// Transversality margin of the lifted set.
    pub margin: f64,
    pub germs: Vec<GermLabel>,
}

impl ConflictPoint {
    /// Fills conormals, margin and germ labels for a solved point.
    pub fn new(scene: &Scene, x: Vec<f64>, t: f64, surfaces: Vec<usize>, footpoints: Vec<Vec<f64>>, sign: f64) -> Self {
        let conormals = surfaces
            .iter()
            .zip(&footpoints)
            .map(|(&i, s)| {
                let ss = scene.surface(i);
                match travel_time_jet(&ss.surface, &ss.metric, &x, s, 1) {
                    Ok(tj) => tj.grad_x,
                    Err(_) => unit_conormal(&ss.surface, &ss.metric, s)
                        .map(|xi| xi.iter().map(|v| v * sign).collect())
                        .unwrap_or_else(|_| vec![0.0; x.len()]),
                }
            })
            .collect();
        let germs = surfaces
            .iter()
            .zip(&footpoints)
            .map(|(&i, s)| {
                let ss = scene.surface(i);
                germ_at(&ss.surface, &ss.metric, &x, s).unwrap_or(GermLabel {
                    kind: GermKind::Degenerate,
                    codim: MAX_ORDER,
                    corank: 0,
                    witness: Vec::new(),
                })
            })
            .collect();
        let l = surfaces.len();
        let mut cp = ConflictPoint { x, t, surfaces, footpoints, conormals, signs: vec![sign; l], margin: 0.0, germs };
        cp.margin = transversality_margin_conflict(scene, &cp).unwrap_or(0.0);
        cp
    }

    /// `max_i |F_i(x, s_i) - |t||` and `max_i |dF_i/ds_i|`, recomputed from the scene.
    pub fn residuals(&self, scene: &Scene) -> Result<(f64, f64)> {
        let mut tie: f64 = 0.0;
        let mut crit: f64 = 0.0;
        for (&i, s) in self.surfaces.iter().zip(&self.footpoints) {
            let ss = scene.surface(i);
            let tj = travel_time_jet(&ss.surface, &ss.metric, &self.x, s, 1)?;
            tie = tie.max((tj.value - self.t.abs()).abs());
            crit = crit.max(norm(&tj.grad_s));
        }
        Ok((tie, crit))
    }

    pub fn germ_name(&self, ambient_dim: usize) -> alloc::string::String {
        crate::classify::multigerm_label(&self.germs, ambient_dim).name
    }
}

/// One traced branch with its solved points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictBranch {
    /// Slice index for sliced (two-dimensional) sets.
    pub slice: Option<usize>,
    pub trace: TraceResult,
    pub points: Vec<ConflictPoint>,
}

/// Output of the conflict-set drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictSet {
    /// Dimension of the set in the ambient space.
    pub dof: usize,
    pub branches: Vec<ConflictBranch>,
    /// Isolated degenerate solutions (a continuum collapsing to a point).
    pub clusters: Vec<ConflictPoint>,
    /// Endpoints where the footpoints of a self-pair merge.
    pub closure_points: Vec<ConflictPoint>,
    pub slice_axis: Option<usize>,
    pub slice_values: Vec<f64>,
    pub empty_slices: Vec<usize>,
    /// Seeds whose trace failed, with the reason.
    pub failures: Vec<(Vec<f64>, Error)>,
}

impl ConflictSet {
    pub fn point_count(&self) -> usize {
        self.branches.iter().map(|b| b.points.len()).sum::<usize>() + self.clusters.len()
    }

    /// All points, branch by branch, then clusters.
    pub fn all_points(&self) -> impl Iterator<Item = &ConflictPoint> {
        self.branches.iter().flat_map(|b| b.points.iter()).chain(self.clusters.iter())
    }
}

/// Regular grid over `bounds`, `density` nodes per free axis, shifted by
/// `offset` cells; `fixed` pins one axis to a value.
fn x_grid(bounds: &[(f64, f64)], density: usize, offset: f64, fixed: Option<(usize, f64)>) -> Vec<Vec<f64>> {
    let n = bounds.len();
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|a| match fixed {
            Some((axis, v)) if axis == a => vec![v],
            _ => {
                let (lo, hi) = bounds[a];
                // cell centers keep nodes off the box walls
                (0..density).map(|k| lo + (hi - lo) * (k as f64 + 0.5 + offset) / density as f64).collect()
            }
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &v in axis {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Critical footpoints on `surface` seen from `x`, with their (signed) times.
fn footpoint_times(scene: &Scene, surface: usize, x: &[f64], signed: bool) -> Vec<(Vec<f64>, f64)> {
    let ss = scene.surface(surface);
    let samples = if ss.surface.param_dim() == 1 {
        scene.options.footpoint_samples
    } else {
        (scene.options.footpoint_samples / 6).max(6)
    };
    let Ok(crit) = critical_footpoints(&ss.surface, &ss.metric, x, samples) else {
        return Vec::new();
    };
    crit.into_iter()
        .filter_map(|s| {
            let tj = travel_time_jet(&ss.surface, &ss.metric, x, &s, 1).ok()?;
            let mut t = tj.value;
            if signed {
                let jet = ss.surface.evaluate_jet(&s, 1).ok()?;
                let n = ss.surface.normal_from_jet(&jet).ok()?;
                if dot(&tj.grad_x, &n) < 0.0 {
                    t = -t;
                }
            }
            Some((s, t))
        })
        .collect()
}

/// Lipschitz constant of `F` in `x` under the metric: `1 / sqrt(lambda_min(Q))`.
fn lipschitz(scene: &Scene, surfaces: &[usize]) -> f64 {
    surfaces
        .iter()
        .map(|&i| {
            let (eig, _) = crate::linalg::symmetric_eigen(scene.surface(i).metric.q());
            1.0 / eig[0].sqrt()
        })
        .fold(0.0, f64::max)
}

/// Footpoint combinations whose times agree within `tol`, one per surface.
/// Self-pairs use distinct footpoints in increasing order.
fn tie_combinations(
    per_surface: &[Vec<(Vec<f64>, f64)>],
    self_pair: bool,
    tol: f64,
) -> Vec<(Vec<Vec<f64>>, f64)> {
    let mut out = Vec::new();
    if self_pair {
        let list = &per_surface[0];
        for a in 0..list.len() {
            for b in (a + 1)..list.len() {
                if (list[a].1 - list[b].1).abs() <= tol {
                    out.push((vec![list[a].0.clone(), list[b].0.clone()], 0.5 * (list[a].1 + list[b].1)));
                }
            }
        }
        return out;
    }
    let l = per_surface.len();
    let mut idx = vec![0usize; l];
    if per_surface.iter().any(|v| v.is_empty()) {
        return out;
    }
    loop {
        let times: Vec<f64> = (0..l).map(|i| per_surface[i][idx[i]].1).collect();
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= tol {
            let s = (0..l).map(|i| per_surface[i][idx[i]].0.clone()).collect();
            out.push((s, times.iter().sum::<f64>() / l as f64));
        }
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < per_surface[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == l {
                return out;
            }
        }
    }
}

struct Driver<S> {
    system: S,
    settings: ContinuationSettings,
}

impl<S: NonlinearSystem> Driver<S> {
    fn feasible(&self, u: &[f64]) -> bool {
        self.system.constraints(u).iter().all(|&g| g >= 0.0)
    }

    fn refine_all(&self, guesses: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let solved: Vec<Vec<f64>> = guesses
            .into_iter()
            .filter_map(|g| newton_refine(&self.system, &g, &self.settings).ok())
            .map(|r| r.solution)
            .filter(|u| self.feasible(u))
            .collect();
        dedup_sorted(&self.system, solved, 10.0 * self.settings.newton_tol)
    }
}

fn box_size(bounds: &[(f64, f64)]) -> f64 {
    norm(&bounds.iter().map(|(lo, hi)| hi - lo).collect::<Vec<_>>())
}

/// Collects degenerate seeds (rank-deficient Jacobian at a solution) as
/// point clusters, merged by ambient position.
fn push_cluster(clusters: &mut Vec<ConflictPoint>, cp: ConflictPoint, radius: f64) {
    if clusters.iter().all(|c| distance(&c.x, &cp.x) > radius) {
        clusters.push(cp);
    }
}

/// Unoriented conflict set (or symmetry set when `surfaces` repeats one
/// surface) inside `bounds`.
fn unoriented_set(
    scene: &Scene,
    surfaces: Vec<usize>,
    bounds: &[(f64, f64)],
    settings: &ContinuationSettings,
    separation: Option<f64>,
) -> Result<ConflictSet> {
    settings.validate()?;
    let mut system = ConflictSystem::new(scene, surfaces.clone(), bounds.to_vec())?;
    if let Some(sep) = separation {
        system = system.with_separation(sep);
    }
    let self_pair = separation.is_some();
    let dof = system.dof();
    let n = scene.ambient_dim();
    let (slice_axis, slice_values) = slices_for(scene, bounds, dof);
    let density = seed_density(scene, dof);
    let lip = lipschitz(scene, &surfaces);
    let mut out = ConflictSet {
        dof,
        branches: Vec::new(),
        clusters: Vec::new(),
        closure_points: Vec::new(),
        slice_axis,
        slice_values: slice_values.clone(),
        empty_slices: Vec::new(),
        failures: Vec::new(),
    };
    let unique: Vec<usize> = {
        let mut u = surfaces.clone();
        u.dedup();
        u
    };
    let plans: Vec<Option<(usize, f64)>> = match slice_axis {
        Some(axis) => slice_values.iter().map(|&v| Some((axis, v))).collect(),
        None => vec![None],
    };
    for (slice_idx, fixed) in plans.into_iter().enumerate() {
        let nodes = x_grid(bounds, density, scene.options.seed_offset, fixed);
        let spacing = bounds
            .iter()
            .enumerate()
            .filter(|(a, _)| fixed.map_or(true, |(ax, _)| ax != *a))
            .map(|(_, (lo, hi))| (hi - lo) / density as f64)
            .fold(0.0, f64::max);
        let free = if fixed.is_some() { n - 1 } else { n };
        let tol = 2.0 * lip * spacing * (free as f64).sqrt();
        let mut guesses = Vec::new();
        for x in &nodes {
            let per: Vec<Vec<(Vec<f64>, f64)>> = unique.iter().map(|&i| footpoint_times(scene, i, x, false)).collect();
            for (s, t) in tie_combinations(&per, self_pair, tol) {
                guesses.push(system.pack(x, t, &s));
            }
        }
        let sliced = fixed.map(|(axis, v)| {
            let mut normal = vec![0.0; system.unknown_dim()];
            normal[axis] = 1.0;
            AffineSlice { inner: system.clone(), normal, offset: v }
        });
        let (traces, failures) = match &sliced {
            Some(sys) => run_seeds(sys, guesses, settings, |u| vec![u.to_vec(), system.swapped(u)]),
            None => run_seeds(&system, guesses, settings, |u| vec![u.to_vec(), system.swapped(u)]),
        };
        if fixed.is_some() && traces.is_empty() {
            out.empty_slices.push(slice_idx);
        }
        for trace in traces {
            let points = trace
                .points
                .iter()
                .map(|u| {
                    let (x, t, s) = system.unpack(u);
                    ConflictPoint::new(scene, x, t, surfaces.clone(), s, 1.0)
                })
                .collect::<Vec<_>>();
            if self_pair {
                for (term, cp) in [(trace.start, points.first()), (trace.end, points.last())] {
                    if let (Termination::Boundary { constraint }, Some(cp)) = (term, cp) {
                        if system.constraint_kind(constraint) == ConstraintKind::Separation {
                            out.closure_points.push(cp.clone());
                        }
                    }
                }
            }
            out.branches.push(ConflictBranch { slice: fixed.map(|_| slice_idx), trace, points });
        }
        let radius = 1e-6 * box_size(bounds);
        for (u, err) in failures {
            if matches!(err, Error::Precondition(_)) {
                let (x, t, s) = system.unpack(&u);
                push_cluster(&mut out.clusters, ConflictPoint::new(scene, x, t, surfaces.clone(), s, 1.0), radius);
            } else {
                out.failures.push((u, err));
            }
        }
    }
    Ok(out)
}

fn run_seeds<S: NonlinearSystem, V: Fn(&[f64]) -> Vec<Vec<f64>>>(
    system: &S,
    guesses: Vec<Vec<f64>>,
    settings: &ContinuationSettings,
    variants: V,
) -> (Vec<TraceResult>, Vec<(Vec<f64>, Error)>) {
    let driver = Driver { system, settings: settings.clone() };
    let seeds = driver.refine_all(guesses);
    trace_seeds(&driver.system, &seeds, settings, variants)
}

fn seed_density(scene: &Scene, dof: usize) -> usize {
    let d = scene.options.seed_density;
    if scene.ambient_dim() == 3 && dof == 1 {
        d.min(14)
    } else {
        d
    }
}

fn slices_for(scene: &Scene, bounds: &[(f64, f64)], dof: usize) -> (Option<usize>, Vec<f64>) {
    if dof < 2 {
        return (None, Vec::new());
    }
    let axis = scene.options.slice_axis.unwrap_or(scene.ambient_dim() - 1);
    let values = if scene.options.slice_values.is_empty() {
        let (lo, hi) = bounds[axis];
        (1..=9).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
    } else {
        scene.options.slice_values.clone()
    };
    (Some(axis), values)
}

/// Conflict set of all scene surfaces inside `bounds`.
pub fn conflict_set(scene: &Scene, bounds: &[(f64, f64)], settings: &ContinuationSettings) -> Result<ConflictSet> {
    if scene.len() < 2 {
        return Err(Error::Invalid("a conflict set needs at least two surfaces".into()));
    }
    unoriented_set(scene, (0..scene.len()).collect(), bounds, settings, None)
}

/// Symmetry set of the single surface of `scene`: equal-time double critical
/// points with footpoints at least `options.separation` (fraction of the
/// domain length) apart.
pub fn symmetry_set(scene: &Scene, bounds: &[(f64, f64)], settings: &ContinuationSettings) -> Result<ConflictSet> {
    if scene.len() != 1 {
        return Err(Error::Invalid(format!("symmetry sets need exactly one surface, got {}", scene.len())));
    }
    let length = scene.surface(0).surface.domain().iter().map(|iv| iv.length()).fold(0.0, f64::max);
    unoriented_set(scene, vec![0, 0], bounds, settings, Some(scene.options.separation * length))
}

/// Oriented conflict set: rays along the oriented conormals at signed times.
pub fn oriented_conflict_set(
    scene: &Scene,
    bounds: &[(f64, f64)],
    settings: &ContinuationSettings,
) -> Result<ConflictSet> {
    settings.validate()?;
    let system = OrientedSystem::new(scene, bounds.to_vec())?;
    let dof = system.dof();
    let n = scene.ambient_dim();
    let (slice_axis, slice_values) = slices_for(scene, bounds, dof);
    let density = seed_density(scene, dof);
    let all: Vec<usize> = (0..scene.len()).collect();
    let lip = lipschitz(scene, &all);
    let mut out = ConflictSet {
        dof,
        branches: Vec::new(),
        clusters: Vec::new(),
        closure_points: Vec::new(),
        slice_axis,
        slice_values: slice_values.clone(),
        empty_slices: Vec::new(),
        failures: Vec::new(),
    };
    let plans: Vec<Option<(usize, f64)>> = match slice_axis {
        Some(axis) => slice_values.iter().map(|&v| Some((axis, v))).collect(),
        None => vec![None],
    };
    for (slice_idx, fixed) in plans.into_iter().enumerate() {
        let nodes = x_grid(bounds, density, scene.options.seed_offset, fixed);
        let spacing = bounds.iter().map(|(lo, hi)| (hi - lo) / density as f64).fold(0.0, f64::max);
        let tol = 2.0 * lip * spacing * (n as f64).sqrt();
        let mut guesses = Vec::new();
        for x in &nodes {
            let per: Vec<Vec<(Vec<f64>, f64)>> = all.iter().map(|&i| footpoint_times(scene, i, x, true)).collect();
            for (s, t) in tie_combinations(&per, false, tol) {
                let mut u = vec![t];
                for si in s {
                    u.extend(si);
                }
                guesses.push(u);
            }
        }
        let (traces, failures) = match fixed {
            Some((axis, v)) => {
                let sys = OrientedSlice { inner: system.clone(), axis, value: v };
                run_seeds(&sys, guesses, settings, |u| vec![u.to_vec()])
            }
            None => run_seeds(&system, guesses, settings, |u| vec![u.to_vec()]),
        };
        if fixed.is_some() && traces.is_empty() {
            out.empty_slices.push(slice_idx);
        }
        let to_point = |u: &[f64]| -> Option<ConflictPoint> {
            let x = system.point(u).ok()?;
            let (t, s) = system.unpack(u);
            let sign = if t < 0.0 { -1.0 } else { 1.0 };
            Some(ConflictPoint::new(scene, x, t, all.clone(), s, sign))
        };
        for trace in traces {
            let points = trace.points.iter().filter_map(|u| to_point(u)).collect();
            out.branches.push(ConflictBranch { slice: fixed.map(|_| slice_idx), trace, points });
        }
        let radius = 1e-6 * box_size(bounds);
        for (u, err) in failures {
            match (&err, to_point(&u)) {
                (Error::Precondition(_), Some(cp)) => push_cluster(&mut out.clusters, cp, radius),
                _ => out.failures.push((u, err)),
            }
        }
    }
    Ok(out)
}

/// Oriented system with the recovered point pinned on one ambient axis.
#[derive(Debug, Clone)]
struct OrientedSlice<'a> {
    inner: OrientedSystem<'a>,
    axis: usize,
    value: f64,
}

impl NonlinearSystem for OrientedSlice<'_> {
    fn unknown_dim(&self) -> usize {
        self.inner.unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        self.inner.equation_dim() + 1
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.inner.residual(u)?;
        r.push(self.inner.point(u)?[self.axis] - self.value);
        Ok(r)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let mut j = self.inner.jacobian(u)?;
        // the box-constraint gradient of the upper wall is d x_axis
        let g = self.inner.constraint_gradients(u);
        j.push_row(&g[2 * self.axis]);
        Ok(j)
    }
    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        self.inner.constraints(u)
    }
    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.inner.constraint_gradients(u)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        self.inner.period(index)
    }
}
