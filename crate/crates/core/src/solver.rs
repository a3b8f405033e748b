// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Damped Newton refinement, pseudo-arclength continuation, grid seeding and
//! slicing of two-dimensional solution sets.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, null_vector, Matrix};

/// Relative cutoff for singular values in pseudo-inverse solves.
const RCOND: f64 = 1e-13;
/// Consecutive residual increases tolerated before Newton gives up.
const MAX_GROWTH: usize = 5;
/// Backtracking halvings per Newton step.
const MAX_HALVINGS: usize = 12;
/// Tangent turn (radians) above which a continuation step is rejected.
const MAX_TURN: f64 = 0.2;
/// Tangent turn below which the step may grow.
const GROW_TURN: f64 = 0.05;
/// Newton contraction factor above which a corrector is rejected.
const MAX_CONTRACTION: f64 = 0.5;

/// A smooth map `R^u -> R^e` with analytic Jacobian, optional inequality
/// constraints `g_k(u) >= 0` and periodic unknowns.
pub trait NonlinearSystem {
    fn unknown_dim(&self) -> usize;
    fn equation_dim(&self) -> usize;
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, u: &[f64]) -> Result<Matrix>;

    /// Values of the inequality constraints; the feasible region is `g >= 0`.
    fn constraints(&self, _u: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    /// Gradients of [`Self::constraints`].
    fn constraint_gradients(&self, _u: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }

    /// `(start, period)` for periodic unknowns.
    fn period(&self, _index: usize) -> Option<(f64, f64)> {
        None
    }
}

impl<T: NonlinearSystem + ?Sized> NonlinearSystem for &T {
    fn unknown_dim(&self) -> usize {
        (**self).unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        (**self).equation_dim()
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        (**self).residual(u)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        (**self).jacobian(u)
    }
    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        (**self).constraints(u)
    }
    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (**self).constraint_gradients(u)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        (**self).period(index)
    }
}

type ResidualFn<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a>;
type JacobianFn<'a> = Box<dyn Fn(&[f64]) -> Result<Matrix> + 'a>;

/// A system from closures, with optional box constraints.
pub struct FnSystem<'a> {
    unknowns: usize,
    equations: usize,
    residual: ResidualFn<'a>,
    jacobian: JacobianFn<'a>,
    bounds: Vec<(f64, f64)>,
    periods: Vec<Option<(f64, f64)>>,
}

impl fmt::Debug for FnSystem<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSystem")
            .field("unknowns", &self.unknowns)
            .field("equations", &self.equations)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl<'a> FnSystem<'a> {
    pub fn new(
        unknowns: usize,
        equations: usize,
        residual: impl Fn(&[f64]) -> Result<Vec<f64>> + 'a,
        jacobian: impl Fn(&[f64]) -> Result<Matrix> + 'a,
    ) -> Self {
        FnSystem {
            unknowns,
            equations,
            residual: Box::new(residual),
            jacobian: Box::new(jacobian),
            bounds: Vec::new(),
            periods: vec![None; unknowns],
        }
    }

    /// Keeps every unknown inside `[lo_i, hi_i]`.
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.unknowns);
        self.bounds = bounds;
        self
    }

    pub fn with_period(mut self, index: usize, start: f64, period: f64) -> Self {
        self.periods[index] = Some((start, period));
        self
    }
}

impl NonlinearSystem for FnSystem<'_> {
    fn unknown_dim(&self) -> usize {
        self.unknowns
    }
    fn equation_dim(&self) -> usize {
        self.equations
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        (self.residual)(u)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        (self.jacobian)(u)
    }
    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        box_constraints(&self.bounds, u)
    }
    fn constraint_gradients(&self, _u: &[f64]) -> Vec<Vec<f64>> {
        box_constraint_gradients(&self.bounds, self.unknowns)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        self.periods[index]
    }
}

/// `u_i - lo_i` and `hi_i - u_i` for each bounded unknown.
pub fn box_constraints(bounds: &[(f64, f64)], u: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(2 * bounds.len());
    for (&(lo, hi), &v) in bounds.iter().zip(u) {
        g.push(v - lo);
        g.push(hi - v);
    }
    g
}

pub fn box_constraint_gradients(bounds: &[(f64, f64)], unknowns: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * bounds.len());
    for i in 0..bounds.len() {
        let mut a = vec![0.0; unknowns];
        a[i] = 1.0;
        out.push(a.clone());
        a[i] = -1.0;
        out.push(a);
    }
    out
}

/// Adds one affine equation `<a, u> - b = 0` to a system.
#[derive(Debug, Clone)]
pub struct AffineSlice<S> {
    pub inner: S,
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl<S: NonlinearSystem> NonlinearSystem for AffineSlice<S> {
    fn unknown_dim(&self) -> usize {
        self.inner.unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        self.inner.equation_dim() + 1
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.inner.residual(u)?;
        r.push(dot(&self.normal, u) - self.offset);
        Ok(r)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let mut j = self.inner.jacobian(u)?;
        j.push_row(&self.normal);
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

/// Replaces the inequality constraints of a system by one equation
/// `g_k(u) = 0`, to land a trace exactly on a boundary.
struct OnBoundary<'s, S> {
    inner: &'s S,
    k: usize,
}

impl<S: NonlinearSystem> NonlinearSystem for OnBoundary<'_, S> {
    fn unknown_dim(&self) -> usize {
        self.inner.unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        self.inner.equation_dim() + 1
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.inner.residual(u)?;
        r.push(self.inner.constraints(u)[self.k]);
        Ok(r)
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let mut j = self.inner.jacobian(u)?;
        j.push_row(&self.inner.constraint_gradients(u)[self.k]);
        Ok(j)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        self.inner.period(index)
    }
}

/// Tolerances and step controls for Newton and continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSettings {
    pub step_init: f64,
    pub step_min: f64,
    pub step_max: f64,
    /// Residual norm accepted as converged.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Smallest singular value of the row-normalized Jacobian below which a
    /// trace stops.
    pub margin_floor: f64,
    /// Vertex budget per trace.
    pub max_points: usize,
}

impl Default for ContinuationSettings {
    fn default() -> Self {
        ContinuationSettings {
            step_init: 1e-2,
            step_min: 1e-6,
            step_max: 1e-1,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            margin_floor: 1e-8,
            max_points: 20000,
        }
    }
}

impl ContinuationSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_min > 0.0
            && self.step_min <= self.step_init
            && self.step_init <= self.step_max
            && self.step_max.is_finite()
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0
            && self.margin_floor >= 0.0
            && self.max_points >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("inconsistent continuation settings {self:?}")))
        }
    }

    /// Copy with a different maximal step (and initial step clamped to it).
    pub fn with_step_max(&self, step_max: f64) -> Self {
        let mut s = self.clone();
        s.step_max = step_max;
        s.step_init = s.step_init.min(step_max);
        s.step_min = s.step_min.min(s.step_init);
        s
    }
}

/// Outcome of [`newton_refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub solution: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub last_step: f64,
}

/// Wraps periodic unknowns into their fundamental interval.
pub fn canonicalize<S: NonlinearSystem + ?Sized>(system: &S, u: &mut [f64]) {
    for (i, v) in u.iter_mut().enumerate() {
        if let Some((start, period)) = system.period(i) {
            *v = crate::math::wrap(*v, start, period);
        }
    }
}

/// `b - a` with periodic components taken to the nearest image.
pub fn periodic_difference<S: NonlinearSystem + ?Sized>(system: &S, a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            let d = y - x;
            match system.period(i) {
                Some((_, p)) => d - p * (d / p).round(),
                None => d,
            }
        })
        .collect()
}

fn residual_norm<S: NonlinearSystem + ?Sized>(system: &S, u: &[f64]) -> Result<f64> {
    let r = system.residual(u)?;
    let n = norm(&r);
    if n.is_finite() {
        Ok(n)
    } else {
        Err(Error::NoConvergence { residual: n, iterations: 0 })
    }
}

/// Damped Gauss-Newton from `guess`. Steps use the SVD pseudo-inverse, so
/// tall systems get least-squares steps and wide systems minimum-norm steps
/// (projection onto the solution manifold).
pub fn newton_refine<S: NonlinearSystem + ?Sized>(
    system: &S,
    guess: &[f64],
    settings: &ContinuationSettings,
) -> Result<NewtonReport> {
    if guess.len() != system.unknown_dim() {
        return Err(Error::Invalid(format!(
            "guess has {} entries, system has {} unknowns",
            guess.len(),
            system.unknown_dim()
        )));
    }
    if guess.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite guess".into()));
    }
    let mut u = guess.to_vec();
    let mut r = system.residual(&u)?;
    let mut rn = norm(&r);
    let mut growth = 0;
    let mut last_step = 0.0;
    for it in 0..settings.newton_max_iter {
        if rn < settings.newton_tol {
            // one polishing step if it helps
            if let Ok(j) = system.jacobian(&u) {
                let step = j.svd().solve(&r, RCOND);
                let cand: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a - b).collect();
                if let Ok(cn) = residual_norm(system, &cand) {
                    if cn < rn {
                        u = cand;
                        rn = cn;
                    }
                }
            }
            canonicalize(system, &mut u);
            return Ok(NewtonReport { solution: u, residual_norm: rn, iterations: it, last_step });
        }
        let j = system.jacobian(&u)?;
        let svd = j.svd();
        if !(svd.sigma_max() > 0.0) {
            return Err(Error::SingularJacobian { sigma_min: 0.0 });
        }
        let truncated = svd.singular_values.iter().any(|&s| s <= RCOND * svd.sigma_max());
        let step = svd.solve(&r, RCOND);
        let step_norm = norm(&step);
        if !(step_norm > 1e-15 * (1.0 + norm(&u))) {
            return Err(if truncated {
                Error::SingularJacobian { sigma_min: svd.sigma_min() }
            } else {
                Error::NoConvergence { residual: rn, iterations: it }
            });
        }
        let mut lambda = 1.0;
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = u.iter().zip(&step).map(|(a, b)| a - lambda * b).collect();
            if let Ok(cr) = system.residual(&cand) {
                let cn = norm(&cr);
                if cn.is_finite() {
                    if cn < rn {
                        accepted = Some((cand, cr, cn));
                        break;
                    }
                    fallback = Some((cand, cr, cn));
                }
            }
            lambda *= 0.5;
        }
        let (cand, cr, cn) = match accepted {
            Some(a) => {
                growth = 0;
                a
            }
            None => {
                if truncated {
                    return Err(Error::SingularJacobian { sigma_min: svd.sigma_min() });
                }
                growth += 1;
                if growth >= MAX_GROWTH {
                    return Err(Error::NoConvergence { residual: rn, iterations: it + 1 });
                }
                match fallback {
                    Some(f) => f,
                    None => return Err(Error::NoConvergence { residual: rn, iterations: it + 1 }),
                }
            }
        };
        last_step = lambda * step_norm;
        u = cand;
        r = cr;
        rn = cn;
    }
    if rn < settings.newton_tol {
        canonicalize(system, &mut u);
        return Ok(NewtonReport {
            solution: u,
            residual_norm: rn,
            iterations: settings.newton_max_iter,
            last_step,
        });
    }
    Err(Error::NoConvergence { residual: rn, iterations: settings.newton_max_iter })
}

/// Why one end of a trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Landed on inequality constraint `constraint` (box wall, domain edge,
    /// separation limit).
    Boundary { constraint: usize },
    /// The system could not be evaluated any further.
    DomainExit,
    /// The trace came back to its seed.
    Closed,
    /// Vertex budget exhausted.
    MaxPoints,
    /// The Jacobian lost rank: a singular endpoint.
    MarginCollapse,
    /// The step controller shrank below `step_min`.
    StepUnderflow,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Boundary { .. } => "boundary",
            Termination::DomainExit => "domain-exit",
            Termination::Closed => "closed",
            Termination::MaxPoints => "max-points",
            Termination::MarginCollapse => "margin-collapse",
            Termination::StepUnderflow => "step-underflow",
        }
    }
}

/// An ordered polyline of solutions with the solver margin at each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    pub points: Vec<Vec<f64>>,
    /// Smallest singular value of the row-normalized Jacobian per vertex.
    pub margins: Vec<f64>,
    /// Termination at the first vertex.
    pub start: Termination,
    /// Termination at the last vertex.
    pub end: Termination,
    /// True when the polyline is a loop; the last vertex then repeats the first.
    pub closed: bool,
}

impl TraceResult {
    /// A degenerate trace consisting of one isolated solution.
    pub fn single(point: Vec<f64>, margin: f64) -> Self {
        TraceResult {
            points: vec![point],
            margins: vec![margin],
            start: Termination::MarginCollapse,
            end: Termination::MarginCollapse,
            closed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Row-normalized smallest singular value of the Jacobian.
pub fn jacobian_margin(j: &Matrix) -> f64 {
    j.row_normalized().svd().sigma_min()
}

struct Corrected {
    point: Vec<f64>,
    tangent: Vec<f64>,
}

enum StepOutcome {
    Accepted(Corrected, bool),
    Rejected,
    Failed,
}

/// Tangent `z` of the solution curve with `<z, prev> > 0`, from the bordered
/// system `[J; prev^T] z = e_last`.
fn tangent_at(j: &Matrix, prev: &[f64]) -> Option<Vec<f64>> {
    let mut a = j.clone();
    a.push_row(prev);
    let mut rhs = vec![0.0; a.rows()];
    *rhs.last_mut().unwrap() = 1.0;
    let svd = a.svd();
    if !(svd.sigma_min() > 1e-14 * svd.sigma_max()) {
        return None;
    }
    let z = svd.solve(&rhs, 0.0);
    let len = norm(&z);
    if !(len.is_finite() && len > 0.0) {
        return None;
    }
    let mut z: Vec<f64> = z.into_iter().map(|v| v / len).collect();
    if dot(&z, prev) < 0.0 {
        z.iter_mut().for_each(|v| *v = -*v);
    }
    Some(z)
}

/// Pseudo-arclength corrector from predictor `up`, orthogonal to `tau`.
fn correct<S: NonlinearSystem + ?Sized>(
    system: &S,
    up: &[f64],
    tau: &[f64],
    h: f64,
    settings: &ContinuationSettings,
) -> StepOutcome {
    let mut v = up.to_vec();
    let mut prev_step = f64::INFINITY;
    for it in 0..settings.newton_max_iter {
        let (r, j) = match (system.residual(&v), system.jacobian(&v)) {
            (Ok(r), Ok(j)) => (r, j),
            _ => return StepOutcome::Failed,
        };
        let mut rhs = r;
        let offset: Vec<f64> = v.iter().zip(up).map(|(a, b)| a - b).collect();
        rhs.push(dot(tau, &offset));
        let mut a = j;
        a.push_row(tau);
        let step = a.svd().solve(&rhs, RCOND);
        let sn = norm(&step);
        if !sn.is_finite() {
            return StepOutcome::Rejected;
        }
        if it >= 1 && sn > MAX_CONTRACTION * prev_step && sn > 1e-9 * (1.0 + norm(&v)) {
            return StepOutcome::Rejected;
        }
        for (x, d) in v.iter_mut().zip(&step) {
            *x -= d;
        }
        if norm(&offset) > h {
            return StepOutcome::Rejected;
        }
        if sn < 1e-11 * (1.0 + norm(&v)) {
            let r = match system.residual(&v) {
                Ok(r) => r,
                Err(_) => return StepOutcome::Failed,
            };
            if norm(&r) >= settings.newton_tol {
                return StepOutcome::Rejected;
            }
            let j = match system.jacobian(&v) {
                Ok(j) => j,
                Err(_) => return StepOutcome::Failed,
            };
            let tangent = match tangent_at(&j, tau) {
                Some(t) => t,
                None => return StepOutcome::Rejected,
            };
            return StepOutcome::Accepted(Corrected { point: v, tangent }, it <= 3);
        }
        prev_step = sn;
    }
    StepOutcome::Rejected
}

/// Distance from `p` to segment `[a, b]`, all given as offsets in one chart.
fn segment_distance(a: &[f64], b: &[f64], p: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ap: Vec<f64> = p.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2 = dot(&ab, &ab);
    let s = if len2 > 0.0 { (dot(&ap, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let d: Vec<f64> = ap.iter().zip(&ab).map(|(x, y)| x - s * y).collect();
    norm(&d)
}

/// Distance from `p` to the polyline of `trace`, periodic-aware.
pub fn distance_to_trace<S: NonlinearSystem + ?Sized>(system: &S, trace: &TraceResult, p: &[f64]) -> f64 {
    let pts = &trace.points;
    if pts.len() == 1 {
        return norm(&periodic_difference(system, p, &pts[0]));
    }
    let zero = vec![0.0; p.len()];
    pts.windows(2)
        .map(|w| {
            // chart centered at p
            let a = periodic_difference(system, p, &w[0]);
            let ab = periodic_difference(system, &w[0], &w[1]);
            let b: Vec<f64> = a.iter().zip(&ab).map(|(x, y)| x + y).collect();
            segment_distance(&a, &b, &zero)
        })
        .fold(f64::INFINITY, f64::min)
}

struct HalfTrace {
    points: Vec<Vec<f64>>,
    margins: Vec<f64>,
    end: Termination,
}

/// Solves `[f; g_k] = 0` between the last feasible point and the first
/// infeasible one.
fn land_on_boundary<S: NonlinearSystem + ?Sized>(
    system: &S,
    k: usize,
    inside: &[f64],
    outside: &[f64],
    settings: &ContinuationSettings,
) -> Option<Vec<f64>> {
    let gi = system.constraints(inside)[k];
    let go = system.constraints(outside)[k];
    let theta = if gi - go != 0.0 { (gi / (gi - go)).clamp(0.0, 1.0) } else { 0.5 };
    let guess: Vec<f64> = inside.iter().zip(outside).map(|(a, b)| a + theta * (b - a)).collect();
    let sys = OnBoundary { inner: &system, k };
    let rep = newton_refine(&sys, &guess, settings).ok()?;
    let mut p = rep.solution;
    // undo canonicalization relative to `inside` to keep the polyline continuous
    let d = periodic_difference(system, inside, &p);
    p = inside.iter().zip(&d).map(|(a, b)| a + b).collect();
    if distance_plain(&p, inside) > 2.0 * distance_plain(inside, outside) + settings.step_min {
        return None;
    }
    Some(p)
}

fn distance_plain(a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::distance(a, b)
}

fn trace_half<S: NonlinearSystem + ?Sized>(
    system: &S,
    seed: &[f64],
    tau0: &[f64],
    settings: &ContinuationSettings,
    budget: usize,
    check_closure: bool,
) -> (HalfTrace, bool) {
    let mut u = seed.to_vec();
    let mut tau = tau0.to_vec();
    let mut h = settings.step_init;
    let mut points = Vec::new();
    let mut margins = Vec::new();
    let mut travelled = 0.0;
    loop {
        if points.len() >= budget {
            return (HalfTrace { points, margins, end: Termination::MaxPoints }, false);
        }
        let up: Vec<f64> = u.iter().zip(&tau).map(|(a, b)| a + h * b).collect();
        let outcome = correct(system, &up, &tau, h, settings);
        let (next, easy) = match outcome {
            StepOutcome::Accepted(c, easy) => {
                let turn = dot(&c.tangent, &tau).clamp(-1.0, 1.0).acos();
                if turn > MAX_TURN {
                    (None, false)
                } else {
                    (Some(c), easy && turn < GROW_TURN)
                }
            }
            StepOutcome::Rejected => (None, false),
            StepOutcome::Failed => {
                if h * 0.5 < settings.step_min {
                    return (HalfTrace { points, margins, end: Termination::DomainExit }, false);
                }
                (None, false)
            }
        };
        let Some(c) = next else {
            h *= 0.5;
            if h < settings.step_min {
                return (HalfTrace { points, margins, end: Termination::StepUnderflow }, false);
            }
            continue;
        };

        // inequality constraints
        let g = system.constraints(&c.point);
        if let Some(k) = (0..g.len()).filter(|&k| g[k] < 0.0).min_by(|&a, &b| g[a].total_cmp(&g[b])) {
            if let Some(p) = land_on_boundary(system, k, &u, &c.point, settings) {
                let m = system.jacobian(&p).map(|j| jacobian_margin(&j)).unwrap_or(0.0);
                points.push(p);
                margins.push(m);
            }
            return (HalfTrace { points, margins, end: Termination::Boundary { constraint: k } }, false);
        }

        let step = distance_plain(&c.point, &u);
        travelled += step;

        // closure: the new segment passes the seed with aligned tangent
        if check_closure && points.len() >= 3 && travelled > 4.0 * h {
            let a = periodic_difference(system, seed, &u);
            let ab = periodic_difference(system, &u, &c.point);
            let b: Vec<f64> = a.iter().zip(&ab).map(|(x, y)| x + y).collect();
            let zero = vec![0.0; seed.len()];
            if segment_distance(&a, &b, &zero) < 0.25 * h.max(settings.step_min) && dot(&c.tangent, tau0) > 0.9 {
                return (HalfTrace { points, margins, end: Termination::Closed }, true);
            }
        }

        let margin = match system.jacobian(&c.point) {
            Ok(j) => jacobian_margin(&j),
            Err(_) => 0.0,
        };
        points.push(c.point.clone());
        margins.push(margin);
        if margin < settings.margin_floor {
            return (HalfTrace { points, margins, end: Termination::MarginCollapse }, false);
        }
        u = c.point;
        tau = c.tangent;
        if easy {
            h = (h * 1.5).min(settings.step_max);
        }
    }
}

/// Traces the one-dimensional solution set through `seed` in both directions
/// by pseudo-arclength continuation.
pub fn trace_curve<S: NonlinearSystem + ?Sized>(
    system: &S,
    seed: &[f64],
    settings: &ContinuationSettings,
) -> Result<TraceResult> {
    settings.validate()?;
    let (u, e) = (system.unknown_dim(), system.equation_dim());
    if u != e + 1 {
        return Err(Error::Precondition(format!(
            "trace_curve needs one more unknown than equations, got {u} and {e}"
        )));
    }
    let rn = residual_norm(system, seed)?;
    if !(rn < settings.newton_tol) {
        return Err(Error::Precondition(format!("seed residual {rn:e} above tolerance")));
    }
    let j = system.jacobian(seed)?;
    let seed_margin = jacobian_margin(&j);
    if !(seed_margin >= settings.margin_floor) {
        return Err(Error::Precondition(format!("seed jacobian rank-deficient (margin {seed_margin:e})")));
    }
    let tau0 = null_vector(&j);
    let mut seed = seed.to_vec();
    canonicalize(system, &mut seed);

    let budget = settings.max_points.saturating_sub(1);
    let (fwd, closed) = trace_half(system, &seed, &tau0, settings, budget, true);
    if closed {
        let mut points = vec![seed.clone()];
        let mut margins = vec![seed_margin];
        points.extend(fwd.points);
        margins.extend(fwd.margins);
        points.push(seed);
        margins.push(seed_margin);
        for p in &mut points {
            canonicalize(system, p);
        }
        return Ok(TraceResult {
            points,
            margins,
            start: Termination::Closed,
            end: Termination::Closed,
            closed: true,
        });
    }
    let back_tau: Vec<f64> = tau0.iter().map(|v| -v).collect();
    let remaining = budget.saturating_sub(fwd.points.len());
    let (bwd, _) = trace_half(system, &seed, &back_tau, settings, remaining, false);
    let mut points: Vec<Vec<f64>> = bwd.points.into_iter().rev().collect();
    let mut margins: Vec<f64> = bwd.margins.into_iter().rev().collect();
    points.push(seed);
    margins.push(seed_margin);
    points.extend(fwd.points);
    margins.extend(fwd.margins);
    for p in &mut points {
        canonicalize(system, p);
    }
    Ok(TraceResult { points, margins, start: bwd.end, end: fwd.end, closed: false })
}

/// Runs Newton from every node of a regular grid over `bounds` (`density`
/// nodes per axis), keeps converged points inside the bounds, sorts them
/// lexicographically and drops near-duplicates (`10 * newton_tol`).
pub fn grid_seed<S: NonlinearSystem + ?Sized>(
    system: &S,
    bounds: &[(f64, f64)],
    density: usize,
    settings: &ContinuationSettings,
) -> Result<Vec<Vec<f64>>> {
    if density < 2 {
        return Err(Error::Invalid("grid density must be at least 2".into()));
    }
    if bounds.len() != system.unknown_dim() {
        return Err(Error::Invalid("bounds do not match the unknowns".into()));
    }
    let dim = bounds.len();
    let total = density.checked_pow(dim as u32).ok_or_else(|| Error::Invalid("grid too large".into()))?;
    let mut found = Vec::new();
    let mut node = vec![0.0; dim];
    for idx in 0..total {
        let mut rest = idx;
        for (a, &(lo, hi)) in bounds.iter().enumerate() {
            let k = rest % density;
            rest /= density;
            node[a] = lo + (hi - lo) * k as f64 / (density - 1) as f64;
        }
        if let Ok(rep) = newton_refine(system, &node, settings) {
            let inside = rep.solution.iter().zip(bounds).enumerate().all(|(i, (v, &(lo, hi)))| {
                system.period(i).is_some() || (*v >= lo && *v <= hi)
            });
            if inside {
                found.push(rep.solution);
            }
        }
    }
    Ok(dedup_sorted(system, found, 10.0 * settings.newton_tol))
}

/// Sorts points lexicographically and drops those within `radius` of an
/// already kept point.
pub fn dedup_sorted<S: NonlinearSystem + ?Sized>(system: &S, mut points: Vec<Vec<f64>>, radius: f64) -> Vec<Vec<f64>> {
    for p in &mut points {
        canonicalize(system, p);
    }
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for p in points {
        if kept.iter().all(|q| norm(&periodic_difference(system, q, &p)) > radius) {
            kept.push(p);
        }
    }
    kept
}

/// Traces from each seed unless it already lies on a traced branch.
pub fn trace_all<S: NonlinearSystem + ?Sized>(
    system: &S,
    seeds: &[Vec<f64>],
    settings: &ContinuationSettings,
) -> Vec<TraceResult> {
    trace_seeds(system, seeds, settings, |s| vec![s.to_vec()]).0
}

/// Like [`trace_all`], but a seed is also skipped when any of its
/// `variants` (e.g. images under a symmetry of the system) lies on a traced
/// branch. Seeds whose trace fails are returned with the error.
pub fn trace_seeds<S, V>(
    system: &S,
    seeds: &[Vec<f64>],
    settings: &ContinuationSettings,
    variants: V,
) -> (Vec<TraceResult>, Vec<(Vec<f64>, Error)>)
where
    S: NonlinearSystem + ?Sized,
    V: Fn(&[f64]) -> Vec<Vec<f64>>,
{
    let mut traces: Vec<TraceResult> = Vec::new();
    let mut failed = Vec::new();
    let near = 0.05 * settings.step_max + 1e3 * settings.newton_tol;
    for seed in seeds {
        let copies = variants(seed);
        if traces.iter().any(|t| copies.iter().any(|c| distance_to_trace(system, t, c) < near)) {
            continue;
        }
        match trace_curve(system, seed, settings) {
            Ok(t) => traces.push(t),
            Err(e) => failed.push((seed.clone(), e)),
        }
    }
    (traces, failed)
}

/// One affine slice `<normal, u> = offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Traces through every slice of a two-dimensional solution set.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceResult {
    /// `(slice index, trace)` in slice order.
    pub traces: Vec<(usize, TraceResult)>,
    /// Slices in which no seed converged.
    pub empty_slices: Vec<usize>,
}

/// Cuts a surface of solutions (`u = e + 2`) by each slice and traces the
/// resulting curves. Seeds are projected onto every slice by Newton.
pub fn slice_surface<S: NonlinearSystem + Clone>(
    system: &S,
    slices: &[Slice],
    seeds: &[Vec<f64>],
    settings: &ContinuationSettings,
) -> Result<SliceResult> {
    let (u, e) = (system.unknown_dim(), system.equation_dim());
    if u != e + 2 {
        return Err(Error::Precondition(format!(
            "slice_surface needs two more unknowns than equations, got {u} and {e}"
        )));
    }
    let mut out = SliceResult { traces: Vec::new(), empty_slices: Vec::new() };
    for (idx, slice) in slices.iter().enumerate() {
        if slice.normal.len() != u {
            return Err(Error::Invalid("slice normal has the wrong length".into()));
        }
        let sys = AffineSlice { inner: system.clone(), normal: slice.normal.clone(), offset: slice.offset };
        let projected: Vec<Vec<f64>> = seeds
            .iter()
            .filter_map(|s| newton_refine(&sys, s, settings).ok())
            .map(|r| r.solution)
            .filter(|p| sys.constraints(p).iter().all(|&g| g >= 0.0))
            .collect();
        let projected = dedup_sorted(&sys, projected, 10.0 * settings.newton_tol);
        let traces = trace_all(&sys, &projected, settings);
        if traces.is_empty() {
            out.empty_slices.push(idx);
        }
        out.traces.extend(traces.into_iter().map(|t| (idx, t)));
    }
    Ok(out)
}
