// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Travel-time functions, momental fronts and the graph of the time function.
//!
//! Under `H(xi) = sqrt(xi^T Q xi)` rays are straight, `x = p + t Q xi / H(xi)`,
//! so reaching displacement `d` takes `F = sqrt(d^T Q^-1 d)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, symmetric_eigen, Matrix};
use crate::scene::{FinslerMetric, Jet, ParametricHypersurface};
use crate::series::{quadratic_form_series, Series};
use crate::solver::{newton_refine, ContinuationSettings, FnSystem};

/// Criticality tolerance for footpoints handed to [`time_graph_point`].
pub const CRITICAL_TOL: f64 = 1e-8;

/// Derivatives of `F(x, s)` at one `(x, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFunctionJet {
    pub value: f64,
    /// `dF/ds_a`.
    pub grad_s: Vec<f64>,
    /// `d^2 F / ds_a ds_b`.
    pub hess_s: Matrix,
    /// `dF/dx_j`.
    pub grad_x: Vec<f64>,
    /// `d^2 F / ds_a dx_j`, one row per parameter.
    pub mixed: Matrix,
    /// For each parameter axis `a`, derivatives of `tau -> F(x, s + tau e_a)`
    /// of orders `0..=order` (empty when `order <= 2`).
    pub higher_s: Vec<Vec<f64>>,
}

/// Closed-form jet of the travel time from `gamma(s)` to `x`.
pub fn travel_time_jet(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    s: &[f64],
    order: usize,
) -> Result<TimeFunctionJet> {
    let jet = surface.evaluate_jet(s, order.max(2))?;
    let mut tj = time_jet_from(&jet, metric, x)?;
    if order > 2 {
        tj.higher_s = (0..surface.param_dim())
            .map(|a| {
                let mut w = vec![0.0; surface.param_dim()];
                w[a] = 1.0;
                directional_from_jet(&jet, metric, x, &w)
            })
            .collect::<Result<_>>()?;
    }
    Ok(tj)
}

/// First and second derivatives of the travel time from a jet of order >= 2.
pub fn time_jet_from(jet: &Jet, metric: &FinslerMetric, x: &[f64]) -> Result<TimeFunctionJet> {
    let p = jet.param_dim();
    let n = jet.ambient_dim();
    let d: Vec<f64> = x.iter().zip(jet.position()).map(|(a, b)| a - b).collect();
    let pd = metric.q_inv().mul_vec(&d);
    let value = dot(&d, &pd).max(0.0).sqrt();
    if !(value > 0.0) {
        return Err(Error::SingularTime);
    }
    let grad_s: Vec<f64> = (0..p).map(|a| -dot(&pd, jet.first(a)) / value).collect();
    let mut hess_s = Matrix::zeros(p, p);
    for a in 0..p {
        let pga = metric.q_inv().mul_vec(jet.first(a));
        for b in 0..p {
            hess_s[(a, b)] =
                (dot(&pga, jet.first(b)) - dot(&pd, jet.second(a, b))) / value - grad_s[a] * grad_s[b] / value;
        }
    }
    let grad_x: Vec<f64> = pd.iter().map(|v| v / value).collect();
    let mut mixed = Matrix::zeros(p, n);
    for a in 0..p {
        let pga = metric.q_inv().mul_vec(jet.first(a));
        for j in 0..n {
            mixed[(a, j)] = (-pga[j] - grad_s[a] * grad_x[j]) / value;
        }
    }
    Ok(TimeFunctionJet { value, grad_s, hess_s, grad_x, mixed, higher_s: Vec::new() })
}

/// Derivatives `0..=order` of `tau -> F(x, s + tau w)` at `tau = 0`.
pub fn directional_derivatives(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    s: &[f64],
    w: &[f64],
    order: usize,
) -> Result<Vec<f64>> {
    let jet = surface.evaluate_jet(s, order)?;
    directional_from_jet(&jet, metric, x, w)
}

fn directional_from_jet(jet: &Jet, metric: &FinslerMetric, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let mut d = jet.along(w);
    for (k, c) in d.iter_mut().enumerate() {
        if k == 0 {
            for (ci, xi) in c.iter_mut().zip(x) {
                *ci = xi - *ci;
            }
        } else {
            c.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let sq: Series = quadratic_form_series(&d, metric.q_inv());
    let f = sq.sqrt().ok_or(Error::SingularTime)?;
    Ok(f.derivatives())
}

/// Ray velocity `v = Q n / H(n)` of the oriented conormal and its parameter
/// derivatives, from a jet of order >= 2.
pub fn ray_velocity_jet(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    jet: &Jet,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = surface.normal_from_jet(jet)?;
    let dn = surface.normal_derivatives(jet);
    let qn = metric.q().mul_vec(&n);
    let h = dot(&n, &qn).sqrt();
    let v: Vec<f64> = qn.iter().map(|c| c / h).collect();
    let dv = dn
        .iter()
        .map(|dna| {
            let qdn = metric.q().mul_vec(dna);
            let k = dot(&qn, dna) / (h * h * h);
            qdn.iter().zip(&qn).map(|(a, b)| a / h - b * k).collect()
        })
        .collect();
    Ok((v, dv))
}

/// One point of a momental front.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub s: Vec<f64>,
    /// Unit conormal at the footpoint (`H = 1`).
    pub xi: Vec<f64>,
    /// Orientation sign the sample was propagated with.
    pub branch: i8,
}

/// Samples the front at time `t` on a regular parameter grid of `samples`
/// nodes per axis. With `both_branches`, both conormal signs are emitted.
pub fn momental_front(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    t: f64,
    samples: usize,
    both_branches: bool,
) -> Result<Vec<FrontSample>> {
    if samples < 2 {
        return Err(Error::Invalid("momental_front needs at least 2 samples".into()));
    }
    let branches: &[i8] = if both_branches { &[1, -1] } else { &[1] };
    let mut out = Vec::new();
    for &branch in branches {
        for s in surface.validation_grid(samples) {
            let xi0 = crate::scene::unit_conormal(surface, metric, &s)?;
            let xi: Vec<f64> = xi0.iter().map(|v| v * branch as f64).collect();
            let v = metric.front_velocity(&xi)?;
            let p = surface.point(&s)?;
            let x = p.iter().zip(&v).map(|(a, b)| a + t * b).collect();
            out.push(FrontSample { x, t, s, xi, branch: branch * surface.orientation() });
        }
    }
    Ok(out)
}

/// A point `(x, t)` of the graph of the time function.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGraphPoint {
    /// `(x_1, .., x_n, t)`.
    pub point: Vec<f64>,
    /// Eigenvalues of `d^2 F / ds^2`, ascending.
    pub hessian_eigenvalues: Vec<f64>,
    pub residual: f64,
}

/// Lifts a critical footpoint to the graph of the time function.
pub fn time_graph_point(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    s: &[f64],
) -> Result<TimeGraphPoint> {
    let tj = travel_time_jet(surface, metric, x, s, 2)?;
    let residual = norm(&tj.grad_s);
    if !(residual < CRITICAL_TOL) {
        return Err(Error::NotCritical { residual });
    }
    let (eig, _) = symmetric_eigen(&tj.hess_s);
    let mut point = x.to_vec();
    point.push(tj.value);
    Ok(TimeGraphPoint { point, hessian_eigenvalues: eig, residual })
}

/// All parameters where `s -> F(x, s)` is critical, sorted lexicographically.
/// One-parameter surfaces are scanned for sign changes of `dF/ds` on
/// `samples` intervals and refined by safeguarded Newton; two-parameter
/// surfaces run Newton from every node of a `samples x samples` grid.
pub fn critical_footpoints(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    samples: usize,
) -> Result<Vec<Vec<f64>>> {
    if x.len() != surface.ambient_dim() {
        return Err(Error::Invalid(format!("point has {} coordinates", x.len())));
    }
    if surface.param_dim() == 1 {
        critical_1d(surface, metric, x, samples)
    } else {
        critical_2d(surface, metric, x, samples)
    }
}

fn dfds(surface: &ParametricHypersurface, metric: &FinslerMetric, x: &[f64], s: f64) -> Option<(f64, f64)> {
    let tj = travel_time_jet(surface, metric, x, &[s], 2).ok()?;
    Some((tj.grad_s[0], tj.hess_s[(0, 0)]))
}

fn critical_1d(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    samples: usize,
) -> Result<Vec<Vec<f64>>> {
    let iv = surface.domain()[0];
    let n = samples.max(4);
    let nodes: Vec<f64> = (0..=n).map(|k| iv.lo + iv.length() * k as f64 / n as f64).collect();
    let vals: Vec<Option<(f64, f64)>> = nodes.iter().map(|&s| dfds(surface, metric, x, s)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for k in 0..n {
        let (Some((ga, _)), Some((gb, _))) = (vals[k], vals[k + 1]) else { continue };
        let (a, b) = (nodes[k], nodes[k + 1]);
        if ga == 0.0 {
            roots.push(a);
            continue;
        }
        if ga * gb > 0.0 {
            // a double sign change inside the cell shows up as a derivative
            // extremum near zero; try Newton from the midpoint
            if let Some(r) = newton_1d(surface, metric, x, 0.5 * (a + b), a, b) {
                roots.push(r);
            }
            continue;
        }
        if let Some(r) = bracketed_root(surface, metric, x, a, b, ga) {
            roots.push(r);
        }
    }
    if !iv.periodic {
        if let Some((g, _)) = vals[n] {
            if g == 0.0 {
                roots.push(nodes[n]);
            }
        }
    }
    let mut roots: Vec<f64> = roots
        .into_iter()
        .map(|r| if iv.periodic { crate::math::wrap(r, iv.lo, iv.length()) } else { r })
        .collect();
    roots.sort_by(f64::total_cmp);
    let tol = 1e-9 * iv.length();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        let dup = out.iter().any(|q| {
            let d = (q[0] - r).abs();
            d < tol || (iv.periodic && (iv.length() - d).abs() < tol)
        });
        if !dup {
            out.push(vec![r]);
        }
    }
    Ok(out)
}

/// Newton on `dF/ds` kept inside `[a, b]`.
fn newton_1d(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    s0: f64,
    a: f64,
    b: f64,
) -> Option<f64> {
    let mut s = s0;
    for _ in 0..30 {
        let (g, h) = dfds(surface, metric, x, s)?;
        if g.abs() < 1e-13 {
            return Some(s);
        }
        if h == 0.0 {
            return None;
        }
        s -= g / h;
        if !(s >= a && s <= b) {
            return None;
        }
    }
    let (g, _) = dfds(surface, metric, x, s)?;
    (g.abs() < 1e-10).then_some(s)
}

/// Newton safeguarded by bisection on a sign-changing bracket.
fn bracketed_root(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    mut a: f64,
    mut b: f64,
    ga: f64,
) -> Option<f64> {
    let sign_a = ga.signum();
    let mut s = 0.5 * (a + b);
    for _ in 0..200 {
        let (g, h) = dfds(surface, metric, x, s)?;
        if g.abs() < 1e-15 {
            return Some(s);
        }
        if g.signum() == sign_a {
            a = s;
        } else {
            b = s;
        }
        if (b - a).abs() < 1e-15 * (1.0 + s.abs()) {
            return Some(s);
        }
        // a converged Newton step may land on the bracket end it came from
        let newton = if h != 0.0 { s - g / h } else { f64::NAN };
        s = if newton >= a && newton <= b { newton } else { 0.5 * (a + b) };
    }
    Some(s)
}

fn critical_2d(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    samples: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut sys = FnSystem::new(
        2,
        2,
        |s| Ok(travel_time_jet(surface, metric, x, s, 2)?.grad_s),
        |s| Ok(travel_time_jet(surface, metric, x, s, 2)?.hess_s),
    );
    for (a, iv) in surface.domain().iter().enumerate() {
        if iv.periodic {
            sys = sys.with_period(a, iv.lo, iv.length());
        }
    }
    let settings = ContinuationSettings { newton_tol: 1e-12, newton_max_iter: 40, ..Default::default() };
    let n = samples.max(4);
    let nodes = surface.validation_grid(n);
    let size: Vec<f64> = nodes
        .iter()
        .map(|s| travel_time_jet(surface, metric, x, s, 1).map_or(f64::INFINITY, |tj| dot(&tj.grad_s, &tj.grad_s)))
        .collect();
    // Newton starts only from discrete local minima of |dF/ds|
    let periodic: Vec<bool> = surface.domain().iter().map(|iv| iv.periodic).collect();
    let step = |k: usize, d: isize, a: usize| -> Option<usize> {
        let m = k as isize + d;
        if (0..n as isize).contains(&m) {
            Some(m as usize)
        } else if periodic[a] {
            Some(m.rem_euclid(n as isize) as usize)
        } else {
            None
        }
    };
    let mut found = Vec::new();
    for (idx, node) in nodes.iter().enumerate() {
        let (i, j) = (idx / n, idx % n);
        let lowest = size[idx].is_finite()
            && (-1..=1).all(|di| {
                (-1..=1).all(|dj| match (step(i, di, 0), step(j, dj, 1)) {
                    (Some(a), Some(b)) => size[a * n + b] >= size[idx],
                    _ => true,
                })
            });
        if !lowest {
            continue;
        }
        if let Ok(rep) = newton_refine(&sys, node, &settings) {
            if surface.normalize_parameter(&rep.solution).is_ok() {
                found.push(rep.solution);
            }
        }
    }
    let radius = 1e-7 * surface.domain().iter().map(|iv| iv.length()).fold(0.0, f64::max);
    Ok(crate::solver::dedup_sorted(&sys, found, radius))
}

/// Position and parameter derivative of the front point `gamma(s) + t v(s)`.
pub fn front_point(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    t: f64,
    s: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let jet = surface.evaluate_jet(s, 2)?;
    let (v, dv) = ray_velocity_jet(surface, metric, &jet)?;
    let x = jet.position().iter().zip(&v).map(|(a, b)| a + t * b).collect();
    let dx = (0..surface.param_dim())
        .map(|a| jet.first(a).iter().zip(&dv[a]).map(|(g, d)| g + t * d).collect())
        .collect();
    Ok((x, dx))
}

/// Cusp parameters of the planar front at time `t`, where the front map
/// `s -> gamma(s) + t v(s)` stops being immersive. The front tangent is
/// always parallel to `gamma'`, so cusps are sign changes of
/// `<dx/ds, gamma'>`, found on `samples` intervals and bisected.
pub fn front_cusps(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    t: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if surface.param_dim() != 1 {
        return Err(Error::Invalid("front cusps are computed for curves only".into()));
    }
    let speed = |s: f64| -> Result<f64> {
        let (_, dx) = front_point(surface, metric, t, &[s])?;
        let g = surface.evaluate_jet(&[s], 1)?;
        Ok(dot(&dx[0], g.first(0)))
    };
    let iv = surface.domain()[0];
    let n = samples.max(8);
    let nodes: Vec<f64> = (0..=n).map(|k| iv.lo + iv.length() * k as f64 / n as f64).collect();
    let vals = nodes.iter().map(|&s| speed(s)).collect::<Result<Vec<f64>>>()?;
    let mut cusps = Vec::new();
    for k in 0..n {
        let (mut a, mut b) = (nodes[k], nodes[k + 1]);
        let (fa, fb) = (vals[k], vals[k + 1]);
        if fa == 0.0 {
            cusps.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = speed(m)?;
            if fm == 0.0 {
                a = m;
                b = m;
                break;
            }
            if fm.signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        cusps.push(0.5 * (a + b));
    }
    Ok(cusps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn line_foot() {
        let l = ParametricHypersurface::line([0.0, 0.0], [1.0, 0.0], -10.0, 10.0).unwrap();
        let tj = travel_time_jet(&l, &FinslerMetric::euclidean(2), &[0.0, 1.0], &[0.0], 2).unwrap();
        assert_eq!(tj.value, 1.0);
        assert_eq!(tj.grad_s, vec![0.0]);
    }

    #[test]
    fn circle_near_point_is_minimum() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let tj = travel_time_jet(&c, &FinslerMetric::euclidean(2), &[3.0, 0.0], &[0.0], 2).unwrap();
        assert!((tj.value - 2.0).abs() < 1e-15);
        assert!(tj.grad_s[0].abs() < 1e-15);
        assert!(tj.hess_s[(0, 0)] > 0.0);
    }

    #[test]
    fn scaled_metric_time() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let m = FinslerMetric::scaled(2, 2.0).unwrap();
        let tj = travel_time_jet(&c, &m, &[3.0, 0.0], &[0.0], 2).unwrap();
        assert!((tj.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn on_surface_is_singular() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let r = travel_time_jet(&c, &FinslerMetric::euclidean(2), &[1.0, 0.0], &[0.0], 2);
        assert_eq!(r, Err(Error::SingularTime));
    }

    #[test]
    fn higher_derivatives_agree_with_second_order() {
        let e = ParametricHypersurface::ellipse([0.0, 0.0], 2.0, 1.0, 0.3).unwrap();
        let m = FinslerMetric::new(Matrix::from_rows(&[&[2.0, 0.3], &[0.3, 1.0]])).unwrap();
        let tj = travel_time_jet(&e, &m, &[0.4, -0.7], &[1.1], 6).unwrap();
        let h = &tj.higher_s[0];
        assert!((h[0] - tj.value).abs() < 1e-14);
        assert!((h[1] - tj.grad_s[0]).abs() < 1e-13);
        assert!((h[2] - tj.hess_s[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn graph_points() {
        let l = ParametricHypersurface::line([0.0, 0.0], [1.0, 0.0], -10.0, 10.0).unwrap();
        let e2 = FinslerMetric::euclidean(2);
        let g = time_graph_point(&l, &e2, &[0.0, 2.0], &[0.0]).unwrap();
        assert_eq!(g.point, vec![0.0, 2.0, 2.0]);

        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let crit = critical_footpoints(&c, &e2, &[3.0, 0.0], 64).unwrap();
        assert_eq!(crit.len(), 2);
        let times: Vec<f64> = crit
            .iter()
            .map(|s| time_graph_point(&c, &e2, &[3.0, 0.0], s).unwrap().point[2])
            .collect();
        assert!((times[0] - 2.0).abs() < 1e-12 && (times[1] - 4.0).abs() < 1e-12);

        assert!(matches!(
            time_graph_point(&c, &e2, &[3.0, 0.0], &[0.5]),
            Err(Error::NotCritical { .. })
        ));
    }

    #[test]
    fn footpoints_are_refined_to_full_precision() {
        // the far footpoints are found by Newton steps that end on the
        // bracket boundary
        let e2 = FinslerMetric::euclidean(2);
        for (c, r) in [([-2.0, 0.0], 1.0), ([2.0, 0.0], 0.5)] {
            let circle = ParametricHypersurface::circle(c, r).unwrap();
            let crit = critical_footpoints(&circle, &e2, &[0.0, 1.0], 64).unwrap();
            assert_eq!(crit.len(), 2);
            for s in &crit {
                let g = travel_time_jet(&circle, &e2, &[0.0, 1.0], s, 1).unwrap().grad_s[0];
                assert!(g.abs() < 1e-14, "{g}");
            }
        }
    }

    #[test]
    fn ellipse_center_footpoints() {
        let e = ParametricHypersurface::ellipse([0.0, 0.0], 2.0, 1.0, 0.0).unwrap();
        let e2 = FinslerMetric::euclidean(2);
        let crit = critical_footpoints(&e, &e2, &[0.0, 0.0], 64).unwrap();
        let expected = [0.0, PI / 2.0, PI, 1.5 * PI];
        assert_eq!(crit.len(), 4);
        for (s, want) in crit.iter().zip(expected) {
            assert!((s[0] - want).abs() < 1e-9, "{s:?}");
        }
        let t: Vec<f64> = crit.iter().map(|s| time_graph_point(&e, &e2, &[0.0, 0.0], s).unwrap().point[2]).collect();
        for (a, b) in t.iter().zip([2.0, 1.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_fronts() {
        let c = ParametricHypersurface::circle([0.0, 0.0], 1.0).unwrap();
        let e2 = FinslerMetric::euclidean(2);
        for f in momental_front(&c, &e2, 1.0, 16, false).unwrap() {
            assert!((norm(&f.x) - 2.0).abs() < 1e-14);
        }
        let inward = c.clone().with_orientation(-1);
        for f in momental_front(&inward, &e2, 1.0, 16, false).unwrap() {
            assert!(norm(&f.x) < 1e-14);
        }
    }

    #[test]
    fn ellipse_front_has_four_cusps() {
        let e = ParametricHypersurface::ellipse([0.0, 0.0], 2.0, 1.0, 0.0).unwrap().with_orientation(-1);
        let cusps = front_cusps(&e, &FinslerMetric::euclidean(2), 1.0, 256).unwrap();
        assert_eq!(cusps.len(), 4);
    }

    #[test]
    fn sphere_critical_points() {
        let s = ParametricHypersurface::sphere([0.0; 3], 1.0, 1.4).unwrap();
        let crit = critical_footpoints(&s, &FinslerMetric::euclidean(3), &[3.0, 0.0, 0.0], 12).unwrap();
        // near point (lon 0) and far point (lon pi), both at latitude 0
        assert_eq!(crit.len(), 2, "{crit:?}");
    }
}
