// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Scenes and brute-force oracles shared by the integration tests.
//!
//! The oracle curves below are written out from scratch (closed forms, no
//! calls into the library), so they check the library rather than echo it.

#![allow(dead_code)]

use frontier_core::scene::{FinslerMetric, ParametricHypersurface, Scene, SceneOptions, SceneSurface};
use nalgebra::{DMatrix, SymmetricEigen};

pub const TAU: f64 = std::f64::consts::TAU;

/// Closed-form planar curves with the library's orientation convention
/// (normal = tangent turned clockwise).
#[derive(Debug, Clone, Copy)]
pub enum Curve {
    Line { p: [f64; 2], d: [f64; 2], lo: f64, hi: f64 },
    Circle { c: [f64; 2], r: f64 },
    Ellipse { c: [f64; 2], a: f64, b: f64 },
}

impl Curve {
    pub fn range(&self) -> (f64, f64, bool) {
        match *self {
            Curve::Line { lo, hi, .. } => (lo, hi, false),
            _ => (0.0, TAU, true),
        }
    }

    pub fn point(&self, s: f64) -> [f64; 2] {
        match *self {
            Curve::Line { p, d, .. } => [p[0] + s * d[0], p[1] + s * d[1]],
            Curve::Circle { c, r } => [c[0] + r * s.cos(), c[1] + r * s.sin()],
            Curve::Ellipse { c, a, b } => [c[0] + a * s.cos(), c[1] + b * s.sin()],
        }
    }

    pub fn tangent(&self, s: f64) -> [f64; 2] {
        match *self {
            Curve::Line { d, .. } => d,
            Curve::Circle { r, .. } => [-r * s.sin(), r * s.cos()],
            Curve::Ellipse { a, b, .. } => [-a * s.sin(), b * s.cos()],
        }
    }

    pub fn normal(&self, s: f64) -> [f64; 2] {
        let t = self.tangent(s);
        let len = t[0].hypot(t[1]);
        [t[1] / len, -t[0] / len]
    }

    pub fn surface(&self) -> ParametricHypersurface {
        match *self {
            Curve::Line { p, d, lo, hi } => ParametricHypersurface::line(p, d, lo, hi).unwrap(),
            Curve::Circle { c, r } => ParametricHypersurface::circle(c, r).unwrap(),
            Curve::Ellipse { c, a, b } => ParametricHypersurface::ellipse(c, a, b, 0.0).unwrap(),
        }
    }
}

/// A curve with a quadratic metric `F = sqrt(d^T Q^-1 d)`.
#[derive(Debug, Clone, Copy)]
pub struct OracleSource {
    pub curve: Curve,
    /// Inverse of `Q`, symmetric 2x2.
    pub q_inv: [[f64; 2]; 2],
}

impl OracleSource {
    pub fn euclidean(curve: Curve) -> Self {
        OracleSource { curve, q_inv: [[1.0, 0.0], [0.0, 1.0]] }
    }

    /// Fronts moving at speed `eta` in every direction.
    pub fn speed(curve: Curve, eta: f64) -> Self {
        let k = 1.0 / (eta * eta);
        OracleSource { curve, q_inv: [[k, 0.0], [0.0, k]] }
    }

    pub fn time(&self, x: [f64; 2], s: f64) -> f64 {
        let p = self.curve.point(s);
        let d = [x[0] - p[0], x[1] - p[1]];
        let m = self.q_inv;
        (d[0] * (m[0][0] * d[0] + m[0][1] * d[1]) + d[1] * (m[1][0] * d[0] + m[1][1] * d[1])).sqrt()
    }

    /// Samples of the curve for [`OracleSource::critical_times`].
    pub fn table(&self, samples: usize) -> Vec<[f64; 2]> {
        let (lo, hi, periodic) = self.curve.range();
        let h = (hi - lo) / samples as f64;
        let count = if periodic { samples } else { samples + 1 };
        (0..count).map(|k| self.curve.point(lo + h * k as f64)).collect()
    }

    fn time_to(&self, x: [f64; 2], p: [f64; 2]) -> f64 {
        let d = [x[0] - p[0], x[1] - p[1]];
        let m = self.q_inv;
        (d[0] * (m[0][0] * d[0] + m[0][1] * d[1]) + d[1] * (m[1][0] * d[0] + m[1][1] * d[1])).sqrt()
    }

    /// Critical travel times from `x`, found on the sampled `table` and
    /// refined by parabolic interpolation. With `signed` the time takes the
    /// sign of `<x - gamma, n>`.
    pub fn critical_times(&self, x: [f64; 2], table: &[[f64; 2]], signed: bool) -> Vec<f64> {
        let (lo, hi, periodic) = self.curve.range();
        let samples = if periodic { table.len() } else { table.len() - 1 };
        let h = (hi - lo) / samples as f64;
        let vals: Vec<f64> = table.iter().map(|&p| self.time_to(x, p)).collect();
        let at = |k: isize| -> f64 {
            if periodic {
                vals[k.rem_euclid(samples as isize) as usize]
            } else {
                vals[k as usize]
            }
        };
        let mut out = Vec::new();
        let (start, end) = if periodic { (0, samples as isize) } else { (1, samples as isize) };
        for k in start..end {
            let (a, b, c) = (at(k - 1), at(k), at(k + 1));
            if (b - a) * (c - b) <= 0.0 && !(a == b && b == c) {
                let denom = a - 2.0 * b + c;
                let off = if denom.abs() > 0.0 { (0.5 * (a - c) / denom).clamp(-1.0, 1.0) } else { 0.0 };
                let s = lo + h * (k as f64 + off);
                let mut t = self.time(x, s);
                if signed {
                    let p = self.curve.point(s);
                    let n = self.curve.normal(s);
                    if (x[0] - p[0]) * n[0] + (x[1] - p[1]) * n[1] < 0.0 {
                        t = -t;
                    }
                }
                out.push(t);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

pub fn euclidean_scene(curves: &[Curve]) -> Scene {
    let surfaces = curves
        .iter()
        .enumerate()
        .map(|(i, c)| SceneSurface::euclidean(format!("m{i}"), c.surface()))
        .collect();
    Scene::with_surfaces(2, surfaces).unwrap()
}

/// Scene with one metric per source (speed `eta_i`).
pub fn speed_scene(curves: &[Curve], speeds: &[f64], options: SceneOptions) -> Scene {
    let surfaces = curves
        .iter()
        .zip(speeds)
        .enumerate()
        .map(|(i, (c, &eta))| SceneSurface::new(format!("m{i}"), c.surface(), FinslerMetric::scaled(2, eta).unwrap()))
        .collect();
    Scene::new(2, surfaces, options).unwrap()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|v| v * v).sum();
    let t = if len2 > 0.0 { (ab.iter().zip(&ap).map(|(u, v)| u * v).sum::<f64>() / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    dist(p, &q)
}

/// Distance from `p` to a set of polylines (single points count too).
pub fn point_polylines(p: &[f64], lines: &[Vec<Vec<f64>>]) -> f64 {
    let mut best = f64::INFINITY;
    for line in lines {
        if line.len() == 1 {
            best = best.min(dist(p, &line[0]));
        }
        for w in line.windows(2) {
            best = best.min(point_segment(p, &w[0], &w[1]));
        }
    }
    best
}

/// Segments bucketed on a uniform grid for nearest-distance queries.
pub struct SegmentIndex {
    segments: Vec<(Vec<f64>, Vec<f64>)>,
    cell: f64,
    buckets: std::collections::HashMap<Vec<i64>, Vec<usize>>,
}

impl SegmentIndex {
    pub fn new(lines: &[Vec<Vec<f64>>]) -> Self {
        let mut segments = Vec::new();
        for line in lines {
            if line.len() == 1 {
                segments.push((line[0].clone(), line[0].clone()));
            }
            for w in line.windows(2) {
                segments.push((w[0].clone(), w[1].clone()));
            }
        }
        let longest = segments.iter().map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
        let cell = longest.max(1e-3);
        let mut buckets: std::collections::HashMap<Vec<i64>, Vec<usize>> = Default::default();
        for (k, (a, b)) in segments.iter().enumerate() {
            let lo: Vec<i64> = a.iter().zip(b).map(|(u, v)| (u.min(*v) / cell).floor() as i64).collect();
            let hi: Vec<i64> = a.iter().zip(b).map(|(u, v)| (u.max(*v) / cell).floor() as i64).collect();
            let mut key = lo.clone();
            loop {
                buckets.entry(key.clone()).or_default().push(k);
                let mut d = 0;
                loop {
                    if d == key.len() {
                        break;
                    }
                    key[d] += 1;
                    if key[d] <= hi[d] {
                        break;
                    }
                    key[d] = lo[d];
                    d += 1;
                }
                if d == key.len() {
                    break;
                }
            }
        }
        SegmentIndex { segments, cell, buckets }
    }

    /// Exact distance from `p` to the nearest segment.
    pub fn distance(&self, p: &[f64]) -> f64 {
        if self.segments.is_empty() {
            return f64::INFINITY;
        }
        let center: Vec<i64> = p.iter().map(|v| (v / self.cell).floor() as i64).collect();
        let mut best = f64::INFINITY;
        for ring in 0i64.. {
            // segments met only by buckets from this ring outward are at
            // least `(ring - 1) * cell` away
            if ring > 0 && best <= (ring - 1) as f64 * self.cell {
                return best;
            }
            if ring > 64 {
                return self.segments.iter().map(|(a, b)| point_segment(p, a, b)).fold(f64::INFINITY, f64::min);
            }
            let mut offset = vec![-ring; p.len()];
            loop {
                if offset.iter().any(|o| o.abs() == ring) {
                    let key: Vec<i64> = center.iter().zip(&offset).map(|(c, o)| c + o).collect();
                    if let Some(list) = self.buckets.get(&key) {
                        for &k in list {
                            let (a, b) = &self.segments[k];
                            best = best.min(point_segment(p, a, b));
                        }
                    }
                }
                let mut d = 0;
                while d < offset.len() {
                    offset[d] += 1;
                    if offset[d] <= ring {
                        break;
                    }
                    offset[d] = -ring;
                    d += 1;
                }
                if d == offset.len() {
                    break;
                }
            }
        }
        best
    }
}

/// Symmetric Hausdorff distance between a sampled reference polyline and
/// traced polylines.
pub fn hausdorff(samples: &[Vec<f64>], lines: &[Vec<Vec<f64>>]) -> f64 {
    let traced = SegmentIndex::new(lines);
    let forward = samples.iter().map(|p| traced.distance(p)).fold(0.0, f64::max);
    let reference = SegmentIndex::new(&[samples.to_vec()]);
    let backward = lines.iter().flatten().map(|p| reference.distance(p)).fold(0.0, f64::max);
    forward.max(backward)
}

/// Catmull-Rom densification of a polyline, `sub` points per segment.
pub fn densify(line: &[Vec<f64>], sub: usize) -> Vec<Vec<f64>> {
    if line.len() < 3 {
        return line.to_vec();
    }
    let n = line.len();
    let mut out = Vec::with_capacity(n * sub);
    for i in 0..n - 1 {
        let p0 = &line[i.saturating_sub(1)];
        let p1 = &line[i];
        let p2 = &line[i + 1];
        let p3 = &line[(i + 2).min(n - 1)];
        for k in 0..sub {
            let t = k as f64 / sub as f64;
            let (t2, t3) = (t * t, t * t * t);
            let q: Vec<f64> = (0..p1.len())
                .map(|d| {
                    0.5 * (2.0 * p1[d]
                        + (-p0[d] + p2[d]) * t
                        + (2.0 * p0[d] - 5.0 * p1[d] + 4.0 * p2[d] - p3[d]) * t2
                        + (-p0[d] + 3.0 * p1[d] - 3.0 * p2[d] + p3[d]) * t3)
                })
                .collect();
            out.push(q);
        }
    }
    out.push(line[n - 1].clone());
    out
}

/// Largest algebraic residual of the best conic through planar points.
/// Points are centered and scaled to unit size and the conic coefficient
/// vector has unit norm.
pub fn conic_fit_residual(points: &[Vec<f64>]) -> f64 {
    let m = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / m;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / m;
    let scale = points.iter().map(|p| (p[0] - cx).hypot(p[1] - cy)).fold(0.0, f64::max).max(1e-300);
    let rows: Vec<[f64; 6]> = points
        .iter()
        .map(|p| {
            let (x, y) = ((p[0] - cx) / scale, (p[1] - cy) / scale);
            [x * x, x * y, y * y, x, y, 1.0]
        })
        .collect();
    let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
    let ata = a.transpose() * &a;
    let eig = SymmetricEigen::new(ata);
    let (k, _) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let c = eig.eigenvectors.column(k);
    rows.iter().map(|r| r.iter().zip(c.iter()).map(|(u, v)| u * v).sum::<f64>().abs()).fold(0.0, f64::max)
}

/// Raster cells of `[lo, hi]^2` split `res x res` in which some pair of
/// critical times (one per source) crosses. Critical times are order
/// statistics, hence continuous, so a sign change over the cell corners
/// certifies a tie inside the cell. Returns cell centers.
pub fn tie_cells(sources: &[OracleSource], bounds: [(f64, f64); 2], res: usize, signed: bool) -> Vec<[f64; 2]> {
    assert_eq!(sources.len(), 2, "raster oracle handles pairs");
    let tables: Vec<Vec<[f64; 2]>> = sources.iter().map(|s| s.table(720)).collect();
    let hx = (bounds[0].1 - bounds[0].0) / res as f64;
    let hy = (bounds[1].1 - bounds[1].0) / res as f64;
    let corner = |i: usize, j: usize| [bounds[0].0 + hx * i as f64, bounds[1].0 + hy * j as f64];
    let grid: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..=res)
        .map(|i| {
            (0..=res)
                .map(|j| {
                    let x = corner(i, j);
                    (
                        sources[0].critical_times(x, &tables[0], signed),
                        sources[1].critical_times(x, &tables[1], signed),
                    )
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::new();
    for i in 0..res {
        for j in 0..res {
            let cs = [&grid[i][j], &grid[i + 1][j], &grid[i][j + 1], &grid[i + 1][j + 1]];
            let n1 = cs[0].0.len();
            let n2 = cs[0].1.len();
            if cs.iter().any(|c| c.0.len() != n1 || c.1.len() != n2) {
                continue;
            }
            let mut hit = false;
            'pairs: for a in 0..n1 {
                for b in 0..n2 {
                    let d: Vec<f64> = cs.iter().map(|c| c.0[a] - c.1[b]).collect();
                    let pos = d.iter().any(|v| *v > 0.0);
                    let neg = d.iter().any(|v| *v < 0.0);
                    if (pos && neg) || d.contains(&0.0) {
                        hit = true;
                        break 'pairs;
                    }
                }
            }
            if hit {
                cells.push([bounds[0].0 + hx * (i as f64 + 0.5), bounds[1].0 + hy * (j as f64 + 0.5)]);
            }
        }
    }
    cells
}

/// Largest distance, in cell widths, from a tie cell to the polylines.
pub fn raster_gap(cells: &[[f64; 2]], lines: &[Vec<Vec<f64>>], cell: f64) -> f64 {
    let index = SegmentIndex::new(lines);
    cells.iter().map(|c| index.distance(c) / cell).fold(0.0, f64::max)
}

/// One representative surface per builtin kind (graph polynomials in both
/// dimensions).
pub fn surface_zoo() -> Vec<ParametricHypersurface> {
    use frontier_core::scene::{Interval, SurfaceKind};
    let graph2 = ParametricHypersurface::new(
        SurfaceKind::GraphPolynomial,
        2,
        vec![0.1, -0.3, 0.5, 0.2, -0.05],
        vec![Interval::new(-1.5, 1.5)],
        1,
    )
    .unwrap();
    // 3 x 3 coefficients of s1^i s2^j
    let graph3 = ParametricHypersurface::new(
        SurfaceKind::GraphPolynomial,
        3,
        vec![0.2, 0.1, 0.3, -0.2, 0.05, 0.1, 0.4, -0.1, 0.02],
        vec![Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)],
        1,
    )
    .unwrap();
    let mut patch = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let (u, v) = (i as f64, j as f64);
            let p = match (i, j) {
                (1, 0) => [1.0, 0.0, 0.1],
                (0, 1) => [0.0, 1.0, -0.2],
                (0, 0) => [0.1, 0.2, 0.3],
                _ => [0.05 * u, -0.03 * v, 0.2 + 0.1 * u * v],
            };
            patch.extend_from_slice(&p);
        }
    }
    let patch = ParametricHypersurface::new(
        SurfaceKind::BiquadraticPatch,
        3,
        patch,
        vec![Interval::new(-1.0, 1.0), Interval::new(-1.0, 1.0)],
        1,
    )
    .unwrap();
    vec![
        ParametricHypersurface::line([0.2, -0.1], [0.6, 0.8], -2.0, 2.0).unwrap(),
        ParametricHypersurface::circle([0.3, -0.4], 1.3).unwrap(),
        ParametricHypersurface::ellipse([0.1, 0.2], 2.0, 0.7, 0.5).unwrap(),
        ParametricHypersurface::sphere([0.1, -0.2, 0.3], 1.4, 1.2).unwrap(),
        ParametricHypersurface::plane([0.0, 0.0, 1.0], [1.0, 0.2, 0.0], [0.0, 1.0, 0.3], 2.0).unwrap(),
        graph2,
        graph3,
        ParametricHypersurface::fourier_curve(&[[0.1, 0.0, -0.2, 0.0], [1.0, 0.1, 0.0, 0.8], [0.05, 0.1, 0.1, -0.04]])
            .unwrap(),
        patch,
    ]
}

/// A random parameter inside the domain, kept off the edges.
pub fn random_parameter(surface: &ParametricHypersurface, rng: &mut impl rand::Rng) -> Vec<f64> {
    surface
        .domain()
        .iter()
        .map(|iv| {
            let pad = if iv.periodic { 0.0 } else { 0.05 * iv.length() };
            rng.random_range(iv.lo + pad..iv.hi - pad)
        })
        .collect()
}

/// Largest distance of `points` to the Catmull-Rom interpolant of `lines`.
pub fn distance_to_curves<'a>(points: impl IntoIterator<Item = &'a Vec<f64>>, lines: &[Vec<Vec<f64>>]) -> f64 {
    let dense: Vec<Vec<Vec<f64>>> = lines.iter().map(|l| densify(l, 16)).collect();
    let index = SegmentIndex::new(&dense);
    points.into_iter().map(|p| index.distance(p)).fold(0.0, f64::max)
}

/// Symmetric distance between two traced curve sets, each vertex measured
/// against the other set's interpolant.
pub fn curve_distance(a: &[Vec<Vec<f64>>], b: &[Vec<Vec<f64>>]) -> f64 {
    distance_to_curves(a.iter().flatten(), b).max(distance_to_curves(b.iter().flatten(), a))
}
