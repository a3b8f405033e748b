// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Solver and conflict-set invariants on the test scenes.

mod common;

use common::*;
use frontier_core::classify::transversality_margin_conflict;
use frontier_core::conflict::{build_conflict_system, conflict_set, oriented_conflict_set, symmetry_set, ConflictPoint, ConflictSet};
use frontier_core::kite::gauss_image_of_lift;
use frontier_core::linalg::{dot, Matrix};
use frontier_core::scene::{ParametricHypersurface, Scene, SceneOptions, SceneSurface};
use frontier_core::solver::{trace_curve, ContinuationSettings, NonlinearSystem};
use frontier_core::Result;

const CIRCLES_BOX: [(f64, f64); 2] = [(-5.0, 5.0), (-4.0, 4.0)];

/// Fine enough that interpolating between vertices is accurate to 1e-9.
fn dense() -> ContinuationSettings {
    ContinuationSettings::default().with_step_max(2e-3)
}

fn circles() -> Scene {
    euclidean_scene(&[Curve::Circle { c: [-2.0, 0.0], r: 1.0 }, Curve::Circle { c: [2.0, 0.0], r: 0.5 }])
}

fn lines_of(set: &ConflictSet) -> Vec<Vec<Vec<f64>>> {
    set.branches.iter().map(|b| b.points.iter().map(|p| p.x.clone()).collect()).collect()
}

/// Same solutions, equations multiplied by a constant.
struct Scaled<S>(S, f64);

impl<S: NonlinearSystem> NonlinearSystem for Scaled<S> {
    fn unknown_dim(&self) -> usize {
        self.0.unknown_dim()
    }
    fn equation_dim(&self) -> usize {
        self.0.equation_dim()
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.residual(u)?.into_iter().map(|v| v * self.1).collect())
    }
    fn jacobian(&self, u: &[f64]) -> Result<Matrix> {
        let j = self.0.jacobian(u)?;
        let mut out = Matrix::zeros(j.rows(), j.cols());
        for r in 0..j.rows() {
            for c in 0..j.cols() {
                out[(r, c)] = j[(r, c)] * self.1;
            }
        }
        Ok(out)
    }
    fn constraints(&self, u: &[f64]) -> Vec<f64> {
        self.0.constraints(u)
    }
    fn constraint_gradients(&self, u: &[f64]) -> Vec<Vec<f64>> {
        self.0.constraint_gradients(u)
    }
    fn period(&self, index: usize) -> Option<(f64, f64)> {
        self.0.period(index)
    }
}

#[test]
fn vertices_solve_the_system() {
    let scene = circles();
    let settings = ContinuationSettings::default();
    let set = conflict_set(&scene, &CIRCLES_BOX, &settings).unwrap();
    let sys = build_conflict_system(&scene, false, CIRCLES_BOX.to_vec()).unwrap();
    for br in &set.branches {
        for u in &br.trace.points {
            let r = sys.residual(u).unwrap();
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 10.0 * settings.newton_tol, "{norm}");
        }
    }
}

#[test]
fn step_halving_is_stable() {
    let scene = circles();
    let reference = lines_of(&conflict_set(&scene, &CIRCLES_BOX, &dense()).unwrap());
    let base = ContinuationSettings::default();
    let halved = ContinuationSettings { step_init: base.step_init / 2.0, ..base.clone() };
    let d: Vec<f64> = [base, halved]
        .iter()
        .map(|settings| {
            let set = conflict_set(&scene, &CIRCLES_BOX, settings).unwrap();
            distance_to_curves(lines_of(&set).iter().flatten(), &reference)
        })
        .collect();
    assert!(d[0] < 1e-8 && (d[0] - d[1]).abs() < 1e-6, "{d:?}");
}

#[test]
fn rescaled_equations_trace_the_same_curve() {
    let scene = circles();
    let settings = ContinuationSettings::default();
    let sys = build_conflict_system(&scene, false, CIRCLES_BOX.to_vec()).unwrap();
    let set = conflict_set(&scene, &CIRCLES_BOX, &settings).unwrap();
    for br in &set.branches {
        let seed = &br.trace.points[br.trace.points.len() / 2];
        let a = trace_curve(&sys, seed, &settings).unwrap();
        let b = trace_curve(&Scaled(&sys, 7.3), seed, &settings).unwrap();
        let d = curve_distance(std::slice::from_ref(&a.points), std::slice::from_ref(&b.points));
        assert!(d < 1e-8, "{d}");
    }
}

#[test]
fn finer_seeding_finds_nothing_new() {
    let scene = circles();
    let settings = dense();
    let coarse = Scene::new(2, scene.surfaces().to_vec(), SceneOptions { seed_density: 12, ..Default::default() }).unwrap();
    let fine = Scene::new(2, scene.surfaces().to_vec(), SceneOptions { seed_density: 120, ..Default::default() }).unwrap();
    let a = conflict_set(&coarse, &CIRCLES_BOX, &settings).unwrap();
    let b = conflict_set(&fine, &CIRCLES_BOX, &settings).unwrap();
    assert_eq!(a.branches.len(), b.branches.len());
    let d = curve_distance(&lines_of(&a), &lines_of(&b));
    assert!(d < 1e-6, "{d}");
}

#[test]
fn runs_are_deterministic() {
    let scene = circles();
    let settings = ContinuationSettings::default();
    let a = format!("{:?}", conflict_set(&scene, &CIRCLES_BOX, &settings).unwrap());
    let b = format!("{:?}", conflict_set(&scene, &CIRCLES_BOX, &settings).unwrap());
    assert_eq!(a, b);
}

#[test]
fn unoriented_set_is_union_over_orientations() {
    let curves = [Curve::Circle { c: [-2.0, 0.0], r: 1.0 }, Curve::Circle { c: [2.0, 0.0], r: 0.5 }];
    let settings = dense();
    let unoriented = conflict_set(&euclidean_scene(&curves), &CIRCLES_BOX, &settings).unwrap();
    let mut union = Vec::new();
    for (o1, o2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let surfaces = vec![
            SceneSurface::euclidean("a", curves[0].surface().with_orientation(o1)),
            SceneSurface::euclidean("b", curves[1].surface().with_orientation(o2)),
        ];
        let scene = Scene::with_surfaces(2, surfaces).unwrap();
        union.extend(lines_of(&oriented_conflict_set(&scene, &CIRCLES_BOX, &settings).unwrap()));
    }
    let d = curve_distance(&lines_of(&unoriented), &union);
    assert!(d < 1e-6, "{d}");
}

#[test]
fn swapping_surfaces_keeps_the_set() {
    let curves = [Curve::Circle { c: [-2.0, 0.0], r: 1.0 }, Curve::Circle { c: [2.0, 0.0], r: 0.5 }];
    let settings = dense();
    let a = conflict_set(&euclidean_scene(&curves), &CIRCLES_BOX, &settings).unwrap();
    let b = conflict_set(&euclidean_scene(&[curves[1], curves[0]]), &CIRCLES_BOX, &settings).unwrap();
    let d = curve_distance(&lines_of(&a), &lines_of(&b));
    assert!(d < 1e-8, "{d}");
}

fn moved_scene(angle: f64, shift: [f64; 2]) -> Scene {
    let (c, s) = (angle.cos(), angle.sin());
    let map = |p: [f64; 2]| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]];
    let e = ParametricHypersurface::ellipse(map([-2.0, 0.3]), 1.2, 0.6, 0.4 + angle).unwrap();
    let k = ParametricHypersurface::circle(map([2.0, -0.2]), 0.7).unwrap();
    Scene::with_surfaces(2, vec![SceneSurface::euclidean("e", e), SceneSurface::euclidean("k", k)]).unwrap()
}

#[test]
fn rigid_motions_move_the_set() {
    let (angle, shift): (f64, [f64; 2]) = (0.7, [0.4, -0.3]);
    let (c, s) = (angle.cos(), angle.sin());
    let bounds = [(-4.5, 4.5), (-4.5, 4.5)];
    let settings = dense();
    let a = conflict_set(&moved_scene(0.0, [0.0, 0.0]), &bounds, &settings).unwrap();
    let b_bounds = [(bounds[0].0 + shift[0], bounds[0].1 + shift[0]), (bounds[1].0 + shift[1], bounds[1].1 + shift[1])];
    let moved = moved_scene(angle, shift);
    let b = conflict_set(&moved, &b_bounds, &settings).unwrap();
    let a_moved: Vec<Vec<Vec<f64>>> = lines_of(&a)
        .into_iter()
        .map(|l| l.into_iter().map(|p| vec![c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]).collect())
        .collect();
    // the boxes differ after rotation; compare vertices inside a disc that
    // both boxes contain
    let inside = |p: &&Vec<f64>| dist(p, &shift) < 3.5;
    let b_lines = lines_of(&b);
    let d = distance_to_curves(a_moved.iter().flatten().filter(inside), &b_lines)
        .max(distance_to_curves(b_lines.iter().flatten().filter(inside), &a_moved));
    assert!(d < 1e-7, "{d}");
    // margins are invariant at corresponding points
    let base = moved_scene(0.0, [0.0, 0.0]);
    for cp in a.all_points().step_by(7) {
        let x = vec![c * cp.x[0] - s * cp.x[1] + shift[0], s * cp.x[0] + c * cp.x[1] + shift[1]];
        let footpoints: Vec<Vec<f64>> = cp
            .footpoints
            .iter()
            .zip([0.0, angle])
            .map(|(f, turn)| vec![f[0] + turn])
            .collect();
        let q = ConflictPoint::new(&moved, x, cp.t, cp.surfaces.clone(), footpoints, 1.0);
        let m0 = transversality_margin_conflict(&base, cp).unwrap();
        let m1 = transversality_margin_conflict(&moved, &q).unwrap();
        assert!((m0 - m1).abs() <= 1e-10 * m0.abs().max(1e-300), "{m0} vs {m1}");
    }
}

#[test]
fn conflict_points_are_equidistant() {
    let curves = [Curve::Circle { c: [-2.0, 0.0], r: 1.0 }, Curve::Circle { c: [2.0, 0.0], r: 0.5 }];
    let set = conflict_set(&euclidean_scene(&curves), &CIRCLES_BOX, &ContinuationSettings::default()).unwrap();
    for cp in set.all_points() {
        for (i, curve) in curves.iter().enumerate() {
            let src = OracleSource::euclidean(*curve);
            let s = cp.footpoints[i][0];
            let t = src.time([cp.x[0], cp.x[1]], s);
            assert!((t - cp.t.abs()).abs() < 1e-8);
            // x - gamma(s) is normal to the curve
            let p = curve.point(s);
            let tan = curve.tangent(s);
            assert!(((cp.x[0] - p[0]) * tan[0] + (cp.x[1] - p[1]) * tan[1]).abs() < 1e-8);
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn labels_are_constant_between_margin_dips() {
    let e = ParametricHypersurface::ellipse([0.0, 0.0], 2.0, 1.0, 0.0).unwrap();
    let scene = Scene::with_surfaces(2, vec![SceneSurface::euclidean("e", e)]).unwrap();
    let settings = ContinuationSettings::default();
    let sym = symmetry_set(&scene, &[(-3.0, 3.0), (-2.0, 2.0)], &settings).unwrap();
    let circles = conflict_set(&circles(), &CIRCLES_BOX, &settings).unwrap();
    for set in [&sym, &circles] {
        for br in &set.branches {
            let med = median(br.points.iter().map(|p| p.margin).collect());
            for w in br.points.windows(2) {
                let (a, b) = (w[0].germ_name(2), w[1].germ_name(2));
                if a != b {
                    let dip = w[0].margin.min(w[1].margin);
                    assert!(dip < 1e-4 * med, "{a} -> {b} at margin {dip}, median {med}");
                }
            }
        }
    }
}

#[test]
fn lifted_gauss_image_is_tangent() {
    let set = conflict_set(&circles(), &CIRCLES_BOX, &ContinuationSettings::default()).unwrap();
    for br in &set.branches {
        for sp in gauss_image_of_lift(br).into_iter().flatten() {
            assert!(dot(&sp.v, &sp.mu).abs() < 1e-12 * (1.0 + sp.mu.iter().map(|m| m.abs()).sum::<f64>()));
        }
    }
}
