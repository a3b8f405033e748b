// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Property tests for germ labels, partitions and center sets.

mod common;

use common::*;
use frontier_core::center::{center_set, normal_chord_set, parallel_pairs, ParallelPair};
use frontier_core::classify::{classify_germ_1d, new_cases, partition_table, GermKind, TOL_REL};
use frontier_core::family::FrontIntersection;
use frontier_core::linalg::dot;
use frontier_core::scene::{ParametricHypersurface, Scene, SceneSurface};
use frontier_core::solver::ContinuationSettings;
use proptest::prelude::*;

fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |a, k| a * k as f64)
}

/// Derivatives `G' .. G^(6)` of a critical germ whose normalized terms are
/// either zero or well above the tolerance.
fn clear_germ() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(prop_oneof![Just(0.0), 1e-4..10.0f64, -10.0..-1e-4f64], 5), 0.1..10.0f64).prop_map(
        |(terms, scale)| {
            let mut d = vec![0.0];
            for (i, c) in terms.into_iter().enumerate() {
                let m = i + 2;
                d.push(c * factorial(m) / scale.powi(m as i32));
            }
            (d, scale)
        },
    )
}

proptest! {
    #[test]
    fn labels_ignore_reparametrization((d, scale) in clear_germ()) {
        // s = 2 s': the m-th derivative gains 2^m, the natural length halves
        let doubled: Vec<f64> = d.iter().enumerate().map(|(i, v)| v * 2f64.powi(i as i32 + 1)).collect();
        let a = classify_germ_1d(&d, scale).unwrap();
        let b = classify_germ_1d(&doubled, scale / 2.0).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.codim, b.codim);
    }

    #[test]
    fn labels_survive_tiny_perturbations((d, scale) in clear_germ(), noise in prop::collection::vec(-1.0..1.0f64, 6)) {
        let perturbed: Vec<f64> = d
            .iter()
            .zip(&noise)
            .enumerate()
            .map(|(i, (v, e))| v + e * 1e-12 * factorial(i + 1) / scale.powi(i as i32 + 1))
            .collect();
        let a = classify_germ_1d(&d, scale).unwrap();
        let b = classify_germ_1d(&perturbed, scale).unwrap();
        prop_assert_eq!(a.kind, b.kind);
        prop_assert_eq!(a.codim, b.codim);
    }

    #[test]
    fn multigerms_ignore_the_time_offset(s1 in -0.9..0.9f64, s2 in -0.9..0.9f64, c in -5.0..5.0f64) {
        let sys = FrontIntersection::a2a2();
        let x = [-3.0 * s1 * s1, s1.powi(3) - s2.powi(3), -3.0 * s2 * s2];
        let x0 = s1.powi(3) + x[0] * s1 + x[1];
        let a = sys.multigerm(&sys.pack(x0, &x, &[s1, s2])).unwrap();
        let b = sys.multigerm(&sys.pack(x0 + c, &x, &[s1, s2])).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn reparametrized_cusp_stays_a2() {
    let g = classify_germ_1d(&[0.0, 0.0, 6.0 / 8.0, 0.0, 0.0, 0.0], 2.0).unwrap();
    assert_eq!(g.kind, GermKind::A(2));
    assert!(g.witness[2] > TOL_REL);
}

#[test]
fn partitions_reduce_to_new_cases() {
    for n in 1..=12 {
        for l in 1..=n + 1 {
            let table = partition_table(n, l).unwrap();
            for p in &table.partitions {
                assert!(p.windows(2).all(|w| w[0] >= w[1]) && p.iter().sum::<usize>() <= n + 1);
                // dropping the parts equal to one lands on a new case of a
                // smaller or equal problem
                let q: Vec<usize> = p.iter().copied().filter(|&m| m >= 2).collect();
                if q.is_empty() {
                    continue;
                }
                let sum: usize = q.iter().sum();
                assert!(sum - 1 <= n && q.len() <= l);
                assert!(new_cases(sum - 1, q.len()).unwrap().contains(&q), "{p:?} in ({n}, {l})");
            }
            for q in new_cases(n, l).unwrap() {
                let mut padded = q.clone();
                padded.resize(l, 1);
                assert!(table.partitions.contains(&padded), "{q:?} not in ({n}, {l})");
            }
        }
    }
}

fn ellipse_and_circle(shift_both: [f64; 2], shift_second: [f64; 2]) -> Scene {
    let e = ParametricHypersurface::ellipse([shift_both[0], shift_both[1]], 2.0, 1.0, 0.3).unwrap();
    let c = [4.0 + shift_both[0] + shift_second[0], 0.5 + shift_both[1] + shift_second[1]];
    let k = ParametricHypersurface::circle(c, 0.7).unwrap();
    Scene::with_surfaces(2, vec![SceneSurface::euclidean("e", e), SceneSurface::euclidean("k", k)]).unwrap()
}

#[test]
fn parallel_pairs_solve_their_equations() {
    let scene = ellipse_and_circle([0.0, 0.0], [0.0, 0.0]);
    let branches = parallel_pairs(&scene, vec![0, 1], 0.0, &ContinuationSettings::default()).unwrap();
    assert!(!branches.is_empty());
    for br in &branches {
        for p in &br.pairs {
            assert!(p.parallel_residual(&scene).unwrap() < 1e-9);
            assert!(p.height_residual(&scene).unwrap() < 1e-9);
        }
        for c in normal_chord_set(&br.pairs) {
            assert!(dot(&c.v, &c.mu1).abs() < 1e-12 && dot(&c.v, &c.mu2).abs() < 1e-12);
        }
    }
}

#[test]
fn half_weights_match_the_midpoints_exactly() {
    let scene = ellipse_and_circle([0.0, 0.0], [0.0, 0.0]);
    for br in parallel_pairs(&scene, vec![0, 1], 0.0, &ContinuationSettings::default()).unwrap() {
        let a = center_set(&br, None).unwrap().unwrap();
        let b = center_set(&br, Some(&[0.5, 0.5])).unwrap().unwrap();
        let bits = |v: &Vec<Vec<f64>>| v.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn translating_both_surfaces_translates_the_center_set() {
    let c = [0.7, -1.3];
    let settings = ContinuationSettings::default().with_step_max(2e-3);
    let centers = |scene: &Scene| -> Vec<Vec<Vec<f64>>> {
        parallel_pairs(scene, vec![0, 1], 0.0, &settings)
            .unwrap()
            .iter()
            .map(|br| center_set(br, None).unwrap().unwrap())
            .collect()
    };
    let a: Vec<Vec<Vec<f64>>> = centers(&ellipse_and_circle([0.0, 0.0], [0.0, 0.0]))
        .into_iter()
        .map(|l| l.into_iter().map(|y| vec![y[0] + c[0], y[1] + c[1]]).collect())
        .collect();
    let b = centers(&ellipse_and_circle(c, [0.0, 0.0]));
    let d = curve_distance(&a, &b);
    assert!(d < 1e-8, "{d}");
}

#[test]
fn translating_one_surface_moves_midpoints_by_half() {
    let c = [0.6, 0.9];
    let base = ellipse_and_circle([0.0, 0.0], [0.0, 0.0]);
    let moved = ellipse_and_circle([0.0, 0.0], c);
    let mut count = 0;
    for br in parallel_pairs(&moved, vec![0, 1], 0.0, &ContinuationSettings::default()).unwrap() {
        let ys = center_set(&br, None).unwrap().unwrap();
        for (p, y) in br.pairs.iter().zip(&ys) {
            // normals do not see translations: the same parameters pair up
            let q = ParallelPair::new(&base, vec![0, 1], p.params.clone()).unwrap();
            let mid = [0.5 * (q.points[0][0] + q.points[1][0]), 0.5 * (q.points[0][1] + q.points[1][1])];
            assert!(dist(y, &[mid[0] + c[0] / 2.0, mid[1] + c[1] / 2.0]) < 1e-12);
            count += 1;
        }
    }
    assert!(count > 20);
}
