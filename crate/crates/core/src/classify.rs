// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Germ codimensions, ADE labels, transversality margins and the
//! multi-germ partition calculus.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use crate::math::FloatFuncs;
use crate::conflict::ConflictPoint;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, norm, smallest_singular_value, symmetric_eigen, Matrix};
use crate::math::factorial;
use crate::propagation::{directional_derivatives, travel_time_jet};
use crate::scene::{FinslerMetric, ParametricHypersurface, Scene};

/// Relative tolerance separating vanishing from non-vanishing normalized
/// derivative terms.
pub const TOL_REL: f64 = 1e-6;
/// Highest derivative order inspected; `A_5` is the last detectable type.
pub const MAX_ORDER: usize = 6;
/// Criticality threshold on the normalized first derivative.
pub const CRITICAL_TOL: f64 = 1e-8;

/// Singularity type of a germ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GermKind {
    /// `A_k`, `k = 1..=5`.
    A(u8),
    /// Corank two: flagged, not subclassified.
    D4Flag,
    /// No derivative up to [`MAX_ORDER`] clears the tolerance.
    Degenerate,
}

/// Classification of one time-function germ.
#[derive(Debug, Clone, PartialEq)]
pub struct GermLabel {
    pub kind: GermKind,
    pub codim: usize,
    pub corank: usize,
    /// Normalized derivative magnitudes the decision was based on.
    pub witness: Vec<f64>,
}

impl GermLabel {
    pub fn a(k: u8, corank: usize, witness: Vec<f64>) -> Self {
        GermLabel { kind: GermKind::A(k), codim: k as usize, corank, witness }
    }

    pub fn name(&self) -> String {
        match self.kind {
            GermKind::A(k) => format!("A{k}"),
            GermKind::D4Flag => "D4".into(),
            GermKind::Degenerate => "X".into(),
        }
    }
}

/// Labels a one-variable germ from `G^(1) .. G^(6)` (at least two entries).
/// `scale` converts parameter units to the germ's natural length; the
/// normalized terms are `|G^(m)| scale^m / m!`.
pub fn classify_germ_1d(derivatives: &[f64], scale: f64) -> Result<GermLabel> {
    if derivatives.len() < 2 || !(scale > 0.0) {
        return Err(Error::Invalid("need G', G'' at least and a positive scale".into()));
    }
    let first = derivatives[0].abs() * scale;
    if !(first < CRITICAL_TOL) {
        return Err(Error::NotCritical { residual: first });
    }
    let witness: Vec<f64> = derivatives
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let m = i + 1;
            d.abs() * scale.powi(m as i32) / factorial(m)
        })
        .collect();
    for (i, &c) in witness.iter().enumerate().skip(1).take(MAX_ORDER - 1) {
        if c > TOL_REL {
            let k = i as u8; // order m = i + 1, k = m - 1
            return Ok(GermLabel::a(k, if k == 1 { 0 } else { 1 }, witness));
        }
    }
    let limit = derivatives.len().min(MAX_ORDER) - 1;
    Ok(GermLabel { kind: GermKind::Degenerate, codim: limit + 1, corank: 1, witness })
}

/// Labels a two-variable germ from its Hessian and the cubic and effective
/// quartic terms along the Hessian kernel (used only at corank one).
pub fn classify_germ_2d(
    hessian: &Matrix,
    third_along_kernel: f64,
    fourth_along_kernel: f64,
    scale: f64,
) -> Result<GermLabel> {
    if hessian.rows() != 2 || hessian.cols() != 2 || !(scale > 0.0) {
        return Err(Error::Invalid("need a 2x2 Hessian and a positive scale".into()));
    }
    let (eig, _) = symmetric_eigen(hessian);
    let s2 = scale * scale;
    let normalized: Vec<f64> = eig.iter().map(|e| e.abs() * s2 / 2.0).collect();
    let corank = normalized.iter().filter(|&&c| c <= TOL_REL).count();
    let c3 = third_along_kernel.abs() * scale.powi(3) / 6.0;
    let c4 = fourth_along_kernel.abs() * scale.powi(4) / 24.0;
    let mut witness = normalized.clone();
    witness.push(c3);
    witness.push(c4);
    Ok(match corank {
        0 => GermLabel::a(1, 0, witness),
        1 if c3 > TOL_REL => GermLabel::a(2, 1, witness),
        1 if c4 > TOL_REL => GermLabel::a(3, 1, witness),
        1 => GermLabel { kind: GermKind::Degenerate, codim: 4, corank: 1, witness },
        _ => GermLabel { kind: GermKind::D4Flag, codim: 4, corank: 2, witness },
    })
}

/// Germ of `s -> F(x, s)` at a critical footpoint.
pub fn germ_at(
    surface: &ParametricHypersurface,
    metric: &FinslerMetric,
    x: &[f64],
    s: &[f64],
) -> Result<GermLabel> {
    let tj = travel_time_jet(surface, metric, x, s, 2)?;
    let f = tj.value;
    let jet = surface.evaluate_jet(s, 1)?;
    if surface.param_dim() == 1 {
        let g = jet.first(0);
        let speed = dot(g, &metric.q_inv().mul_vec(g)).sqrt();
        let d = directional_derivatives(surface, metric, x, s, &[1.0], MAX_ORDER)?;
        let normalized: Vec<f64> = d[1..].iter().map(|v| v / f).collect();
        return classify_germ_1d(&normalized, f / speed);
    }
    // orthonormal coordinates for the metric induced on the tangent plane,
    // measured in units of the travel time
    let mut first_form = Matrix::zeros(2, 2);
    for a in 0..2 {
        let qa = metric.q_inv().mul_vec(jet.first(a));
        for b in 0..2 {
            first_form[(a, b)] = dot(&qa, jet.first(b));
        }
    }
    let c = cholesky(&first_form).ok_or(Error::Immersion { at: s.to_vec() })?;
    // W = C^{-T}: columns are parameter directions of unit length
    let det = c[(0, 0)] * c[(1, 1)];
    let w = Matrix::from_rows(&[
        &[1.0 / c[(0, 0)], -c[(1, 0)] / det],
        &[0.0, 1.0 / c[(1, 1)]],
    ]);
    let crit = norm(&w.transpose().mul_vec(&tj.grad_s));
    if !(crit < CRITICAL_TOL) {
        return Err(Error::NotCritical { residual: crit });
    }
    let h = w.transpose().mul(&tj.hess_s).mul(&w);
    let hy = Matrix::from_rows(&[&[h[(0, 0)] * f, h[(0, 1)] * f], &[h[(1, 0)] * f, h[(1, 1)] * f]]);
    let (eig, vecs) = symmetric_eigen(&hy);
    let kernel_idx = if eig[0].abs() <= eig[1].abs() { 0 } else { 1 };
    let other = 1 - kernel_idx;
    let k = vecs.column(kernel_idx);
    let r = vecs.column(other);
    // directional derivative of order m along a unit direction d in the
    // dimensionless chart: f^(m-1) times the physical derivative
    let along = |dir: &[f64], order: usize| -> Result<Vec<f64>> {
        let pdir = w.mul_vec(dir);
        let d = directional_derivatives(surface, metric, x, s, &pdir, order)?;
        Ok(d.iter().enumerate().map(|(m, v)| v * f.powi(m as i32 - 1)).collect())
    };
    let dk = along(&k, 4)?;
    let third = dk[3];
    let sum: Vec<f64> = k.iter().zip(&r).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = k.iter().zip(&r).map(|(a, b)| a - b).collect();
    let t_plus = along(&sum, 3)?[3];
    let t_minus = along(&diff, 3)?[3];
    let t_r = along(&r, 3)?[3];
    let t_kkr = (t_plus - t_minus - 2.0 * t_r) / 6.0;
    let lambda_r = eig[other];
    let fourth = if lambda_r.abs() > 0.0 { dk[4] - 3.0 * t_kkr * t_kkr / lambda_r } else { dk[4] };
    classify_germ_2d(&hy, third, fourth, 1.0)
}

/// Per-surface labels of a conflict point combined into one name.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGermLabel {
    /// Labels sorted by codimension, largest first.
    pub labels: Vec<GermLabel>,
    pub name: String,
    pub total_codim: usize,
    /// Total codimension above `n + 1`: the scene is not generic here.
    pub exceeds_budget: bool,
}

pub fn multigerm_label(labels: &[GermLabel], ambient_dim: usize) -> MultiGermLabel {
    let mut sorted = labels.to_vec();
    sorted.sort_by_key(|g| core::cmp::Reverse(g.codim));
    let name: String = sorted.iter().map(|g| g.name()).collect();
    let total_codim = sorted.iter().map(|g| g.codim).sum();
    MultiGermLabel { labels: sorted, name, total_codim, exceeds_budget: total_codim > ambient_dim + 1 }
}

/// Multi-germ label of a conflict point in its scene.
pub fn conflict_multigerm(scene: &Scene, cp: &ConflictPoint) -> MultiGermLabel {
    multigerm_label(&cp.germs, scene.ambient_dim())
}

/// Lagrange multipliers of the phase function, normalized to unit length.
/// At critical footpoints the `s`-conditions hold for every choice, so the
/// homogeneous representative `lambda_k ~ k` is used.
pub fn phase_multipliers(l: usize) -> Vec<f64> {
    let raw: Vec<f64> = (1..l).map(|k| k as f64).collect();
    let len = norm(&raw);
    raw.into_iter().map(|v| v / len).collect()
}

/// Matrix of first derivatives in `(s, lambda, x)` of the equations
/// `d_lambda Phi = 0`, `d_s Phi = 0` for
/// `Phi = sum_i lambda_i (F_i - F_{i+1})`, with rows normalized.
pub fn conflict_rank_matrix(scene: &Scene, cp: &ConflictPoint) -> Result<Matrix> {
    let l = cp.footpoints.len();
    let n = scene.ambient_dim();
    let p = n - 1;
    let lambda = phase_multipliers(l);
    let coeff = |i: usize| -> f64 {
        let up = if i < l - 1 { lambda[i] } else { 0.0 };
        let down = if i > 0 { lambda[i - 1] } else { 0.0 };
        up - down
    };
    // d coeff_i / d lambda_j
    let dcoeff = |i: usize, j: usize| -> f64 {
        (if i == j { 1.0 } else { 0.0 }) - (if i == j + 1 { 1.0 } else { 0.0 })
    };
    let mut jets = Vec::with_capacity(l);
    for i in 0..l {
        let ss = scene.surface(cp.surfaces[i]);
        let mut tj = travel_time_jet(&ss.surface, &ss.metric, &cp.x, &cp.footpoints[i], 2)?;
        let sign = cp.signs[i];
        tj.grad_s.iter_mut().for_each(|v| *v *= sign);
        tj.grad_x.iter_mut().for_each(|v| *v *= sign);
        for a in 0..p {
            for b in 0..p {
                tj.hess_s[(a, b)] *= sign;
            }
            for j in 0..n {
                tj.mixed[(a, j)] *= sign;
            }
        }
        jets.push(tj);
    }
    let cols = l * p + (l - 1) + n;
    let mut m = Matrix::zeros(0, cols);
    for i in 0..l - 1 {
        let mut row = vec![0.0; cols];
        for a in 0..p {
            row[i * p + a] = jets[i].grad_s[a];
            row[(i + 1) * p + a] = -jets[i + 1].grad_s[a];
        }
        for j in 0..n {
            row[l * p + (l - 1) + j] = jets[i].grad_x[j] - jets[i + 1].grad_x[j];
        }
        m.push_row(&row);
    }
    for i in 0..l {
        let c = coeff(i);
        for a in 0..p {
            let mut row = vec![0.0; cols];
            for b in 0..p {
                row[i * p + b] = c * jets[i].hess_s[(a, b)];
            }
            for j in 0..l - 1 {
                row[l * p + j] = dcoeff(i, j) * jets[i].grad_s[a];
            }
            for j in 0..n {
                row[l * p + (l - 1) + j] = c * jets[i].mixed[(a, j)];
            }
            m.push_row(&row);
        }
    }
    Ok(m.row_normalized())
}

/// Smallest singular value of [`conflict_rank_matrix`]; zero where the lift
/// of the conflict set fails to be smooth.
pub fn transversality_margin_conflict(scene: &Scene, cp: &ConflictPoint) -> Result<f64> {
    Ok(smallest_singular_value(&conflict_rank_matrix(scene, cp)?))
}

/// Admissible codimension tuples for `l` germs in `R^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTable {
    pub n: usize,
    pub l: usize,
    pub partitions: Vec<Vec<usize>>,
}

fn validate_nl(n: usize, l: usize) -> Result<()> {
    if n == 0 || l == 0 || l > n + 1 {
        return Err(Error::Invalid(format!("need n >= 1 and 1 <= l <= n + 1, got n = {n}, l = {l}")));
    }
    Ok(())
}

/// All tuples `mu_1 >= .. >= mu_l >= 1` with `sum mu_i <= n + 1`, in
/// ascending lexicographic order.
pub fn partition_table(n: usize, l: usize) -> Result<PartitionTable> {
    validate_nl(n, l)?;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(l);
    fn rec(remaining_len: usize, max_part: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if remaining_len == 0 {
            out.push(cur.clone());
            return;
        }
        // leave at least one for each later part
        let cap = max_part.min(budget - (remaining_len - 1));
        for part in 1..=cap {
            cur.push(part);
            rec(remaining_len - 1, part, budget - part, cur, out);
            cur.pop();
        }
    }
    rec(l, n + 1, n + 1, &mut cur, &mut out);
    out.sort();
    Ok(PartitionTable { n, l, partitions: out })
}

/// Cases that do not reduce to a smaller `(n, l)`: the parts above one of
/// tuples that use the full budget once the parts equal to one are removed,
/// i.e. `k` parts, all at least two, summing to `k + (n - l) + 1`.
pub fn new_cases(n: usize, l: usize) -> Result<Vec<Vec<usize>>> {
    let table = partition_table(n, l)?;
    let excess = n + 1 - l;
    let mut out: Vec<Vec<usize>> = table
        .partitions
        .into_iter()
        .map(|t| t.into_iter().filter(|&m| m >= 2).collect::<Vec<_>>())
        .filter(|t| !t.is_empty() && t.iter().sum::<usize>() == t.len() + excess)
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// `(2,2)` style rendering.
pub fn format_partition(p: &[usize]) -> String {
    let parts: Vec<String> = p.iter().map(|m| format!("{m}")).collect();
    format!("({})", parts.join(","))
}

/// Verdict on whether only simple singularities occur generically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NiceDimension {
    /// `min(n - l + 2, 6)`.
    pub cap: usize,
    pub is_nice: bool,
}

pub fn nice_dimension_check(n: usize, l: usize) -> Result<NiceDimension> {
    validate_nl(n, l)?;
    let d = n + 2 - l;
    Ok(NiceDimension { cap: d.min(6), is_nice: d <= 6 })
}
