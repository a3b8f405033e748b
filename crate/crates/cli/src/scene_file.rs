// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Scene files: one JSON document with a strict schema.

use std::path::Path;

use frontier_core::scene::SceneOptions;
use frontier_core::{ContinuationSettings, FinslerMetric, Interval, Matrix, ParametricHypersurface, Scene, SceneSurface, SurfaceKind};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    ambient_dim: usize,
    surfaces: Vec<SurfaceFile>,
    #[serde(default)]
    options: OptionsFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceFile {
    label: String,
    kind: String,
    coefficients: Vec<f64>,
    /// Required except for closed curves, which default to a full turn.
    domain: Option<Vec<[f64; 2]>>,
    periodic: Option<Vec<bool>>,
    #[serde(default = "positive")]
    orientation: i8,
    metric: Option<MetricFile>,
}

fn positive() -> i8 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricFile {
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsFile {
    seed_density: Option<usize>,
    footpoint_samples: Option<usize>,
    separation: Option<f64>,
    slice_axis: Option<usize>,
    slice_values: Option<Vec<f64>>,
    step_init: Option<f64>,
    step_min: Option<f64>,
    step_max: Option<f64>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
    margin_floor: Option<f64>,
    max_points: Option<usize>,
}

impl OptionsFile {
    fn apply(self) -> SceneOptions {
        let d = SceneOptions::default();
        // an explicit step_max alone pulls the other step defaults under it
        let s = self.step_max.map_or_else(ContinuationSettings::default, |h| ContinuationSettings::default().with_step_max(h));
        SceneOptions {
            settings: ContinuationSettings {
                step_init: self.step_init.unwrap_or(s.step_init),
                step_min: self.step_min.unwrap_or(s.step_min),
                step_max: s.step_max,
                newton_tol: self.newton_tol.unwrap_or(s.newton_tol),
                newton_max_iter: self.newton_max_iter.unwrap_or(s.newton_max_iter),
                margin_floor: self.margin_floor.unwrap_or(s.margin_floor),
                max_points: self.max_points.unwrap_or(s.max_points),
            },
            seed_density: self.seed_density.unwrap_or(d.seed_density),
            footpoint_samples: self.footpoint_samples.unwrap_or(d.footpoint_samples),
            separation: self.separation.unwrap_or(d.separation),
            slice_axis: self.slice_axis.or(d.slice_axis),
            slice_values: self.slice_values.unwrap_or(d.slice_values),
            seed_offset: d.seed_offset,
        }
    }
}

fn surface(n: usize, f: SurfaceFile) -> Result<SceneSurface, CliError> {
    let label = f.label;
    let bad = |msg: String| CliError::Validation(format!("surface '{label}': {msg}"));
    let kind = SurfaceKind::from_name(&f.kind).ok_or_else(|| bad(format!("unknown kind '{}'", f.kind)))?;
    let closed_curve = matches!(kind, SurfaceKind::Circle | SurfaceKind::Ellipse | SurfaceKind::FourierCurve);
    let domain = match (f.domain, closed_curve) {
        (Some(d), _) => {
            let periodic = f.periodic.unwrap_or_else(|| vec![false; d.len()]);
            if periodic.len() != d.len() {
                return Err(bad(format!("{} periodic flags for {} intervals", periodic.len(), d.len())));
            }
            d.iter().zip(periodic).map(|(&[lo, hi], p)| Interval { lo, hi, periodic: p }).collect()
        }
        (None, true) => vec![Interval::full_turn()],
        (None, false) => return Err(bad(format!("missing key 'domain' for kind '{}'", f.kind))),
    };
    let hypersurface =
        ParametricHypersurface::new(kind, n, f.coefficients, domain, f.orientation).map_err(|e| bad(e.to_string()))?;
    let metric = match f.metric {
        None => FinslerMetric::euclidean(n),
        Some(m) => {
            if m.q.len() != n || m.q.iter().any(|r| r.len() != n) {
                return Err(bad(format!("metric Q must be {n}x{n}")));
            }
            let rows: Vec<&[f64]> = m.q.iter().map(|r| r.as_slice()).collect();
            FinslerMetric::new(Matrix::from_rows(&rows)).map_err(|e| bad(e.to_string()))?
        }
    };
    Ok(SceneSurface::new(label, hypersurface, metric))
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene, CliError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| CliError::Validation(format!("scene: {e}")))?;
    let n = file.ambient_dim;
    if !(n == 2 || n == 3) {
        return Err(CliError::Validation(format!("scene: ambient_dim {n} not in {{2, 3}}")));
    }
    let surfaces = file.surfaces.into_iter().map(|f| surface(n, f)).collect::<Result<Vec<_>, _>>()?;
    Scene::new(n, surfaces, file.options.apply()).map_err(|e| CliError::Validation(format!("scene: {e}")))
}

pub fn load_scene(path: &Path) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse_scene(&text)
}
