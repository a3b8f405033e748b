// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! SVG (plane) and OBJ (space) renderings of polylines.

use std::fmt::Write as _;

/// Margin added around the box, as a fraction of its larger side.
const PAD: f64 = 0.05;

/// One `<path>` per polyline with two or more finite vertices; single
/// vertices become circles. The y axis points up.
pub fn svg(polylines: &[Vec<Vec<f64>>], bounds: &[(f64, f64)]) -> Result<String, String> {
    if bounds.len() != 2 || polylines.iter().flatten().any(|p| p.len() != 2) {
        return Err("SVG output needs points in the plane".into());
    }
    let (w, h) = (bounds[0].1 - bounds[0].0, bounds[1].1 - bounds[1].0);
    let pad = PAD * w.max(h);
    let stroke = 2e-3 * w.max(h);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        bounds[0].0 - pad,
        -bounds[1].1 - pad,
        w + 2.0 * pad,
        h + 2.0 * pad
    )
    .unwrap();
    writeln!(out, r#"<g fill="none" stroke="black" stroke-width="{stroke}">"#).unwrap();
    for line in polylines {
        let pts: Vec<&Vec<f64>> = line.iter().filter(|p| p.iter().all(|v| v.is_finite())).collect();
        match pts.as_slice() {
            [] => {}
            [p] => writeln!(out, r#"<circle cx="{}" cy="{}" r="{stroke}"/>"#, p[0], -p[1]).unwrap(),
            _ => {
                out.push_str(r#"<path d=""#);
                for (i, p) in pts.iter().enumerate() {
                    write!(out, "{}{} {}", if i == 0 { "M" } else { " L" }, p[0], -p[1]).unwrap();
                }
                out.push_str("\"/>\n");
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// Vertices, then an `l` element per polyline (or `p` for a single vertex).
pub fn obj(polylines: &[Vec<Vec<f64>>]) -> Result<String, String> {
    if polylines.iter().flatten().any(|p| p.len() != 3) {
        return Err("OBJ output needs points in space".into());
    }
    let mut out = String::from("# frontier polylines\n");
    let mut elements = String::new();
    let mut next = 1usize;
    for line in polylines {
        let pts: Vec<&Vec<f64>> = line.iter().filter(|p| p.iter().all(|v| v.is_finite())).collect();
        if pts.is_empty() {
            continue;
        }
        for p in &pts {
            writeln!(out, "v {} {} {}", p[0], p[1], p[2]).unwrap();
        }
        elements.push_str(if pts.len() == 1 { "p" } else { "l" });
        for k in 0..pts.len() {
            write!(elements, " {}", next + k).unwrap();
        }
        elements.push('\n');
        next += pts.len();
    }
    out.push_str(&elements);
    Ok(out)
}
