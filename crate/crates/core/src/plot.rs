//! Deterministic SVG drawings of Γ_m with vertex values.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fractal::VertexId;
use crate::harmonic::Model;
use crate::rational::{fmt_q, q_to_f64, Q};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;

fn label(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        fmt_q(x)
    }
}

/// Blue-to-red ramp on [lo, hi].
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t).round() as u8;
    let b = (240.0 - 200.0 * t).round() as u8;
    format!("#{r:02x}50{b:02x}")
}

/// Draws the edges of every depth-m cell and labels the given vertices.
/// With no values, only Γ₀ is drawn.
pub fn render_svg(model: &Model, depth: usize, values: &[(VertexId, Q)]) -> Result<String> {
    let emb = model.spec.embedding.as_ref().ok_or_else(|| Error::Missing(format!("spec {} has no embedding", model.spec.name)))?;
    let m = if values.is_empty() { 0 } else { depth.max(values.iter().map(|(v, _)| v.depth()).max().unwrap_or(0)) };
    let g = model.graph(m);
    let pts: Vec<[f64; 2]> = g.vertices.iter().map(|v| emb.point(&v.word, v.index as usize)).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    // y grows downward in SVG
    let at = |p: [f64; 2]| (MARGIN + (p[0] - x0) * scale, SIZE - MARGIN - (p[1] - y0) * scale);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<g stroke="black" stroke-width="1" fill="none">"#).unwrap();
    let nb = model.n0();
    for c in 0..g.n_cells() {
        let cell = g.cell(c);
        for j in 0..nb {
            for k in j + 1..nb {
                if model.spec.conductance(j, k) == Q::from_integer(0.into()) {
                    continue;
                }
                let (ax, ay) = at(pts[cell[j]]);
                let (bx, by) = at(pts[cell[k]]);
                writeln!(s, r#"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}"/>"#).unwrap();
            }
        }
    }
    writeln!(s, "</g>").unwrap();

    let fl: Vec<f64> = values.iter().map(|(_, x)| q_to_f64(x)).collect();
    let lo = fl.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = fl.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted: Vec<usize> = (0..values.len()).collect();
    sorted.sort_by(|&a, &b| values[a].0.cmp(&values[b].0));
    writeln!(s, r#"<g font-family="monospace" font-size="12">"#).unwrap();
    for i in sorted {
        let (v, x) = &values[i];
        let idx = g.vertex_index(v).ok_or_else(|| Error::Invalid(format!("{v} is not in V_{m}")))?;
        let (px, py) = at(pts[idx]);
        let t = if hi > lo { (fl[i] - lo) / (hi - lo) } else { 0.5 };
        writeln!(s, r#"<circle cx="{px:.3}" cy="{py:.3}" r="4" fill="{}"/>"#, color(t)).unwrap();
        writeln!(s, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, px + 6.0, py - 6.0, label(x)).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
