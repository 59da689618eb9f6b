//! Self-contained SVG 1.1 plots of 2D data on the unit square.

use std::fmt::Write;

use ndarray::ArrayView2;

use crate::datasets::SCALE_EPS;
use crate::error::Result;
use crate::mixture::MixtureModel;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 40.0;
const RADIUS: f64 = 2.5;

/// Categorical palette for cluster colors.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Viridis anchor colors, interpolated linearly.
const VIRIDIS: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

pub fn cluster_color(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

/// Maps `t` in [0, 1] onto the sequential colormap.
pub fn sequential_color(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (VIRIDIS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(VIRIDIS.len() - 2);
    let f = pos - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(a.0, b.0),
        lerp(a.1, b.1),
        lerp(a.2, b.2)
    )
}

fn to_px(x: f64, y: f64) -> (f64, f64) {
    let span = SIZE - 2.0 * MARGIN;
    (MARGIN + x * span, SIZE - MARGIN - y * span)
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#
    );
}

fn frame(out: &mut String) {
    let span = SIZE - 2.0 * MARGIN;
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let (px, _) = to_px(v, 0.0);
        let (_, py) = to_px(0.0, v);
        let _ = writeln!(
            out,
            r#"<text x="{px}" y="{}" font-size="11" text-anchor="middle">{label}</text>"#,
            SIZE - MARGIN + 15.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{label}</text>"#,
            MARGIN - 5.0,
            py + 4.0
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn circle(out: &mut String, x: f64, y: f64, fill: &str) {
    let (px, py) = to_px(x, y);
    let _ = writeln!(
        out,
        r#"<circle cx="{px:.2}" cy="{py:.2}" r="{RADIUS}" fill="{fill}"/>"#
    );
}

/// Points colored by cluster label.
pub fn scatter(points: ArrayView2<'_, f64>, labels: &[usize], title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out);
    for (row, &k) in points.rows().into_iter().zip(labels) {
        circle(&mut out, row[0], row[1], cluster_color(k));
    }
    out.push_str("</svg>\n");
    out
}

/// Cell-center coordinates of a `resolution`-per-side grid over `(eps, 1 - eps)`.
pub fn grid_coordinates(resolution: usize) -> Vec<f64> {
    let span = 1.0 - 2.0 * SCALE_EPS;
    (0..resolution)
        .map(|i| SCALE_EPS + (i as f64 + 0.5) * span / resolution as f64)
        .collect()
}

/// Mixture density on the grid; `grid[iy][ix]` is the density at
/// `(coords[ix], coords[iy])`.
pub fn pdf_grid(model: &MixtureModel, resolution: usize) -> Result<Vec<Vec<f64>>> {
    let coords = grid_coordinates(resolution);
    coords
        .iter()
        .map(|&y| {
            coords
                .iter()
                .map(|&x| model.log_pdf(&[x, y]).map(f64::exp))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Heatmap of a density grid as produced by [`pdf_grid`].
pub fn heatmap(grid: &[Vec<f64>], title: &str) -> String {
    let resolution = grid.len();
    let max = grid.iter().flatten().copied().fold(0.0f64, f64::max);
    let cell = (SIZE - 2.0 * MARGIN) / resolution as f64;
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
    for (iy, row) in grid.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            let x = MARGIN + ix as f64 * cell;
            let y = SIZE - MARGIN - (iy as f64 + 1.0) * cell;
            let t = if max > 0.0 { v / max } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{w:.3}" height="{w:.3}" fill="{}" data-density="{v:e}"/>"#,
                sequential_color(t),
                w = cell + 0.05
            );
        }
    }
    out.push_str("</g>\n");
    frame(&mut out);
    out.push_str("</svg>\n");
    out
}

/// Points colored by distance from `reference` (small = dark), with the
/// reference point drawn larger in red.
pub fn distance_map(
    points: ArrayView2<'_, f64>,
    distances: &[f64],
    reference: usize,
    title: &str,
) -> String {
    let max = distances
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0f64, f64::max);
    let mut out = String::new();
    header(&mut out, title);
    frame(&mut out);
    for (i, (row, &d)) in points.rows().into_iter().zip(distances).enumerate() {
        if i == reference {
            continue;
        }
        let t = if max > 0.0 { d / max } else { 0.0 };
        circle(&mut out, row[0], row[1], &sequential_color(t));
    }
    let (px, py) = to_px(points[[reference, 0]], points[[reference, 1]]);
    let _ = writeln!(
        out,
        r#"<circle cx="{px:.2}" cy="{py:.2}" r="{}" fill="red" stroke="black"/>"#,
        RADIUS * 2.5
    );
    out.push_str("</svg>\n");
    out
}
