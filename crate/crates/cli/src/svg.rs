//! Deterministic SVG rendering for scatterplots and heatmaps.

use std::fmt::Write;

use anyhow::{bail, Result};
use ndarray::Array2;

/// Categorical colors, cycled by label.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

pub const POINT_RADIUS: f64 = 2.5;
const MARGIN: f64 = 0.05;
const CANVAS: f64 = 800.0;

fn comment_block(out: &mut String, comments: &[String]) {
    for c in comments {
        // "--" is not allowed inside XML comments.
        let safe = c.replace("--", "- -");
        let _ = writeln!(out, "<!-- # {safe} -->");
    }
}

/// Scatterplot of the first two columns of `coords`.
pub fn scatter(coords: &Array2<f64>, labels: Option<&[usize]>, comments: &[String]) -> Result<String> {
    let n = coords.nrows();
    if n == 0 {
        bail!("cannot plot an empty projection");
    }
    if coords.ncols() < 2 {
        bail!("a scatterplot needs two coordinates per point");
    }
    if let Some(l) = labels {
        if l.len() != n {
            bail!("{} labels for {} points", l.len(), n);
        }
    }
    let bounds = |j: usize| {
        let col = coords.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        (lo - MARGIN * span, hi + MARGIN * span)
    };
    let ((x0, x1), (y0, y1)) = (bounds(0), bounds(1));
    let sx = CANVAS / (x1 - x0);
    let sy = CANVAS / (y1 - y0);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    comment_block(&mut out, comments);
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for i in 0..n {
        let cx = (coords[[i, 0]] - x0) * sx;
        // SVG y grows downward.
        let cy = CANVAS - (coords[[i, 1]] - y0) * sy;
        let color = labels.map_or(PALETTE[0], |l| PALETTE[l[i] % PALETTE.len()]);
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{POINT_RADIUS}\" fill=\"{color}\" fill-opacity=\"0.8\"/>"
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Light-to-dark blue ramp; `t` is clamped to [0, 1].
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let light = [247.0, 251.0, 255.0];
    let dark = [8.0, 48.0, 107.0];
    let c: Vec<u8> = (0..3).map(|i| (light[i] + (dark[i] - light[i]) * t).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of a square matrix with the matrix sum in the top-left corner.
pub fn heatmap(matrix: &Array2<f64>, names: &[String], comments: &[String]) -> Result<String> {
    let (r, c) = matrix.dim();
    if r == 0 || c == 0 {
        bail!("cannot draw an empty matrix");
    }
    if names.len() != r {
        bail!("{} names for {} rows", names.len(), r);
    }
    let cell = 48.0;
    let pad = 90.0;
    let width = pad + cell * c as f64 + 10.0;
    let height = pad + cell * r as f64 + 10.0;
    let max = matrix.iter().copied().fold(0.0f64, f64::max);
    let total: f64 = matrix.sum();

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    comment_block(&mut out, comments);
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"8\" y=\"24\" font-size=\"16\" fill=\"#d62728\" font-weight=\"bold\">{total:.4}</text>"
    );
    for (j, name) in names.iter().enumerate().take(c) {
        let x = pad + cell * (j as f64 + 0.5);
        let _ = writeln!(out, "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>", pad - 8.0, escape(name));
    }
    for i in 0..r {
        let y = pad + cell * i as f64;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            pad - 8.0,
            y + cell * 0.5 + 4.0,
            escape(&names[i])
        );
        for j in 0..c {
            let v = matrix[[i, j]];
            let t = if max > 0.0 { v / max } else { 0.0 };
            let x = pad + cell * j as f64;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>",
                ramp(t)
            );
            let ink = if t > 0.5 { "white" } else { "black" };
            let _ = writeln!(
                out,
                "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" fill=\"{ink}\">{v:.3}</text>",
                x + cell * 0.5,
                y + cell * 0.5 + 3.0
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
