//! Deterministic SVG heatmaps for fingerprint and difference matrices.
//!
//! Colors use a diverging three-stop map: `-scale` is blue `#2166ac`, zero is
//! white and `+scale` is red `#b2182b`, linearly interpolated per channel and
//! rounded to the nearest integer. `scale` is `max |entry|` rounded up to one
//! significant digit (1 for an all-zero matrix).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fingerprint::RealMatrix;
use crate::format::write_atomic;

const CELL: usize = 36;
const LEFT: usize = 130;
const TOP: usize = 64;
const LEGEND_GAP: usize = 28;
const LEGEND_WIDTH: usize = 18;
const LEGEND_STEPS: usize = 20;

const NEGATIVE: (u8, u8, u8) = (0x21, 0x66, 0xac);
const NEUTRAL: (u8, u8, u8) = (0xff, 0xff, 0xff);
const POSITIVE: (u8, u8, u8) = (0xb2, 0x18, 0x2b);

#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapSpec {
    pub matrix: RealMatrix,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub title: Option<String>,
}

/// `max |x|` rounded up to one significant digit, e.g. 0.734 → 0.8.
pub fn color_scale(matrix: &RealMatrix) -> f64 {
    let max = matrix.max_abs();
    if max == 0.0 {
        return 1.0;
    }
    let magnitude = 10f64.powi(max.log10().floor() as i32);
    // guard against 0.2 / 0.1 = 2.0000000000000004
    let leading = (max / magnitude - 1e-9).ceil();
    leading * magnitude
}

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8
}

/// Fill color for `value` on a symmetric scale `[-scale, scale]`.
pub fn diverging_color(value: f64, scale: f64) -> String {
    let t = (value / scale).clamp(-1.0, 1.0);
    let (end, t) = if t >= 0.0 { (POSITIVE, t) } else { (NEGATIVE, -t) };
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(NEUTRAL.0, end.0, t),
        lerp(NEUTRAL.1, end.1, t),
        lerp(NEUTRAL.2, end.2, t)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_heatmap_svg(spec: &HeatmapSpec) -> Result<String> {
    let m = &spec.matrix;
    if m.is_empty() {
        return Err(Error::invalid("cannot render an empty matrix"));
    }
    if spec.row_labels.len() != m.rows() || spec.column_labels.len() != m.cols() {
        return Err(Error::invalid(format!(
            "labels ({} rows, {} columns) do not match a {}x{} matrix",
            spec.row_labels.len(),
            spec.column_labels.len(),
            m.rows(),
            m.cols()
        )));
    }
    let scale = color_scale(m);
    let grid_w = m.cols() * CELL;
    let grid_h = m.rows() * CELL;
    let legend_x = LEFT + grid_w + LEGEND_GAP;
    let width = legend_x + LEGEND_WIDTH + 70;
    let height = TOP + grid_h.max(LEGEND_STEPS * 8) + 24;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##);
    if let Some(title) = &spec.title {
        let _ = writeln!(w, r#"<text x="{}" y="22" font-size="15">{}</text>"#, LEFT, escape(title));
    }
    for (c, label) in spec.column_labels.iter().enumerate() {
        let _ = writeln!(
            w,
            r#"<text class="col-label" x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + c * CELL + CELL / 2,
            TOP - 8,
            escape(label)
        );
    }
    for (r, label) in spec.row_labels.iter().enumerate() {
        let _ = writeln!(
            w,
            r#"<text class="row-label" x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 8,
            TOP + r * CELL + CELL / 2 + 4,
            escape(label)
        );
    }
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            let v = m.get(r, c);
            let _ = writeln!(
                w,
                r##"<rect class="cell" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="#dddddd" stroke-width="0.5"><title>{} / {}: {:.6}</title></rect>"##,
                LEFT + c * CELL,
                TOP + r * CELL,
                diverging_color(v, scale),
                escape(&spec.row_labels[r]),
                escape(&spec.column_labels[c]),
                v
            );
        }
    }
    // legend: LEGEND_STEPS bands from +scale (top) to −scale (bottom)
    let band = 8;
    for i in 0..LEGEND_STEPS {
        let t = 1.0 - (2 * i + 1) as f64 / LEGEND_STEPS as f64;
        let _ = writeln!(
            w,
            r#"<rect class="legend" x="{legend_x}" y="{}" width="{LEGEND_WIDTH}" height="{band}" fill="{}"/>"#,
            TOP + i * band,
            diverging_color(t * scale, scale)
        );
    }
    let label_x = legend_x + LEGEND_WIDTH + 6;
    let legend_h = LEGEND_STEPS * band;
    for (y, v) in [(TOP + 4, scale), (TOP + legend_h / 2 + 4, 0.0), (TOP + legend_h + 4, -scale)] {
        let _ = writeln!(w, r#"<text class="legend-label" x="{label_x}" y="{y}">{v:+.3}</text>"#);
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn render_heatmap(spec: &HeatmapSpec, path: &Path) -> Result<()> {
    let svg = render_heatmap_svg(spec)?;
    write_atomic(path, &svg)
}
