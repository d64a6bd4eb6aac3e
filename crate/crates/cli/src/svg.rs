//! SVG rendering of planar maps colored by a per-face scalar field.
//!
//! The scene is an SVG 1.1 document: sea faces first (a flat light fill), then
//! land faces colored by a diverging ramp centered at value 1, then a legend
//! strip with the field's minimum and maximum. The viewBox tightly bounds the
//! land layer, so the sea shows only as context around its edges. Output is
//! deterministic: fixed decimal formatting everywhere and no timestamps.

use std::fmt::Write as _;
use std::path::Path;

use deq_core::{Error, PlanarMap, Result};

/// Rendering options.
#[derive(Debug, Clone)]
pub struct SvgOptions {
    /// Draw triangle outlines. Turned off, faces blend into a smooth field.
    pub stroke: bool,
    /// Label for the legend (what the scalar field means).
    pub field_label: String,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            stroke: true,
            field_label: "density".to_string(),
        }
    }
}

/// Fixed sea fill, chosen lighter than any ramp color so land stands out.
const SEA_FILL: &str = "#dce8f5";
/// Diverging ramp endpoints and center (blue → white → red).
const RAMP_LOW: [u8; 3] = [0x21, 0x66, 0xac];
const RAMP_MID: [u8; 3] = [0xf7, 0xf7, 0xf7];
const RAMP_HIGH: [u8; 3] = [0xb2, 0x18, 0x2b];

/// Diverging color for `value`, with the ramp centered at 1 and stretched to
/// the field's extremes — faces below 1 shade toward blue, above toward red.
fn ramp_color(value: f64, min: f64, max: f64) -> String {
    let spread = (1.0 - min).abs().max((max - 1.0).abs()).max(1e-12);
    let t = ((value - 1.0) / spread).clamp(-1.0, 1.0);
    let (from, to, s) = if t < 0.0 {
        (RAMP_MID, RAMP_LOW, -t)
    } else {
        (RAMP_MID, RAMP_HIGH, t)
    };
    let mix = |a: u8, b: u8| -> u8 { (a as f64 + (b as f64 - a as f64) * s).round() as u8 };
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(from[0], to[0]),
        mix(from[1], to[1]),
        mix(from[2], to[2])
    )
}

fn fmt_coord(x: f64) -> String {
    format!("{x:.6}")
}

/// Renders the map to an SVG document string. `values` holds one entry per
/// land face, in land-face order (the k-th true entry of the land mask).
pub fn render_svg(map: &PlanarMap, values: &[f64], opts: &SvgOptions) -> Result<String> {
    let land_faces: Vec<usize> = (0..map.face_count())
        .filter(|&f| map.land_mask[f])
        .collect();
    if land_faces.is_empty() {
        return Err(Error::SvgEmptyLand);
    }
    if values.len() != land_faces.len() {
        return Err(Error::PopulationCount {
            expected: land_faces.len(),
            got: values.len(),
        });
    }

    // Tight land bounding box drives the viewBox; y is flipped into SVG's
    // downward axis by reflecting inside the same interval.
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &f in &land_faces {
        for &v in &map.faces[f] {
            let p = map.coords[v];
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
    }
    let width = (max_x - min_x).max(1e-12);
    let height = (max_y - min_y).max(1e-12);
    let flip_y = |y: f64| min_y + max_y - y;

    let vmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    // Legend strip to the right of the map: 6% of the width, with margins.
    let legend_w = 0.06 * width;
    let margin = 0.04 * width;
    let total_w = width + margin + legend_w + 6.0 * legend_w; // room for labels
    let stroke_width = 0.001 * width.max(height);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        fmt_coord(min_x),
        fmt_coord(min_y),
        fmt_coord(total_w),
        fmt_coord(height),
    )
    .unwrap();

    let stroke_attr = |fill: &str| -> String {
        if opts.stroke {
            format!(
                r##"fill="{fill}" stroke="#555555" stroke-width="{}""##,
                fmt_coord(stroke_width)
            )
        } else {
            format!(r#"fill="{fill}" stroke="none""#)
        }
    };

    let face_path = |out: &mut String, f: usize, style: &str| {
        let [i, j, k] = map.faces[f];
        let (a, b, c) = (map.coords[i], map.coords[j], map.coords[k]);
        writeln!(
            out,
            r#"  <path d="M {} {} L {} {} L {} {} Z" {}/>"#,
            fmt_coord(a.x),
            fmt_coord(flip_y(a.y)),
            fmt_coord(b.x),
            fmt_coord(flip_y(b.y)),
            fmt_coord(c.x),
            fmt_coord(flip_y(c.y)),
            style,
        )
        .unwrap();
    };

    writeln!(out, r#"  <g id="sea">"#).unwrap();
    for f in 0..map.face_count() {
        if !map.land_mask[f] {
            face_path(&mut out, f, &stroke_attr(SEA_FILL));
        }
    }
    writeln!(out, "  </g>").unwrap();

    writeln!(out, r#"  <g id="land">"#).unwrap();
    for (k, &f) in land_faces.iter().enumerate() {
        let fill = ramp_color(values[k], vmin, vmax);
        face_path(&mut out, f, &stroke_attr(&fill));
    }
    writeln!(out, "  </g>").unwrap();

    // Legend: stacked ramp samples from max (top) to min (bottom), plus
    // min/max labels. Sampled fine enough to read as a continuous bar.
    let legend_x = max_x + margin;
    let steps = 64;
    writeln!(out, r#"  <g id="legend">"#).unwrap();
    for s in 0..steps {
        let value = vmax + (vmin - vmax) * (s as f64 + 0.5) / steps as f64;
        let y = min_y + height * s as f64 / steps as f64;
        writeln!(
            out,
            r#"  <rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            fmt_coord(legend_x),
            fmt_coord(y),
            fmt_coord(legend_w),
            fmt_coord(height / steps as f64 + stroke_width),
            ramp_color(value, vmin, vmax),
        )
        .unwrap();
    }
    let font = 0.035 * height;
    let text_x = legend_x + 1.3 * legend_w;
    writeln!(
        out,
        r#"  <text x="{}" y="{}" font-family="sans-serif" font-size="{}">{:.4} max {}</text>"#,
        fmt_coord(text_x),
        fmt_coord(min_y + font),
        fmt_coord(font),
        vmax,
        opts.field_label,
    )
    .unwrap();
    writeln!(
        out,
        r#"  <text x="{}" y="{}" font-family="sans-serif" font-size="{}">{:.4} min {}</text>"#,
        fmt_coord(text_x),
        fmt_coord(max_y),
        fmt_coord(font),
        vmin,
        opts.field_label,
    )
    .unwrap();
    writeln!(out, "  </g>").unwrap();
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}

/// Renders and writes the document to `path`.
pub fn write_svg(map: &PlanarMap, values: &[f64], opts: &SvgOptions, path: &Path) -> Result<()> {
    let doc = render_svg(map, values, opts)?;
    std::fs::write(path, doc).map_err(|e| Error::io(path, e))
}
