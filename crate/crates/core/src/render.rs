//! Static SVG overlays of a scene, a flow field, trajectories and the goal
//! band. Output is plain text with fixed number formatting.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::grid::{norm, FlowFieldGrid, LabelMapping, Pixel, SemanticMap};
use crate::rollout::query_grid;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOptions {
    /// Dense query grid the arrows are taken from.
    pub grid_size: usize,
    /// Keep every `stride`-th grid cell along each axis.
    pub stride: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            grid_size: 100,
            stride: 10,
        }
    }
}

/// Number of arrows drawn for a field: `⌈g̃/stride⌉²`.
pub fn arrow_count(opts: &RenderOptions) -> usize {
    opts.grid_size.div_ceil(opts.stride).pow(2)
}

const OBJECT_COLORS: [&str; 8] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcbd22",
];

fn label_color(label: u8, mapping: &LabelMapping) -> &'static str {
    if mapping.free_labels.contains(&label) {
        "#ffffff"
    } else if mapping.targetable_labels.contains(&label) {
        OBJECT_COLORS[label as usize % OBJECT_COLORS.len()]
    } else {
        "#404040"
    }
}

#[derive(Debug, Clone, Default)]
pub struct Overlay<'a> {
    pub field: Option<&'a FlowFieldGrid>,
    pub annotated: Option<&'a Trajectory>,
    pub predicted: Option<&'a Trajectory>,
    pub goal_pixels: &'a [Pixel],
}

fn polyline(out: &mut String, class: &str, color: &str, traj: &Trajectory, w: f64, h: f64) {
    let pts: Vec<String> = traj
        .points()
        .iter()
        .map(|p| format!("{:.3},{:.3}", p.u() * w, p.v() * h))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
}

/// Renders the map as run-length rectangles per row, then the goal band,
/// field arrows and trajectories on top, in pixel coordinates.
pub fn render_svg(
    map: &SemanticMap,
    mapping: &LabelMapping,
    overlay: &Overlay,
    opts: &RenderOptions,
) -> Result<String> {
    if opts.stride == 0 || opts.grid_size == 0 {
        return Err(Error::Config(
            "render grid_size and stride must be >= 1".into(),
        ));
    }
    let (w, h) = map.labels.dims();
    let (wf, hf) = (w as f64, h as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{}" height="{}">"#,
        w * 3,
        h * 3
    );
    out.push_str("<g class=\"map\" shape-rendering=\"crispEdges\">\n");
    for y in 0..h {
        let mut x = 0;
        while x < w {
            let label = *map.labels.get(x, y);
            let start = x;
            while x < w && *map.labels.get(x, y) == label {
                x += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{start}" y="{y}" width="{}" height="1" fill="{}"/>"#,
                x - start,
                label_color(label, mapping)
            );
        }
    }
    out.push_str("</g>\n");

    if !overlay.goal_pixels.is_empty() {
        out.push_str("<g class=\"goal-band\" fill=\"#ffd700\" fill-opacity=\"0.6\">\n");
        for p in overlay.goal_pixels {
            let _ = writeln!(
                out,
                r#"<rect class="goal" x="{}" y="{}" width="1" height="1"/>"#,
                p.x, p.y
            );
        }
        out.push_str("</g>\n");
    }

    if let Some(field) = overlay.field {
        let g = opts.grid_size;
        let grid = query_grid(field, g)?;
        let cell_w = wf / g as f64;
        let cell_h = hf / g as f64;
        let reach = 0.8 * opts.stride as f64 * cell_w.min(cell_h);
        out.push_str("<g class=\"field\" stroke=\"#1f3a93\" stroke-width=\"0.6\">\n");
        for i in (0..g).step_by(opts.stride) {
            for j in (0..g).step_by(opts.stride) {
                let v = *grid.get(j, i);
                let n = norm(v);
                let (dx, dy) = if n > 0.0 {
                    (v[0] / n * reach, v[1] / n * reach)
                } else {
                    (0.0, 0.0)
                };
                let x0 = (j as f64 + 0.5) * cell_w;
                let y0 = (i as f64 + 0.5) * cell_h;
                let _ = writeln!(
                    out,
                    r#"<line class="arrow" x1="{x0:.3}" y1="{y0:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    x0 + dx,
                    y0 + dy
                );
            }
        }
        out.push_str("</g>\n");
    }

    if let Some(t) = overlay.annotated {
        polyline(&mut out, "trajectory annotated", "#00a000", t, wf, hf);
    }
    if let Some(t) = overlay.predicted {
        polyline(&mut out, "trajectory predicted", "#d00000", t, wf, hf);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
