//! SVG scatter plots of point clouds, optionally with field arrows.

use std::fmt::Write as _;

use crate::config::{Axis, PlotOptions};

const MARGIN: f64 = 30.0;
const MARKER_RADIUS: f64 = 2.5;
/// Longest arrow as a fraction of the cloud's projected extent.
const ARROW_FRACTION: f64 = 0.08;

/// How points of the embedding space land on the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// Orthographic onto two coordinate axes.
    Plane(usize, usize),
    /// Orthographic view along one axis of R³.
    Top(Axis),
    /// Perspective view of R³ from the given azimuth/elevation (radians).
    Perspective { azimuth: f64, elevation: f64 },
}

impl Projection {
    pub fn perspective() -> Self {
        Projection::Perspective {
            azimuth: (-60.0f64).to_radians(),
            elevation: 25.0f64.to_radians(),
        }
    }

    fn label(&self) -> String {
        match self {
            Projection::Plane(a, b) => format!("axes {a}/{b}"),
            Projection::Top(axis) => format!("top view along {axis:?}"),
            Projection::Perspective { .. } => "3D perspective".to_string(),
        }
    }
}

/// Projects cloud points (and optional arrow tips) onto the page plane.
struct Projector {
    projection: Projection,
    center: [f64; 3],
    camera_distance: f64,
}

impl Projector {
    fn new(projection: Projection, points: &[[f64; 3]]) -> Self {
        let n = points.len().max(1) as f64;
        let mut center = [0.0; 3];
        for p in points {
            for k in 0..3 {
                center[k] += p[k] / n;
            }
        }
        let radius = points
            .iter()
            .map(|p| (0..3).map(|k| (p[k] - center[k]).powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        Projector {
            projection,
            center,
            camera_distance: 3.0 * radius.max(1e-12),
        }
    }

    fn project(&self, p: &[f64; 3]) -> [f64; 2] {
        match self.projection {
            Projection::Plane(a, b) => [p[a], p[b]],
            Projection::Top(axis) => {
                let (a, b) = match axis {
                    Axis::X => (1, 2),
                    Axis::Y => (0, 2),
                    Axis::Z => (0, 1),
                };
                [p[a], p[b]]
            }
            Projection::Perspective { azimuth, elevation } => {
                let x = p[0] - self.center[0];
                let y = p[1] - self.center[1];
                let z = p[2] - self.center[2];
                let (sa, ca) = azimuth.sin_cos();
                let (se, ce) = elevation.sin_cos();
                let xr = x * ca - y * sa;
                let yr = x * sa + y * ca;
                let depth = yr * ce + z * se;
                let up = z * ce - yr * se;
                let f = self.camera_distance / (self.camera_distance + depth);
                [xr * f, up * f]
            }
        }
    }
}

fn lift(p: &[f64]) -> [f64; 3] {
    [
        p.first().copied().unwrap_or(0.0),
        p.get(1).copied().unwrap_or(0.0),
        p.get(2).copied().unwrap_or(0.0),
    ]
}

/// Renders one cloud as an SVG document.
///
/// Points beyond three dimensions are dropped. Arrows, when given, must
/// have one vector per point and are scaled so the longest one spans a
/// fixed fraction of the cloud's extent.
pub fn render(
    points: &[Vec<f64>],
    arrows: Option<&[Vec<f64>]>,
    projection: Projection,
    options: &PlotOptions,
    title: &str,
) -> String {
    let lifted: Vec<[f64; 3]> = points.iter().map(|p| lift(p)).collect();
    let projector = Projector::new(projection, &lifted);
    let page: Vec<[f64; 2]> = lifted.iter().map(|p| projector.project(p)).collect();

    let tips: Option<Vec<[f64; 2]>> = arrows.map(|vs| {
        let extent = bounds(&page).map_or(1.0, |(lo, hi)| (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12));
        let longest = vs
            .iter()
            .map(|v| v.iter().take(3).map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let scale = if longest > 0.0 {
            ARROW_FRACTION * extent / longest
        } else {
            0.0
        };
        lifted
            .iter()
            .zip(vs)
            .map(|(p, v)| {
                let v = lift(v);
                projector.project(&[p[0] + scale * v[0], p[1] + scale * v[1], p[2] + scale * v[2]])
            })
            .collect()
    });

    let mut all = page.clone();
    if let Some(t) = &tips {
        all.extend_from_slice(t);
    }
    let (lo, hi) = bounds(&all).unwrap_or(([0.0, 0.0], [1.0, 1.0]));
    let w = options.width as f64;
    let h = options.height as f64;
    let span_x = (hi[0] - lo[0]).max(1e-12);
    let span_y = (hi[1] - lo[1]).max(1e-12);
    let s = ((w - 2.0 * MARGIN) / span_x).min((h - 2.0 * MARGIN) / span_y);
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let to_page = |q: &[f64; 2]| [w / 2.0 + s * (q[0] - cx), h / 2.0 - s * (q[1] - cy)];

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        options.width, options.height, options.width, options.height
    );
    let _ = writeln!(
        svg,
        r##"<defs><marker id="head" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="#c0392b"/></marker></defs>"##
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="13">{} ({}, {} points)</text>"#,
        escape(title),
        projection.label(),
        points.len()
    );

    let _ = writeln!(svg, r##"<g id="points" fill="#2c3e50">"##);
    for q in &page {
        let [x, y] = to_page(q);
        let _ = writeln!(svg, r#"<circle cx="{x:.3}" cy="{y:.3}" r="{MARKER_RADIUS}"/>"#);
    }
    let _ = writeln!(svg, "</g>");

    if let Some(tips) = &tips {
        let _ = writeln!(
            svg,
            r##"<g id="arrows" stroke="#c0392b" stroke-width="1" marker-end="url(#head)">"##
        );
        for (q, t) in page.iter().zip(tips) {
            let [x1, y1] = to_page(q);
            let [x2, y2] = to_page(t);
            let _ = writeln!(svg, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(points: &[[f64; 2]]) -> Option<([f64; 2], [f64; 2])> {
    let first = points.first()?;
    let mut lo = *first;
    let mut hi = *first;
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    Some((lo, hi))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
