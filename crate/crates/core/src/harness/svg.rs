//! Hand-written SVG of region frontiers. Unbounded batteries are drawn solid,
//! finite ones dotted.

use std::fmt::Write as _;

use crate::model::Capacity;
use crate::regions::{BoundaryPolyline, FrontierPoint, StabilityRegion};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 4] = ["#1f4e9c", "#b5392e", "#2e7d32", "#6a3d9a"];

pub struct RegionCurve<'a> {
    pub region: &'a StabilityRegion,
    pub polyline: &'a BoundaryPolyline,
}

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        LEFT + v / self.x_max * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - v / self.y_max * (HEIGHT - TOP - BOTTOM)
    }
}

fn capacity_label(c: Capacity) -> String {
    match c {
        Capacity::Unbounded => "unbounded battery".into(),
        Capacity::Finite(n) => format!("battery capacity {n}"),
    }
}

/// Vertices worth labelling: both ends and the last vertex of each branch,
/// which is the corner shared with the next one.
fn corners(vertices: &[FrontierPoint]) -> Vec<FrontierPoint> {
    let mut out = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        let first = i == 0;
        let last = i + 1 == vertices.len();
        if first || last || vertices[i + 1].branch != v.branch {
            out.push(*v);
        }
    }
    out
}

/// Renders the curves on shared axes. The output contains no timestamps, so
/// equal inputs give equal bytes.
pub fn render_region_svg(curves: &[RegionCurve<'_>], title: &str) -> String {
    let mut x_max: f64 = 0.0;
    let mut y_max: f64 = 0.0;
    for c in curves {
        x_max = x_max.max(c.region.lambda1_extent());
        for v in &c.polyline.vertices {
            y_max = y_max.max(v.lambda2);
        }
    }
    let frame = Frame {
        x_max: if x_max > 0.0 { x_max * 1.08 } else { 1.0 },
        y_max: if y_max > 0.0 { y_max * 1.08 } else { 1.0 },
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<!-- cogstab {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="28" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes
    let (x0, y0) = (frame.x(0.0), frame.y(0.0));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{:.2} L{x0:.2},{y0:.2} L{:.2},{y0:.2}" stroke="black" fill="none"/>"#,
        TOP,
        WIDTH - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">λ1 (primary arrivals per slot)</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">λ2 (secondary arrivals per slot)</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">0</text>"#, x0 - 6.0, y0 + 14.0);

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = match c.region.energy().capacity() {
            Capacity::Unbounded => "",
            Capacity::Finite(_) => r#" stroke-dasharray="2,4""#,
        };

        // extent on the lambda1 axis and the intercept on the lambda2 axis
        let extent = c.region.lambda1_extent();
        let symbol = match c.region.energy().capacity() {
            Capacity::Unbounded => "δq11",
            Capacity::Finite(_) => "βq11",
        };
        let ex = frame.x(extent);
        let _ = writeln!(
            s,
            r#"<line x1="{ex:.2}" y1="{y0:.2}" x2="{ex:.2}" y2="{:.2}" stroke="{color}"/>"#,
            y0 + 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{ex:.2}" y="{:.2}" text-anchor="middle" fill="{color}">{symbol} = {extent:.4}</text>"#,
            y0 + 20.0 + 14.0 * i as f64
        );
        if let Some(top) = c.polyline.vertices.first() {
            let ty = frame.y(top.lambda2);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ty:.2}" x2="{x0:.2}" y2="{ty:.2}" stroke="{color}"/>"#,
                x0 - 6.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="{color}">{:.4}</text>"#,
                x0 - 8.0,
                ty + 4.0 + 14.0 * i as f64,
                top.lambda2
            );
        }

        // frontier
        let mut d = String::new();
        for (k, v) in c.polyline.vertices.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if k == 0 { "M" } else { "L" },
                frame.x(v.lambda1),
                frame.y(v.lambda2)
            );
        }
        if let Some(last) = c.polyline.vertices.last() {
            // close down to the lambda1 axis at the extent
            let _ = write!(d, "L{:.2},{y0:.2}", frame.x(last.lambda1));
        }
        let _ = writeln!(
            s,
            r#"<path d="{}" stroke="{color}" stroke-width="2" fill="none"{dash}/>"#,
            d.trim_end()
        );

        for v in corners(&c.polyline.vertices) {
            let (px, py) = (frame.x(v.lambda1), frame.y(v.lambda2));
            let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3.5" fill="{color}"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" fill="{color}">{} ({:.3}, {:.3})</text>"#,
                px + 6.0,
                py - 6.0 - 14.0 * i as f64,
                escape(v.branch.label()),
                v.lambda1,
                v.lambda2
            );
        }

        // legend
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT - 230.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}, δ = {}</text>"#,
            lx + 38.0,
            ly + 4.0,
            capacity_label(c.region.energy().capacity()),
            c.region.energy().delta()
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChannelModel, EnergyModel};
    use crate::regions::{boundary_polyline, build_region};

    fn svg_for(energies: &[EnergyModel]) -> String {
        let ch = ChannelModel::new(0.9, 0.8, 0.6, 0.5).unwrap();
        let regions: Vec<_> = energies.iter().map(|e| build_region(&ch, e)).collect();
        let polys: Vec<_> = regions.iter().map(|r| boundary_polyline(r, 21).unwrap()).collect();
        let curves: Vec<_> = regions
            .iter()
            .zip(&polys)
            .map(|(region, polyline)| RegionCurve { region, polyline })
            .collect();
        render_region_svg(&curves, "C0 <test>")
    }

    #[test]
    fn solid_and_dotted_curves() {
        let svg = svg_for(&[EnergyModel::unbounded(0.4).unwrap(), EnergyModel::finite(0.4, 2).unwrap()]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"width="800" height="600""#));
        assert_eq!(svg.matches("stroke-width=\"2\" fill=\"none\"/>").count(), 1);
        assert_eq!(svg.matches("stroke-width=\"2\" fill=\"none\" stroke-dasharray").count(), 1);
        assert!(svg.contains("δq11 = 0.3600"));
        assert!(svg.contains("R1'' (0.360, 0.480)"));
        assert!(svg.contains("R1' (0.240, 0.680)"));
        assert!(svg.contains("C0 &lt;test&gt;"));
        assert!(svg.contains(concat!("cogstab ", env!("CARGO_PKG_VERSION"))));
    }

    #[test]
    fn rendering_is_deterministic() {
        let e = [EnergyModel::unbounded(0.4).unwrap()];
        assert_eq!(svg_for(&e), svg_for(&e));
    }

    #[test]
    fn zero_energy_does_not_divide_by_zero() {
        let svg = svg_for(&[EnergyModel::unbounded(0.0).unwrap()]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
