use std::io::Write;

use crate::error::{Error, Result};
use crate::model::Capacity;

use super::region::{FrontierPoint, StabilityRegion};

/// Pareto frontier of a region, from the `lambda2` axis towards the
/// `lambda1` extent. Points are closure points (the region itself is open
/// along the frontier).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPolyline {
    pub vertices: Vec<FrontierPoint>,
}

/// Samples the frontier on `n_points` evenly spaced `lambda1` values over
/// `[0, beta q11]`, adding the corner where the `p* = 1` piece meets the
/// interior-`p*` piece.
pub fn boundary_polyline(region: &StabilityRegion, n_points: usize) -> Result<BoundaryPolyline> {
    if n_points < 2 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            value: n_points as f64,
            reason: "a polyline needs at least two points",
        });
    }
    let extent = region.lambda1_extent();
    let last = (n_points - 1) as f64;
    let mut xs: Vec<f64> = (0..n_points).map(|i| extent * (i as f64 / last)).collect();
    if let Some(x) = xs.last_mut() {
        *x = extent;
    }
    if region.channel().eta_positive() && !region.channel().is_collision() {
        let corner = region.battery_nonempty_prob() * region.channel().q112();
        if corner > 0.0 && corner < extent {
            xs.push(corner);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * extent.max(1.0));

    let vertices = xs
        .into_iter()
        .filter_map(|x| region.frontier_point(x))
        .collect();
    Ok(BoundaryPolyline { vertices })
}

impl BoundaryPolyline {
    /// Writes `lambda1,lambda2,branch` rows, preceded by `# `-prefixed
    /// comment lines for each entry of `preamble`.
    pub fn write_csv<W: Write>(&self, mut out: W, preamble: &[(String, String)]) -> Result<()> {
        for (k, v) in preamble {
            writeln!(out, "# {k} = {v}").map_err(|e| Error::io("<csv>", e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda1", "lambda2", "branch"])?;
        for v in &self.vertices {
            w.write_record([v.lambda1.to_string(), v.lambda2.to_string(), v.branch.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Largest `lambda2` gap against `other`, evaluated at this polyline's
    /// `lambda1` values. `None` if `other` has no frontier at one of them.
    pub fn max_gap_against(&self, other: &StabilityRegion) -> Option<f64> {
        self.vertices.iter().try_fold(0.0f64, |worst, v| {
            other
                .frontier_point(v.lambda1)
                .map(|p| worst.max((p.lambda2 - v.lambda2).abs()))
        })
    }
}

/// Metadata block written next to a polyline.
pub fn region_metadata(region: &StabilityRegion) -> Vec<(String, String)> {
    let capacity: Capacity = region.energy().capacity();
    vec![
        ("eta".into(), region.eta().to_string()),
        ("delta".into(), region.energy().delta().to_string()),
        ("capacity".into(), capacity.to_string()),
        (
            "battery_nonempty_prob".into(),
            region.battery_nonempty_prob().to_string(),
        ),
    ]
}
