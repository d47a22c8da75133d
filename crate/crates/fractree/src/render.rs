//! CSV and SVG emitters for attractor point sets.
//!
//! The SVG is a plain scatter of dots with an auto-fitted view box; no curve
//! reconstruction is attempted, since the computed objects are point sets.

use crate::geometry::PointSet;
use crate::tree::Code;
use crate::{Error, Result};

/// CSV rows `code,x1,...,xm`, one attractor point per row, codes as digit
/// strings over `{1, 2}`.
pub fn attractor_csv(labeled: &[(Code, crate::geometry::Point)]) -> String {
    let mut out = String::new();
    for (code, point) in labeled {
        out.push_str(&code.to_string());
        for c in point.coords() {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

/// SVG scatter plot of a 2D point set: black dots on white, view box fitted
/// to the data with 5% padding, y axis pointing up.
pub fn svg_scatter(points: &PointSet, pixel_size: u32) -> Result<String> {
    if points.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: points.dim(),
            context: "svg scatter",
        });
    }
    let bbox = points.bounding_box();
    let (lo, hi) = (bbox.lower(), bbox.upper());
    let width = (hi[0] - lo[0]).max(1e-9);
    let height = (hi[1] - lo[1]).max(1e-9);
    let pad = 0.05 * width.max(height);
    let (min_x, min_y) = (lo[0] - pad, lo[1] - pad);
    let (w, h) = (width + 2.0 * pad, height + 2.0 * pad);
    let radius = 0.002 * w.max(h);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{pixel_size}\" height=\"{pixel_size}\" \
         viewBox=\"{min_x} {} {w} {h}\">\n",
        -(min_y + h)
    ));
    svg.push_str(&format!(
        "<rect x=\"{min_x}\" y=\"{}\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
        -(min_y + h)
    ));
    svg.push_str("<g fill=\"black\">\n");
    for p in points.iter() {
        let c = p.coords();
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{radius}\"/>\n",
            c[0],
            -c[1]
        ));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}
