//! Minimal SVG output for planar ranges and bisection traces.

use std::fmt::Write;

use mconvex_core::geometry::PointD;
use mconvex_core::ranges::MemberStatus;

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;

struct Frame {
    min: (f64, f64),
    scale: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for (x, y) in points {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        if !lo.0.is_finite() {
            lo = (-1.0, -1.0);
            hi = (1.0, 1.0);
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
        Frame { min: lo, scale: (SIZE - 2.0 * PAD) / span }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (PAD + (x - self.min.0) * self.scale, SIZE - PAD - (y - self.min.1) * self.scale)
    }
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn polygon(out: &mut String, f: &Frame, pts: &[PointD], style: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = f.map(p.coords[0], p.coords[1]);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" {style}/>"#, coords.join(" "));
}

/// Filled inner polygon inside the outline of the outer one.
pub fn sandwich(inner: &[PointD], outer: &[PointD]) -> String {
    let f = Frame::fit(inner.iter().chain(outer).filter(|p| p.dim() == 2).map(|p| (p.coords[0], p.coords[1])));
    let mut out = String::new();
    header(&mut out);
    if !outer.is_empty() {
        polygon(&mut out, &f, outer, r##"fill="none" stroke="#c0392b" stroke-width="1""##);
    }
    polygon(&mut out, &f, inner, r##"fill="#aed6f1" stroke="#1f618d" stroke-width="1.5""##);
    out.push_str("</svg>\n");
    out
}

/// α against evaluation step; members in blue, non-members in red.
pub fn theta_trace(trace: &[(f64, MemberStatus)]) -> String {
    let f = Frame::fit(trace.iter().enumerate().map(|(i, (a, _))| (i as f64, *a)));
    let mut out = String::new();
    header(&mut out);
    let line: Vec<String> = trace
        .iter()
        .enumerate()
        .map(|(i, (a, _))| {
            let (x, y) = f.map(i as f64, *a);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#555" stroke-width="1"/>"##, line.join(" "));
    for (i, (a, s)) in trace.iter().enumerate() {
        let (x, y) = f.map(i as f64, *a);
        let colour = match s {
            MemberStatus::In | MemberStatus::Boundary => "#1f618d",
            MemberStatus::Out => "#c0392b",
            MemberStatus::Unknown => "#7f8c8d",
        };
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{colour}"/>"#);
    }
    out.push_str("</svg>\n");
    out
}
