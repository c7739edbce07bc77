//! Static SVG overview of a simulation run: track bounds, race line, zones,
//! obstacles, and position samples of ego and lead at a fixed time spacing.

use std::fmt::Write as _;

use raceplan_core::collision::Side;
use raceplan_core::ReferenceLine;

use crate::config::ZoneSpec;
use crate::sim::TraceRow;

pub struct Scene<'a> {
    pub track: &'a ReferenceLine,
    pub raceline: &'a ReferenceLine,
    pub obstacles: &'a [(f64, f64, f64)],
    pub zones: &'a [ZoneSpec],
    pub trace: &'a [TraceRow],
    /// Spacing of the ego/lead position samples (s).
    pub plot_period: f64,
}

fn polyline(points: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(points.len() * 16);
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // SVG y grows downward.
        let _ = write!(out, "{:.2},{:.2}", x, -y);
    }
    out
}

fn bound_points(line: &ReferenceLine, left: bool) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = line
        .points()
        .iter()
        .map(|p| {
            let w = if left { p.w_left } else { -p.w_right };
            (p.x - p.theta.sin() * w, p.y + p.theta.cos() * w)
        })
        .collect();
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    pts
}

pub fn render(scene: &Scene) -> String {
    let track = scene.track;
    let left = bound_points(track, true);
    let right = bound_points(track, false);

    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for &(x, y) in left.iter().chain(&right) {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let margin = 15.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.1} {:.1} {:.1} {:.1}">"#,
        min_x - margin,
        -(max_y + margin),
        (max_x - min_x) + 2.0 * margin,
        (max_y - min_y) + 2.0 * margin
    );
    let _ = writeln!(svg, r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#fafafa"/>"##,
        min_x - margin, -(max_y + margin), (max_x - min_x) + 2.0 * margin, (max_y - min_y) + 2.0 * margin);

    // Blocked zones as shaded bands between the inner offset and the bound.
    for zone in scene.zones {
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        let len = track.forward_gap(zone.s_start, zone.s_end);
        let steps = (len / 3.0).ceil() as usize;
        for k in 0..=steps {
            let s = zone.s_start + len * k as f64 / steps as f64;
            let r = track.sample(s);
            let w = match zone.side {
                Side::Left => r.w_left,
                Side::Right => -r.w_right,
            };
            outer.push(track.to_cartesian(s, w));
            inner.push(track.to_cartesian(s, 0.25 * w.signum()));
        }
        inner.reverse();
        outer.extend(inner);
        let _ = writeln!(
            svg,
            r##"<polygon points="{}" fill="#bbbbbb" fill-opacity="0.5"/>"##,
            polyline(&outer)
        );
    }

    for pts in [&left, &right] {
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#333333" stroke-width="0.5"/>"##,
            polyline(pts)
        );
    }

    let mut rl: Vec<(f64, f64)> = scene.raceline.points().iter().map(|p| (p.x, p.y)).collect();
    if let Some(&first) = rl.first() {
        rl.push(first);
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" fill="none" stroke="#4477cc" stroke-width="0.4" stroke-dasharray="3 2"/>"##,
        polyline(&rl)
    );

    for &(x, y, r) in scene.obstacles {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="#222222"/>"##,
            x, -y, r
        );
    }

    // Ego (orange) and lead (blue) position samples.
    let mut next_t = 0.0;
    for row in scene.trace {
        if row.t + 1e-9 < next_t {
            continue;
        }
        next_t = row.t + scene.plot_period;
        let (x, y) = scene.raceline.to_cartesian(row.ego_s, row.ego_l);
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="1.1" fill="#e07020" fill-opacity="0.85"/>"##,
            x, -y
        );
        if let (Some(ls), Some(ll)) = (row.lead_s, row.lead_l) {
            let (lx, ly) = scene.raceline.to_cartesian(ls, ll);
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="1.1" fill="#2060c0" fill-opacity="0.85"/>"##,
                lx, -ly
            );
        }
    }

    svg.push_str("</svg>\n");
    svg
}
