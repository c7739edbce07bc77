//! Synthetic reference lines and graphs shared by the unit tests.

use alloc::vec::Vec;

use crate::lattice::{GraphParams, Lattice, LatticeEdge, LatticeNode};
use crate::math;
use crate::ref_line::{RefLinePoint, ReferenceLine};
use crate::spline::{self, Pose};

/// Circular line with analytic fields; starts at the origin heading +x,
/// counterclockwise around (0, radius).
pub fn ring(radius: f64, w: f64, v_ref: f64) -> ReferenceLine {
    let lap = core::f64::consts::TAU * radius;
    let n = (lap.ceil() as usize).max(16);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let phi = i as f64 / n as f64 * core::f64::consts::TAU;
        pts.push(RefLinePoint {
            s: radius * phi,
            x: radius * math::sin(phi),
            y: radius - radius * math::cos(phi),
            theta: math::wrap_angle(phi),
            kappa: 1.0 / radius,
            v_ref,
            w_left: w,
            w_right: w,
        });
    }
    ReferenceLine::new(pts).unwrap()
}

/// Ring geometry with the curvature column forced to zero: a "straight only"
/// line as far as layer placement is concerned, with closed geometry.
pub fn flat_loop(lap: f64, w: f64, v_ref: f64) -> ReferenceLine {
    let radius = lap / core::f64::consts::TAU;
    let mut line = ring(radius, w, v_ref);
    let pts: Vec<RefLinePoint> =
        line.points().iter().map(|p| RefLinePoint { kappa: 0.0, ..*p }).collect();
    line = ReferenceLine::new(pts).unwrap();
    line
}

/// Stadium track: two straights of `straight_len` joined by semicircles of
/// `radius`; analytic stations, headings and curvatures, constant width.
pub fn oval(straight_len: f64, radius: f64, w: f64, v_ref: f64) -> ReferenceLine {
    let step = 1.0;
    let mut pts = Vec::new();
    let arc = core::f64::consts::PI * radius;

    // First straight: (0,0) -> (L,0) heading +x.
    let mut s = 0.0;
    while s < straight_len {
        pts.push(point(s, s, 0.0, 0.0, 0.0, w, v_ref));
        s += step;
    }
    // First semicircle around (L, radius), heading 0 -> pi.
    let mut d = 0.0;
    while d < arc {
        let phi = d / radius;
        pts.push(point(
            straight_len + d,
            straight_len + radius * math::sin(phi),
            radius - radius * math::cos(phi),
            math::wrap_angle(phi),
            1.0 / radius,
            w,
            v_ref,
        ));
        d += step;
    }
    // Back straight: (L, 2R) -> (0, 2R) heading pi.
    let base = straight_len + arc;
    let mut t = 0.0;
    while t < straight_len {
        pts.push(point(base + t, straight_len - t, 2.0 * radius, core::f64::consts::PI, 0.0, w, v_ref));
        t += step;
    }
    // Second semicircle around (0, radius), heading pi -> 2 pi.
    let base = 2.0 * straight_len + arc;
    let mut d = 0.0;
    while d < arc {
        let phi = core::f64::consts::PI + d / radius;
        pts.push(point(
            base + d,
            -radius * math::sin(phi - core::f64::consts::PI),
            radius + radius * math::cos(phi - core::f64::consts::PI),
            math::wrap_angle(phi),
            1.0 / radius,
            w,
            v_ref,
        ));
        d += step;
    }
    ReferenceLine::new(pts).unwrap()
}

fn point(s: f64, x: f64, y: f64, theta: f64, kappa: f64, w: f64, v_ref: f64) -> RefLinePoint {
    RefLinePoint { s, x, y, theta, kappa, v_ref, w_left: w, w_right: w }
}

/// Flat loop whose left width grows with the station; at s = 30 the left
/// width is exactly 3.0 so a 0.5 m node grid lands on the margin.
pub fn widening_loop() -> ReferenceLine {
    let radius = 400.0 / core::f64::consts::TAU;
    let base = ring(radius, 3.0, 20.0);
    let pts: Vec<RefLinePoint> = base
        .points()
        .iter()
        .map(|p| RefLinePoint {
            kappa: 0.0,
            w_left: 3.0 + 0.05 * (p.s - 30.0),
            ..*p
        })
        .collect();
    ReferenceLine::new(pts).unwrap()
}

/// Random-cost cyclic lattice for search tests: `n_layers` layers 10 m
/// apart, `per_layer` nodes each, edges between consecutive layers kept with
/// probability 0.85. Geometry is real (fitted segments) but irrelevant to
/// the search; costs come from `rng`.
pub fn synthetic_lattice(
    n_layers: usize,
    per_layer: usize,
    rng: &mut impl FnMut() -> f64,
) -> Lattice {
    let line = ring(40.0, 8.0, 20.0);
    let stations: Vec<f64> = (0..n_layers).map(|i| i as f64 * 10.0).collect();
    let mut layers = Vec::with_capacity(n_layers);
    for (li, &s) in stations.iter().enumerate() {
        let mut layer = Vec::with_capacity(per_layer);
        for j in 0..per_layer {
            let lateral_idx = j as i32 - (per_layer / 2) as i32;
            let l = lateral_idx as f64 * 0.5;
            let (x, y) = line.to_cartesian(s, l);
            let theta = line.sample(s).theta;
            layer.push(LatticeNode {
                layer_idx: li as u32,
                lateral_idx,
                s,
                l,
                pose: Pose { x, y, theta },
                d_lat: l,
                on_raceline: lateral_idx == 0,
            });
        }
        layers.push(layer);
    }
    let flat: Vec<LatticeNode> = layers.iter().flatten().copied().collect();
    let mut edges = Vec::new();
    for li in 0..n_layers {
        let lj = (li + 1) % n_layers;
        for a in 0..per_layer {
            for b in 0..per_layer {
                if rng() >= 0.85 {
                    continue;
                }
                let from = (li * per_layer + a) as u32;
                let to = (lj * per_layer + b) as u32;
                let f = &flat[from as usize];
                let t = &flat[to as usize];
                let segment = spline::fit_c1_segment(f.pose, t.pose).unwrap();
                let sampled = spline::sample_segment(&segment, 4).unwrap();
                edges.push(LatticeEdge {
                    from,
                    to,
                    s_len: segment.s_len,
                    segment,
                    sampled,
                    kappa_avg: 0.0,
                    kappa_range: 0.0,
                    cost: rng() * 10.0,
                });
            }
        }
    }
    Lattice::from_parts(line, GraphParams::default(), 0, stations, layers, edges).unwrap()
}

/// Hand-built cyclic 3-layer lattice with one dead-end node (layer 1,
/// lateral index 2). Returns the lattice and the dead node's identity.
pub fn three_layer_with_dead_end() -> (Lattice, (u32, i32)) {
    let line = ring(10.0, 5.0, 10.0);
    let params = GraphParams::default();
    let stations = alloc::vec![0.0, 10.0, 20.0];

    let node = |layer_idx: u32, lateral_idx: i32, s: f64| {
        let l = lateral_idx as f64 * 0.5;
        let (x, y) = line.to_cartesian(s, l);
        let theta = line.sample(s).theta;
        LatticeNode {
            layer_idx,
            lateral_idx,
            s,
            l,
            pose: Pose { x, y, theta },
            d_lat: l,
            on_raceline: lateral_idx == 0,
        }
    };
    let layers = alloc::vec![
        alloc::vec![node(0, -1, 0.0), node(0, 1, 0.0)],
        alloc::vec![node(1, 0, 10.0), node(1, 2, 10.0)],
        alloc::vec![node(2, 0, 20.0)],
    ];
    // Flattened ids: A1=0, A2=1, B=2, X=3, C=4. X has parents but no child.
    let mk = |from: u32, to: u32, nodes: &[&LatticeNode]| -> LatticeEdge {
        let f = nodes[from as usize];
        let t = nodes[to as usize];
        let segment = spline::fit_c1_segment(f.pose, t.pose).unwrap();
        let sampled = spline::sample_segment(&segment, 8).unwrap();
        LatticeEdge {
            from,
            to,
            s_len: segment.s_len,
            segment,
            sampled,
            kappa_avg: 0.0,
            kappa_range: 0.0,
            cost: 1.0,
        }
    };
    let flat: Vec<&LatticeNode> = layers.iter().flatten().collect();
    let edges = alloc::vec![
        mk(0, 2, &flat),
        mk(1, 2, &flat),
        mk(0, 3, &flat),
        mk(1, 3, &flat),
        mk(2, 4, &flat),
        mk(4, 0, &flat),
        mk(4, 1, &flat),
    ];
    let lat = Lattice::from_parts(line, params, 0, stations, layers, edges).unwrap();
    (lat, (1, 2))
}
