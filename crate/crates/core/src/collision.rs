//! Circle-based occupancy tests against the lattice.
//!
//! Every obstacle is one circle or a chain of circles. Path-like structures
//! (predictions, blocked zones) remove nodes, which is cheap; spot-like
//! structures (static obstacles, vehicles) remove edges, whose sampled
//! geometry they might cut without covering a node. Removal is realized as
//! overlay sets so the offline graph itself is never touched.

use alloc::vec;
use alloc::vec::Vec;

use crate::lattice::{Lattice, LatticeEdge, LatticeNode};
use crate::math;
use crate::ref_line::ReferenceLine;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleKind {
    Static,
    Vehicle,
    ZoneSample,
    PredictionSample,
}

impl ObstacleKind {
    /// Path-like structures block nodes; spot-like structures block edges.
    pub fn is_path_like(self) -> bool {
        matches!(self, ObstacleKind::ZoneSample | ObstacleKind::PredictionSample)
    }

    /// Dynamic objects are excluded from the "straight" primitive; the
    /// velocity planner handles them there.
    pub fn is_dynamic(self) -> bool {
        matches!(self, ObstacleKind::Vehicle | ObstacleKind::PredictionSample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleObstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub kind: ObstacleKind,
}

/// Circles belonging to one object; they share the kind by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleGroup {
    pub kind: ObstacleKind,
    pub circles: Vec<CircleObstacle>,
    pub path_like: bool,
}

impl ObstacleGroup {
    pub fn new(kind: ObstacleKind, circles: impl IntoIterator<Item = (f64, f64, f64)>) -> Self {
        let circles = circles
            .into_iter()
            .map(|(x, y, radius)| CircleObstacle { x, y, radius, kind })
            .collect();
        ObstacleGroup { kind, circles, path_like: kind.is_path_like() }
    }
}

/// Per-cycle obstacle snapshot.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObstacleSet {
    pub groups: Vec<ObstacleGroup>,
}

impl ObstacleSet {
    pub fn empty() -> Self {
        ObstacleSet { groups: Vec::new() }
    }

    pub fn push(&mut self, group: ObstacleGroup) {
        self.groups.push(group);
    }

    pub fn circles(&self) -> impl Iterator<Item = &CircleObstacle> {
        self.groups.iter().flat_map(|g| g.circles.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.circles.is_empty())
    }
}

#[inline]
fn point_hits(x: f64, y: f64, circles: &[CircleObstacle], veh_radius: f64) -> bool {
    for c in circles {
        let dx = x - c.x;
        let dy = y - c.y;
        let reach = c.radius + veh_radius;
        if dx * dx + dy * dy < reach * reach {
            return true;
        }
    }
    false
}

/// Node occupancy: squared-distance test of the node position against every
/// circle, inflated by the vehicle radius.
pub fn node_blocked(node: &LatticeNode, obs: &ObstacleSet, veh_radius: f64) -> bool {
    obs.groups.iter().any(|g| point_hits(node.pose.x, node.pose.y, &g.circles, veh_radius))
}

/// Straight segment occupancy at roughly 1 m sampling, for connector checks
/// outside the precomputed edge geometry.
pub fn segment_blocked<'a>(
    from: (f64, f64),
    to: (f64, f64),
    groups: impl Iterator<Item = &'a ObstacleGroup>,
    veh_radius: f64,
) -> bool {
    let len = math::hypot(to.0 - from.0, to.1 - from.1);
    let steps = math::ceil(len).max(1.0) as usize;
    let groups: Vec<&ObstacleGroup> = groups.collect();
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = from.0 + (to.0 - from.0) * t;
        let y = from.1 + (to.1 - from.1) * t;
        if groups.iter().any(|g| point_hits(x, y, &g.circles, veh_radius)) {
            return true;
        }
    }
    false
}

/// Conservative bounding circle over the sampled points of an edge.
fn bounding_circle(edge: &LatticeEdge) -> (f64, f64, f64) {
    let n = edge.sampled.len();
    let mid = n / 2;
    let (cx, cy) = (edge.sampled.x[mid], edge.sampled.y[mid]);
    let mut r2: f64 = 0.0;
    for k in 0..n {
        let dx = edge.sampled.x[k] - cx;
        let dy = edge.sampled.y[k] - cy;
        r2 = r2.max(dx * dx + dy * dy);
    }
    (cx, cy, math::sqrt(r2))
}

fn edge_hits(edge: &LatticeEdge, circles: &[CircleObstacle], veh_radius: f64, bound: (f64, f64, f64)) -> bool {
    let (bx, by, br) = bound;
    for c in circles {
        let reach = c.radius + veh_radius;
        let dx = c.x - bx;
        let dy = c.y - by;
        let cutoff = br + reach;
        // Early out: the circle cannot touch any sample.
        if dx * dx + dy * dy > cutoff * cutoff {
            continue;
        }
        for k in 0..edge.sampled.len() {
            let ex = edge.sampled.x[k] - c.x;
            let ey = edge.sampled.y[k] - c.y;
            if ex * ex + ey * ey < reach * reach {
                return true;
            }
        }
    }
    false
}

/// Edge occupancy: any sampled point of the edge within reach of any circle,
/// with a bounding-circle early out per circle.
pub fn edge_blocked(edge: &LatticeEdge, obs: &ObstacleSet, veh_radius: f64) -> bool {
    let bound = bounding_circle(edge);
    obs.groups.iter().any(|g| edge_hits(edge, &g.circles, veh_radius, bound))
}

/// Overlay sets for a lattice window: path-like groups contribute blocked
/// nodes, spot-like groups blocked edges. The lattice itself is untouched.
///
/// `window` lists the layer indices under consideration; edge tests cover
/// the out-edges of every window layer but the last.
pub fn build_blocked_sets(
    lat: &Lattice,
    window: &[u32],
    obs: &ObstacleSet,
    veh_radius: f64,
) -> (Vec<bool>, Vec<bool>) {
    build_blocked_sets_filtered(lat, window, obs.groups.iter(), veh_radius)
}

/// Same as [`build_blocked_sets`] over an arbitrary subset of groups.
pub fn build_blocked_sets_filtered<'a>(
    lat: &Lattice,
    window: &[u32],
    groups: impl Iterator<Item = &'a ObstacleGroup> + Clone,
    veh_radius: f64,
) -> (Vec<bool>, Vec<bool>) {
    let mut blocked_nodes = vec![false; lat.nodes().len()];
    let mut blocked_edges = vec![false; lat.edges().len()];

    let node_groups: Vec<&ObstacleGroup> =
        groups.clone().filter(|g| g.path_like && !g.circles.is_empty()).collect();
    let edge_groups: Vec<&ObstacleGroup> =
        groups.filter(|g| !g.path_like && !g.circles.is_empty()).collect();

    if !node_groups.is_empty() {
        for &li in window {
            for id in lat.layer_nodes(li as usize) {
                let n = lat.node(id);
                if node_groups.iter().any(|g| point_hits(n.pose.x, n.pose.y, &g.circles, veh_radius)) {
                    blocked_nodes[id as usize] = true;
                }
            }
        }
    }
    if !edge_groups.is_empty() {
        for &li in window.iter().take(window.len().saturating_sub(1)) {
            for id in lat.layer_nodes(li as usize) {
                for &ei in lat.out_edges(id) {
                    let e = lat.edge(ei);
                    let bound = bounding_circle(e);
                    if edge_groups.iter().any(|g| edge_hits(e, &g.circles, veh_radius, bound)) {
                        blocked_edges[ei as usize] = true;
                    }
                }
            }
        }
    }
    (blocked_nodes, blocked_edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Path-like circle chain covering one side of the track over a station
/// range: from `inner_offset` out to the bound, sized so nodes strictly
/// inside the opposite side stay clear.
pub fn zone_chain(
    line: &ReferenceLine,
    s_start: f64,
    s_end: f64,
    side: Side,
    inner_offset: f64,
    veh_radius: f64,
    spacing: f64,
) -> ObstacleGroup {
    let len = line.forward_gap(s_start, s_end);
    let steps = math::ceil(len / spacing).max(1.0) as usize;
    let mut circles = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let s = s_start + len * k as f64 / steps as f64;
        let r = line.sample(s);
        let w = match side {
            Side::Left => r.w_left,
            Side::Right => r.w_right,
        };
        let half_span = (w - inner_offset) / 2.0;
        if half_span <= 0.0 {
            continue;
        }
        let l_center = match side {
            Side::Left => inner_offset + half_span,
            Side::Right => -(inner_offset + half_span),
        };
        // Inflate so consecutive circles overlap across the gap between
        // stations without spilling past the inner offset by more than the
        // sag term.
        let reach = math::hypot(half_span, spacing / 2.0);
        let radius = reach - veh_radius;
        let (x, y) = line.to_cartesian(s, l_center);
        circles.push((x, y, radius.max(0.05)));
    }
    ObstacleGroup::new(ObstacleKind::ZoneSample, circles)
}
