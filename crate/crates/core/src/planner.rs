//! Per-cycle online planning on top of the offline lattice.
//!
//! Each cycle windows the graph from the first layer ahead of the predicted
//! ego position out to the planning horizon, overlays obstacle blockings,
//! derives one template per action primitive ("straight" never sees dynamic
//! objects, "left"/"right" additionally block the respective side of the
//! lead), runs a forward relaxation in layer order toward a virtual goal
//! node, and post-processes each found node sequence into a curvature
//! continuous spline chain with a friction-limited velocity profile.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::collision::{self, ObstacleSet};
use crate::lattice::{EdgeId, Lattice, NodeId};
use crate::math;
use crate::spline::{self, Pose, SampledPath};
use crate::velocity::{self, FollowGains, FrictionParams, FrictionScale};

/// Lead-vehicle state in Frenét coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadState {
    pub s: f64,
    pub l: f64,
    pub v: f64,
}

/// One planning query: the ego pose predicted to the end of the calculation
/// period, the obstacle snapshot and the desired horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRequest {
    pub ego_s: f64,
    pub ego_l: f64,
    /// Planned ego velocity at the predicted position (m/s).
    pub ego_v: f64,
    /// Ego heading at the predicted position; defaults to the race-line
    /// heading at `ego_s`.
    pub ego_theta: Option<f64>,
    pub obstacles: ObstacleSet,
    pub lead: Option<LeadState>,
    /// Planning distance (m); raised to the graph's minimum horizon.
    pub horizon: f64,
}

/// Planner tuning independent of the offline graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    /// Collision inflation radius of the ego body (m); half the vehicle
    /// diagonal is a conservative single-circle cover.
    pub veh_radius: f64,
    /// Extra inflation while blocking nodes and edges, on top of
    /// `veh_radius`. The final geometry check runs at `veh_radius` alone, so
    /// surviving paths keep at least this much slack even where the smooth
    /// chain sags away from the node line.
    pub block_margin: f64,
    /// Arc step of emitted trajectories (m).
    pub resample_step: f64,
    /// Planner calculation period (s); the start layer must lie at least
    /// one period of travel ahead so the chain's first segment stays well
    /// conditioned.
    pub t_calc: f64,
    pub friction: FrictionParams,
    /// PD gains for the follow law; the safe distance scales with speed.
    pub follow_kp: f64,
    pub follow_kd: f64,
    pub d_safe_min: f64,
    pub d_safe_time: f64,
    /// Optional per-station friction scaling.
    pub scale: Option<FrictionScale>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            veh_radius: math::hypot(2.0, 4.8) / 2.0,
            block_margin: 0.5,
            resample_step: 1.0,
            t_calc: 0.1,
            friction: FrictionParams::default(),
            follow_kp: 0.5,
            follow_kd: 0.3,
            d_safe_min: 5.0,
            d_safe_time: 0.8,
            scale: None,
        }
    }
}

/// Windowed, obstacle-filtered view of the lattice for one cycle. The
/// blocked sets cover static structures only; dynamic objects enter through
/// the per-primitive action templates.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTemplate {
    /// Layer indices in traversal order; the first contains the start node,
    /// the last is the goal layer.
    pub window: Vec<u32>,
    pub blocked_nodes: Vec<bool>,
    pub blocked_edges: Vec<bool>,
    pub start_node: NodeId,
    pub goal_layer: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Primitive {
    Straight,
    Left,
    Right,
}

impl Primitive {
    pub fn as_str(self) -> &'static str {
        match self {
            Primitive::Straight => "straight",
            Primitive::Left => "left",
            Primitive::Right => "right",
        }
    }
}

/// One drivable candidate, ready for a downstream controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Path arc length from the trajectory start (m).
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub kappa: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// Summed edge cost of the underlying node path, including the virtual
    /// goal edge.
    pub path_cost: f64,
    pub infeasible_entry: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Map from action primitive to candidate trajectories; empty entries are
/// omitted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionSet {
    pub candidates: BTreeMap<Primitive, Vec<Trajectory>>,
}

impl ActionSet {
    pub fn get(&self, p: Primitive) -> Option<&[Trajectory]> {
        self.candidates.get(&p).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn primitives(&self) -> impl Iterator<Item = Primitive> + '_ {
        self.candidates.keys().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    /// Ego lateral offset outside the track bounds at its station.
    OutsideTrack { l: f64, w_left: f64, w_right: f64 },
    /// Every node of the first window layer is blocked.
    NoFeasibleStart,
}

impl core::fmt::Display for PlanError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PlanError::OutsideTrack { l, w_left, w_right } => {
                write!(f, "ego lateral offset {l:.2} outside track bounds [-{w_right:.2}, {w_left:.2}]")
            }
            PlanError::NoFeasibleStart => write!(f, "no feasible start node"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PlanError {}

/// Per-primitive overlay: the template blockings plus primitive-specific
/// removals, and the primitive's own start node. The straight template
/// recenters its start toward the race line; the overtake templates keep
/// the ego's lateral state so a maneuver in progress is continued rather
/// than restarted from the race line every cycle.
#[derive(Debug, Clone)]
pub struct ActionOverlay {
    pub primitive: Primitive,
    pub blocked_nodes: Vec<bool>,
    pub blocked_edges: Vec<bool>,
    pub start_node: NodeId,
}

/// Extract the local node template: window from the first layer strictly
/// ahead of the ego out to the horizon, with static blockings applied.
pub fn make_node_template(
    lat: &Lattice,
    req: &PlanRequest,
    config: &PlannerConfig,
) -> Result<NodeTemplate, PlanError> {
    let line = lat.line();
    let ego_s = line.wrap_station(req.ego_s);
    let at_ego = line.sample(ego_s);
    if req.ego_l > at_ego.w_left || req.ego_l < -at_ego.w_right {
        return Err(PlanError::OutsideTrack {
            l: req.ego_l,
            w_left: at_ego.w_left,
            w_right: at_ego.w_right,
        });
    }
    let horizon = req.horizon.max(lat.params().min_horizon);

    // First layer at least one calculation period of travel ahead of the
    // predicted ego station (2 m floor near standstill).
    let lookahead = (req.ego_v * config.t_calc).max(2.0);
    let n_layers = lat.layer_count();
    let mut start_layer = 0usize;
    let mut best_gap = f64::INFINITY;
    for (i, &s) in lat.layer_stations().iter().enumerate() {
        let gap = line.forward_gap(ego_s, s);
        if gap > lookahead && gap < best_gap {
            best_gap = gap;
            start_layer = i;
        }
    }

    // Accumulate layers until the horizon is reached, at most one full lap.
    let mut window = Vec::new();
    for k in 0..n_layers {
        let li = (start_layer + k) % n_layers;
        window.push(li as u32);
        if line.forward_gap(ego_s, lat.layer_stations()[li]) >= horizon && k > 0 {
            break;
        }
    }
    let goal_layer = *window.last().unwrap();

    // Static structures only: dynamic objects are handled per primitive.
    let (blocked_nodes, blocked_edges) = collision::build_blocked_sets_filtered(
        lat,
        &window,
        req.obstacles.groups.iter().filter(|g| !g.kind.is_dynamic()),
        config.veh_radius + config.block_margin,
    );

    let cone = lat.params().lat_ratio_max * best_gap;
    let ego_xy = line.to_cartesian(ego_s, req.ego_l);
    let start_node = pick_start_node(
        lat,
        window[0] as usize,
        ego_xy,
        req.ego_l,
        cone,
        true,
        &blocked_nodes,
        &blocked_edges,
        &req.obstacles,
        config.veh_radius,
    )
    .ok_or(PlanError::NoFeasibleStart)?;

    Ok(NodeTemplate { window, blocked_nodes, blocked_edges, start_node, goal_layer })
}

/// Start node of the first window layer. Admissible means unblocked, with at
/// least one unblocked outgoing edge (a start inside an inflated obstacle
/// corridor would strand the search), and with a clear straight connector
/// from the ego position (the chain toward the node must not cut a static
/// structure). Among the admissible nodes drivably reachable from the ego
/// offset (within the lateral-displacement cone of the start gap) the one
/// closest to the race line wins when `race_ward` is set, so replanning
/// recenters instead of pinning the current offset; otherwise the nearest
/// in-cone node wins, preserving the lateral state of a running maneuver.
/// With none in the cone, plain nearest-in-l applies.
#[allow(clippy::too_many_arguments)]
fn pick_start_node(
    lat: &Lattice,
    layer: usize,
    ego_xy: (f64, f64),
    ego_l: f64,
    cone: f64,
    race_ward: bool,
    blocked_nodes: &[bool],
    blocked_edges: &[bool],
    obstacles: &ObstacleSet,
    veh_radius: f64,
) -> Option<NodeId> {
    let mut in_cone: Option<(i32, f64, NodeId)> = None;
    let mut nearest: Option<(f64, i32, NodeId)> = None;
    for id in lat.layer_nodes(layer) {
        if blocked_nodes[id as usize] {
            continue;
        }
        if lat.out_edges(id).iter().all(|&ei| blocked_edges[ei as usize]) {
            continue;
        }
        let n = lat.node(id);
        if collision::segment_blocked(
            ego_xy,
            (n.pose.x, n.pose.y),
            obstacles.groups.iter().filter(|g| !g.kind.is_dynamic()),
            veh_radius,
        ) {
            continue;
        }
        let d = math::abs(n.l - ego_l);
        let m = n.lateral_idx.abs();
        if d <= cone + 1e-9 {
            let better = match in_cone {
                None => true,
                Some((bm, bd, _)) if race_ward => m < bm || (m == bm && d < bd),
                Some((bm, bd, _)) => d < bd || (d == bd && m < bm),
            };
            if better {
                in_cone = Some((m, d, id));
            }
        }
        let better = match nearest {
            None => true,
            Some((bd, bm, _)) => d < bd || (d == bd && m < bm),
        };
        if better {
            nearest = Some((d, m, id));
        }
    }
    in_cone.map(|(_, _, id)| id).or(nearest.map(|(_, _, id)| id))
}

/// Build the per-primitive overlays. Without a lead only "straight" exists.
/// With one, "left" blocks every node at `l <= l_lead` within one layer gap
/// of the lead (and symmetrically for "right"), on top of the dynamic-object
/// removals that the straight template deliberately skips.
pub fn make_action_templates(
    lat: &Lattice,
    template: &NodeTemplate,
    req: &PlanRequest,
    config: &PlannerConfig,
) -> Vec<ActionOverlay> {
    let mut overlays = vec![ActionOverlay {
        primitive: Primitive::Straight,
        blocked_nodes: template.blocked_nodes.clone(),
        blocked_edges: template.blocked_edges.clone(),
        start_node: template.start_node,
    }];
    let lead = match req.lead {
        Some(lead) => lead,
        None => return overlays,
    };

    let (dyn_nodes, dyn_edges) = collision::build_blocked_sets_filtered(
        lat,
        &template.window,
        req.obstacles.groups.iter().filter(|g| g.kind.is_dynamic()),
        config.veh_radius + config.block_margin,
    );

    let line = lat.line();
    let lead_s = line.wrap_station(lead.s);
    // Layer gap at the lead station bounds the longitudinal blocking span.
    let stations = lat.layer_stations();
    let mut gap_at_lead = lat.params().long_sep_straight;
    for i in 0..stations.len() {
        let j = (i + 1) % stations.len();
        if line.forward_gap(stations[i], lead_s) <= line.forward_gap(stations[i], stations[j]) {
            gap_at_lead = line.forward_gap(stations[i], stations[j]);
            break;
        }
    }

    for (primitive, keep_left) in [(Primitive::Left, true), (Primitive::Right, false)] {
        let mut nodes = template.blocked_nodes.clone();
        let mut edges = template.blocked_edges.clone();
        for (i, &d) in dyn_nodes.iter().enumerate() {
            nodes[i] |= d;
        }
        for (i, &d) in dyn_edges.iter().enumerate() {
            edges[i] |= d;
        }
        for &li in &template.window {
            for id in lat.layer_nodes(li as usize) {
                let n = lat.node(id);
                let along = line.forward_gap(lead_s, n.s).min(line.forward_gap(n.s, lead_s));
                if along > gap_at_lead {
                    continue;
                }
                let side_blocked =
                    if keep_left { n.l <= lead.l + 1e-9 } else { n.l >= lead.l - 1e-9 };
                if side_blocked {
                    nodes[id as usize] = true;
                }
            }
        }
        // The overtake start keeps the ego's lateral state against the
        // overlay's own blockings; an unreachable start drops the primitive.
        let ego_s = line.wrap_station(req.ego_s);
        let first_station = lat.layer_stations()[template.window[0] as usize];
        let cone = lat.params().lat_ratio_max * line.forward_gap(ego_s, first_station);
        let ego_xy = line.to_cartesian(ego_s, req.ego_l);
        let start = pick_start_node(
            lat,
            template.window[0] as usize,
            ego_xy,
            req.ego_l,
            cone,
            false,
            &nodes,
            &edges,
            &req.obstacles,
            config.veh_radius,
        );
        if let Some(start_node) = start {
            overlays.push(ActionOverlay {
                primitive,
                blocked_nodes: nodes,
                blocked_edges: edges,
                start_node,
            });
        }
    }
    overlays
}

/// Forward relaxation in layer order from the start node to the virtual node
/// of the goal layer. Virtual edges cost `w_rl * |d_lat|` of the goal node
/// and are not part of the returned path. Nodes within a layer relax in
/// order of |lateral_idx| so equal-cost ties resolve toward the race line.
///
/// Returns the node sequence and the total cost including the virtual edge,
/// or `None` when the goal layer is unreachable.
pub fn shortest_path(
    lat: &Lattice,
    window: &[u32],
    start: NodeId,
    blocked_nodes: &[bool],
    blocked_edges: &[bool],
) -> Option<(Vec<NodeId>, f64)> {
    if blocked_nodes[start as usize] {
        return None;
    }
    let n = lat.nodes().len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<EdgeId>> = vec![None; n];
    dist[start as usize] = 0.0;

    let layer_order = |li: usize| {
        let mut ids: Vec<NodeId> = lat.layer_nodes(li).collect();
        ids.sort_by_key(|&id| {
            let node = lat.node(id);
            (node.lateral_idx.abs(), node.lateral_idx)
        });
        ids
    };

    for w in 0..window.len() - 1 {
        for id in layer_order(window[w] as usize) {
            let d = dist[id as usize];
            if !d.is_finite() {
                continue;
            }
            for &ei in lat.out_edges(id) {
                if blocked_edges[ei as usize] {
                    continue;
                }
                let e = lat.edge(ei);
                if blocked_nodes[e.to as usize] {
                    continue;
                }
                let cand = d + e.cost;
                if cand < dist[e.to as usize] {
                    dist[e.to as usize] = cand;
                    parent[e.to as usize] = Some(ei);
                }
            }
        }
    }

    // Virtual goal node over the goal layer.
    let goal_layer = *window.last().unwrap() as usize;
    let w_rl = lat.params().w_rl;
    let mut best: Option<(f64, NodeId)> = None;
    for id in layer_order(goal_layer) {
        if blocked_nodes[id as usize] || !dist[id as usize].is_finite() {
            continue;
        }
        let total = dist[id as usize] + w_rl * math::abs(lat.node(id).d_lat);
        if best.map(|(b, _)| total < b).unwrap_or(true) {
            best = Some((total, id));
        }
    }
    let (total, goal) = best?;

    let mut rev = vec![goal];
    let mut cur = goal;
    while cur != start {
        let ei = parent[cur as usize].expect("path must trace back to the start");
        cur = lat.edge(ei).from;
        rev.push(cur);
    }
    rev.reverse();
    Some((rev, total))
}

/// Solve the curvature continuous chain for a searched node sequence:
/// waypoints are the ego position followed by the node positions, clamped to
/// the ego heading at the start and the goal-node heading at the end.
///
/// The chain matches parameter derivatives on uniform knots, so strongly
/// non-uniform waypoint spacing (dense curve layers meeting sparse straight
/// layers) would bend the solution; long intervals are subdivided with
/// track-following fill points to keep the knot spacing near uniform.
pub fn assemble_chain(
    lat: &Lattice,
    node_seq: &[NodeId],
    ego_pose: Pose,
) -> Result<Vec<spline::CubicSegment>, spline::SplineError> {
    let mut points = Vec::with_capacity(node_seq.len() + 1);
    points.push((ego_pose.x, ego_pose.y));
    for &id in node_seq {
        let p = lat.node(id).pose;
        points.push((p.x, p.y));
    }
    let points = subdivide_waypoints(lat.line(), &points);
    let theta_end = lat.node(*node_seq.last().unwrap()).pose.theta;
    spline::solve_c2_chain(&points, ego_pose.theta, theta_end)
}

/// [`assemble_chain`] sampled at a fixed arc step.
pub fn assemble_path(
    lat: &Lattice,
    node_seq: &[NodeId],
    ego_pose: Pose,
    step: f64,
) -> Result<SampledPath, spline::SplineError> {
    let segs = assemble_chain(lat, node_seq, ego_pose)?;
    spline::sample_chain(&segs, step)
}

/// Split intervals so their lengths stay close to the shortest one. Fill
/// points interpolate in the Frenét frame, so they follow the track through
/// curves instead of cutting the chord.
fn subdivide_waypoints(
    line: &crate::ref_line::ReferenceLine,
    points: &[(f64, f64)],
) -> Vec<(f64, f64)> {
    let mut min_len = f64::INFINITY;
    for w in points.windows(2) {
        min_len = min_len.min(math::hypot(w[1].0 - w[0].0, w[1].1 - w[0].1));
    }
    let target = min_len.max(2.0);
    let frenet: Vec<(f64, f64)> = points.iter().map(|p| line.to_frenet(p.0, p.1)).collect();
    let mut out = Vec::with_capacity(points.len() * 2);
    out.push(points[0]);
    for (w, f) in points.windows(2).zip(frenet.windows(2)) {
        let len = math::hypot(w[1].0 - w[0].0, w[1].1 - w[0].1);
        let k = (((len / target) + 0.5) as usize).max(1);
        let ds = line.forward_gap(f[0].0, f[1].0);
        for j in 1..k {
            let t = j as f64 / k as f64;
            out.push(line.to_cartesian(f[0].0 + ds * t, math::lerp(f[0].1, f[1].1, t)));
        }
        out.push(w[1]);
    }
    out
}

/// One full planning cycle: template, action overlays, searches, C2
/// assembly, velocity profiles, and a final per-candidate collision check.
/// An empty action set is a degraded result, not an error.
pub fn plan_cycle(
    lat: &Lattice,
    req: &PlanRequest,
    config: &PlannerConfig,
) -> Result<ActionSet, PlanError> {
    let template = make_node_template(lat, req, config)?;
    let overlays = make_action_templates(lat, &template, req, config);

    let line = lat.line();
    let ego_s = line.wrap_station(req.ego_s);
    let (ex, ey) = line.to_cartesian(ego_s, req.ego_l);
    let ego_theta = req.ego_theta.unwrap_or_else(|| line.sample(ego_s).theta);
    let ego_pose = Pose { x: ex, y: ey, theta: ego_theta };

    let mut set = ActionSet::default();
    for overlay in &overlays {
        let found = shortest_path(
            lat,
            &template.window,
            overlay.start_node,
            &overlay.blocked_nodes,
            &overlay.blocked_edges,
        );
        let (node_seq, path_cost) = match found {
            Some(f) => f,
            None => continue,
        };
        let path = match assemble_path(lat, &node_seq, ego_pose, config.resample_step) {
            Ok(p) => p,
            Err(_) => continue, // cusped chain: treat the primitive as infeasible
        };

        // Per-sample friction scale, mapped by station offset from the ego.
        let scale: Option<Vec<f64>> = config.scale.as_ref().map(|table| {
            path.s.iter().map(|&ds| table.at(line.wrap_station(ego_s + ds))).collect()
        });

        let goal_node = lat.node(*node_seq.last().unwrap());
        let v_goal = line.sample(goal_node.s).v_ref.min(config.friction.v_cap);
        let race =
            velocity::forward_backward_profile(&path, req.ego_v, v_goal, &config.friction, scale.as_deref());

        let profile = match (overlay.primitive, req.lead) {
            (Primitive::Straight, Some(lead)) => {
                let gap = line.forward_gap(ego_s, lead.s);
                // Follow only a lead that actually occupies this path; a
                // lead that pulled aside is no velocity constraint.
                let (lx, ly) = line.to_cartesian(lead.s, lead.l);
                let clearance = config.veh_radius + lat.params().veh_width / 2.0 + 0.5;
                let on_path = (0..path.len()).any(|k| {
                    math::hypot(path.x[k] - lx, path.y[k] - ly) < clearance
                });
                if on_path && gap <= req.horizon.max(lat.params().min_horizon) {
                    let gains = FollowGains {
                        kp: config.follow_kp,
                        kd: config.follow_kd,
                        d_safe: (config.d_safe_time * req.ego_v).max(config.d_safe_min),
                    };
                    velocity::follow_profile(
                        &path,
                        gap,
                        lead.v - req.ego_v,
                        lead.v,
                        &config.friction,
                        scale.as_deref(),
                        &gains,
                        &race,
                    )
                } else {
                    race
                }
            }
            _ => race,
        };

        // An overtake whose own curvature cannot be braked for from the
        // current speed is not a drivable maneuver; the straight primitive
        // keeps its best-effort braking profile instead.
        if profile.infeasible_entry && overlay.primitive != Primitive::Straight {
            continue;
        }

        // Post-hoc collision check of the assembled geometry. The straight
        // primitive is only answerable for static structures; overtake
        // candidates must also clear the dynamic objects they route around.
        let check_dynamic = overlay.primitive != Primitive::Straight;
        if trajectory_collides(&path, &req.obstacles, config.veh_radius, check_dynamic) {
            continue;
        }

        set.candidates.entry(overlay.primitive).or_default().push(Trajectory {
            s: path.s,
            x: path.x,
            y: path.y,
            psi: path.psi,
            kappa: path.kappa,
            v: profile.v,
            a: profile.a,
            path_cost,
            infeasible_entry: profile.infeasible_entry,
        });
    }
    Ok(set)
}

/// Sampled-point collision test of an assembled path against the snapshot.
fn trajectory_collides(
    path: &SampledPath,
    obs: &ObstacleSet,
    veh_radius: f64,
    include_dynamic: bool,
) -> bool {
    for g in &obs.groups {
        if g.kind.is_dynamic() && !include_dynamic {
            continue;
        }
        for c in &g.circles {
            let reach = c.radius + veh_radius;
            for k in 0..path.len() {
                let dx = path.x[k] - c.x;
                let dy = path.y[k] - c.y;
                if dx * dx + dy * dy < reach * reach {
                    return true;
                }
            }
        }
    }
    false
}
