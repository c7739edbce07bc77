//! Offline multilayer graph over one full lap.
//!
//! Layers are placed along the station with curve-dependent spacing, nodes
//! sample each layer laterally out to the track bounds (minus half the
//! vehicle width), edges connect nodes of consecutive layers with pose-to-
//! pose cubic segments, filtered by a lateral-displacement ratio and the
//! vehicle turn radius. Every surviving edge carries sampled geometry and a
//! precomputed cost; nodes that cannot lie on a full-lap path are pruned.
//! The finished graph is immutable and is what the online planner windows
//! each cycle.

use alloc::vec;
use alloc::vec::Vec;

use crate::codec;
use crate::math;
use crate::ref_line::ReferenceLine;
use crate::spline::{self, CubicSegment, Pose, SampledPath};

pub type NodeId = u32;
pub type EdgeId = u32;

/// Spacing of the sampled edge geometry used for collision tests (m).
pub const EDGE_SAMPLE_SPACING: f64 = 1.5;

/// Build parameters of the offline graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphParams {
    /// Lateral node separation (m).
    pub lat_sep: f64,
    /// Longitudinal layer separation on straights (m).
    pub long_sep_straight: f64,
    /// Longitudinal layer separation in curves (m).
    pub long_sep_curve: f64,
    /// |kappa| at or above which a section counts as a curve (1/m).
    pub kappa_curve_thresh: f64,
    /// Minimum planning horizon of the online planner (m).
    pub min_horizon: f64,
    /// Cost weight on plain length.
    pub w_len: f64,
    /// Cost weight on squared average |curvature|.
    pub w_kappa_avg: f64,
    /// Cost weight on squared curvature range.
    pub w_kappa_range: f64,
    /// Cost weight on the end-node offset to the race line.
    pub w_rl: f64,
    /// Max |lateral displacement| / layer gap per edge.
    pub lat_ratio_max: f64,
    /// Vehicle minimum turn radius (m).
    pub r_min: f64,
    /// Vehicle width (m).
    pub veh_width: f64,
}

impl Default for GraphParams {
    fn default() -> Self {
        GraphParams {
            lat_sep: 0.5,
            long_sep_straight: 30.0,
            long_sep_curve: 6.0,
            kappa_curve_thresh: 0.01,
            min_horizon: 200.0,
            w_len: 0.0,
            w_kappa_avg: 7500.0,
            w_kappa_range: 15000.0,
            w_rl: 5.0,
            lat_ratio_max: 0.3,
            r_min: 11.0,
            veh_width: 2.0,
        }
    }
}

impl GraphParams {
    pub fn validate(&self) -> Result<(), LatticeError> {
        if !(self.lat_sep > 0.0 && self.long_sep_straight > 0.0 && self.long_sep_curve > 0.0) {
            return Err(LatticeError::BadParams("separations must be positive"));
        }
        if self.long_sep_curve > self.long_sep_straight {
            return Err(LatticeError::BadParams("curve separation must not exceed straight separation"));
        }
        if self.w_len < 0.0 || self.w_kappa_avg < 0.0 || self.w_kappa_range < 0.0 || self.w_rl < 0.0 {
            return Err(LatticeError::BadParams("cost weights must be non-negative"));
        }
        if !(self.r_min > 0.0 && self.veh_width > 0.0 && self.lat_ratio_max > 0.0) {
            return Err(LatticeError::BadParams("vehicle parameters must be positive"));
        }
        Ok(())
    }
}

/// One graph vertex: a pose sampled at a fixed lateral offset of a layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeNode {
    pub layer_idx: u32,
    /// Signed lateral index; 0 on the race line, positive to the left.
    pub lateral_idx: i32,
    /// Layer station (m).
    pub s: f64,
    /// Lateral offset (m), left positive.
    pub l: f64,
    pub pose: Pose,
    /// Signed offset to the race line (equals `l`).
    pub d_lat: f64,
    pub on_raceline: bool,
}

/// One directed spline edge between nodes of consecutive layers.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub segment: CubicSegment,
    pub sampled: SampledPath,
    /// Refined arc length (m).
    pub s_len: f64,
    /// Mean |kappa| over the samples (1/m).
    pub kappa_avg: f64,
    /// max kappa - min kappa over the samples (1/m).
    pub kappa_range: f64,
    pub cost: f64,
}

/// The offline multilayer directed graph, cyclic over the lap.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    line: ReferenceLine,
    params: GraphParams,
    raceline_hash: u64,
    layer_stations: Vec<f64>,
    /// Node id range [start, end) per layer; layer order equals station order.
    layer_ranges: Vec<(u32, u32)>,
    nodes: Vec<LatticeNode>,
    edges: Vec<LatticeEdge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    BadParams(&'static str),
    LapTooShort,
    /// Track bounds minus half the vehicle width leave no room for a node.
    TrackTooNarrow { station: f64 },
    /// Pruning removed every node: no full-lap path exists.
    Untraversable,
    /// Structural violation when assembling from parts.
    Structure(&'static str),
}

impl core::fmt::Display for LatticeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LatticeError::BadParams(m) => write!(f, "bad graph parameters: {m}"),
            LatticeError::LapTooShort => write!(f, "lap shorter than one straight layer separation"),
            LatticeError::TrackTooNarrow { station } => {
                write!(f, "track narrower than the vehicle near s = {station:.1} m")
            }
            LatticeError::Untraversable => write!(f, "track untraversable with given params"),
            LatticeError::Structure(m) => write!(f, "invalid graph structure: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for LatticeError {}

/// Edge cost: all terms scale with the segment length so candidate chains of
/// different segmentation compare directly.
pub fn edge_cost(s_len: f64, kappa_avg: f64, kappa_range: f64, d_lat_end: f64, params: &GraphParams) -> f64 {
    s_len
        * (params.w_len
            + params.w_kappa_avg * kappa_avg * kappa_avg
            + params.w_kappa_range * kappa_range * kappa_range
            + params.w_rl * math::abs(d_lat_end))
}

/// Greedy layer placement along the lap: step `long_sep_curve` wherever the
/// upcoming window contains curvature at or above the threshold, otherwise
/// `long_sep_straight`; the lap closure is merged or split so every gap stays
/// within `[long_sep_curve, long_sep_straight]`.
pub fn place_layers(line: &ReferenceLine, params: &GraphParams) -> Result<Vec<f64>, LatticeError> {
    params.validate()?;
    let lap = line.lap_length();
    if lap <= params.long_sep_straight {
        return Err(LatticeError::LapTooShort);
    }
    let scan_step = (params.long_sep_curve / 4.0).clamp(0.25, 2.0);
    let window_has_curve = |s0: f64, window: f64| {
        let mut d = 0.0;
        while d <= window {
            if math::abs(line.sample(s0 + d).kappa) >= params.kappa_curve_thresh {
                return true;
            }
            d += scan_step;
        }
        false
    };

    let mut stations = vec![0.0];
    let mut s = 0.0;
    loop {
        // Looking one straight-gap ahead pulls dense layers in front of a
        // curve entry instead of starting them inside.
        let gap = if window_has_curve(s, params.long_sep_straight) {
            params.long_sep_curve
        } else {
            params.long_sep_straight
        };
        if s + gap + params.long_sep_curve > lap {
            break;
        }
        s += gap;
        stations.push(s);
    }

    // Closing gap: in [long_sep_curve, gap + long_sep_curve) by construction;
    // split evenly when it exceeds the straight separation.
    let closing = lap - s;
    if closing > params.long_sep_straight {
        let k = (closing / params.long_sep_straight) as usize + 1;
        let piece = closing / k as f64;
        for j in 1..k {
            stations.push(s + piece * j as f64);
        }
    }
    Ok(stations)
}

/// Sample one layer: nodes at `l = 0, +-lat_sep, ...` while the body (half
/// width) stays within the bounds. Headings interpolate from the race line
/// to the corresponding bound, parameterized so a node landing exactly on
/// the margin carries the bound heading.
pub fn sample_layer(
    line: &ReferenceLine,
    s_layer: f64,
    params: &GraphParams,
    bounds: &BoundHeadings,
) -> Result<Vec<LatticeNode>, LatticeError> {
    let r = line.sample(s_layer);
    let half = params.veh_width / 2.0;
    let margin_left = r.w_left - half;
    let margin_right = r.w_right - half;
    if margin_left < 0.0 || margin_right < 0.0 {
        return Err(LatticeError::TrackTooNarrow { station: s_layer });
    }
    let theta_left = bounds.left_at(line, s_layer);
    let theta_right = bounds.right_at(line, s_layer);

    let k_left = ((margin_left + 1e-9) / params.lat_sep) as i32;
    let k_right = ((margin_right + 1e-9) / params.lat_sep) as i32;
    let mut nodes = Vec::with_capacity((k_left + k_right + 1) as usize);
    for k in -k_right..=k_left {
        let l = k as f64 * params.lat_sep;
        let theta = if k == 0 {
            r.theta
        } else if k > 0 {
            math::angle_lerp(r.theta, theta_left, l / margin_left)
        } else {
            math::angle_lerp(r.theta, theta_right, -l / margin_right)
        };
        let (x, y) = line.to_cartesian(s_layer, l);
        nodes.push(LatticeNode {
            layer_idx: 0, // assigned by the builder
            lateral_idx: k,
            s: s_layer,
            l,
            pose: Pose { x, y, theta },
            d_lat: l,
            on_raceline: k == 0,
        });
    }
    Ok(nodes)
}

/// Headings of the two bound polylines implied by the width columns,
/// computed once per reference point by central differences.
#[derive(Debug, Clone)]
pub struct BoundHeadings {
    left: Vec<f64>,
    right: Vec<f64>,
}

impl BoundHeadings {
    pub fn new(line: &ReferenceLine) -> Self {
        let pts = line.points();
        let n = pts.len();
        let bound = |i: usize, left: bool| {
            let p = &pts[i];
            let w = if left { p.w_left } else { -p.w_right };
            (p.x - math::sin(p.theta) * w, p.y + math::cos(p.theta) * w)
        };
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let (lp, ln) = (bound(prev, true), bound(next, true));
            left.push(math::atan2(ln.1 - lp.1, ln.0 - lp.0));
            let (rp, rn) = (bound(prev, false), bound(next, false));
            right.push(math::atan2(rn.1 - rp.1, rn.0 - rp.0));
        }
        BoundHeadings { left, right }
    }

    fn left_at(&self, line: &ReferenceLine, s: f64) -> f64 {
        let (i, t) = line.locate(s);
        math::angle_lerp(self.left[i], self.left[(i + 1) % self.left.len()], t)
    }

    fn right_at(&self, line: &ReferenceLine, s: f64) -> f64 {
        let (i, t) = line.locate(s);
        math::angle_lerp(self.right[i], self.right[(i + 1) % self.right.len()], t)
    }
}

/// Fit, filter and annotate one candidate edge. `None` when the candidate is
/// inadmissible (lateral ratio, turn radius, or a degenerate fit).
fn make_edge(
    from: NodeId,
    to: NodeId,
    from_node: &LatticeNode,
    to_node: &LatticeNode,
    gap_s: f64,
    params: &GraphParams,
) -> Option<LatticeEdge> {
    if math::abs(to_node.l - from_node.l) / gap_s > params.lat_ratio_max + 1e-12 {
        return None;
    }
    let segment = spline::fit_c1_segment(from_node.pose, to_node.pose).ok()?;
    let n_samples = ((segment.s_len / EDGE_SAMPLE_SPACING) as usize).max(1) + 1;
    let sampled = spline::sample_segment(&segment, n_samples).ok()?;

    let mut kappa_abs_sum = 0.0;
    let mut kappa_min = f64::INFINITY;
    let mut kappa_max = f64::NEG_INFINITY;
    for &k in &sampled.kappa {
        kappa_abs_sum += math::abs(k);
        kappa_min = kappa_min.min(k);
        kappa_max = kappa_max.max(k);
    }
    if kappa_max.max(-kappa_min) > 1.0 / params.r_min {
        return None;
    }
    let kappa_avg = kappa_abs_sum / sampled.len() as f64;
    let kappa_range = kappa_max - kappa_min;
    let cost = edge_cost(segment.s_len, kappa_avg, kappa_range, to_node.d_lat, params);
    Some(LatticeEdge {
        from,
        to,
        s_len: segment.s_len,
        segment,
        sampled,
        kappa_avg,
        kappa_range,
        cost,
    })
}

impl Lattice {
    /// Build the full offline graph: place layers, sample nodes, generate
    /// admissible edges, prune to the cyclic fixpoint.
    pub fn build(
        line: ReferenceLine,
        params: GraphParams,
        raceline_hash: u64,
    ) -> Result<Self, LatticeError> {
        let stations = place_layers(&line, &params)?;
        let bounds = BoundHeadings::new(&line);

        let mut layers: Vec<Vec<LatticeNode>> = Vec::with_capacity(stations.len());
        for (li, &s) in stations.iter().enumerate() {
            let mut nodes = sample_layer(&line, s, &params, &bounds)?;
            for n in nodes.iter_mut() {
                n.layer_idx = li as u32;
            }
            layers.push(nodes);
        }

        // Flatten with contiguous ids per layer.
        let mut layer_ranges = Vec::with_capacity(layers.len());
        let mut nodes = Vec::new();
        for layer in &layers {
            let start = nodes.len() as u32;
            nodes.extend_from_slice(layer);
            layer_ranges.push((start, nodes.len() as u32));
        }

        let n_layers = layers.len();
        let mut edges = Vec::new();
        for li in 0..n_layers {
            let lj = (li + 1) % n_layers;
            let gap = line.forward_gap(stations[li], stations[lj]);
            let (a0, a1) = layer_ranges[li];
            let (b0, b1) = layer_ranges[lj];
            for a in a0..a1 {
                for b in b0..b1 {
                    if let Some(e) =
                        make_edge(a, b, &nodes[a as usize], &nodes[b as usize], gap, &params)
                    {
                        edges.push(e);
                    }
                }
            }
        }

        let raw = Self::assemble(line, params, raceline_hash, stations, layer_ranges, nodes, edges)?;
        raw.pruned()
    }

    /// Assemble a lattice from explicit layers of nodes and edges (ids refer
    /// to the flattened layer order). Used for synthetic graphs in tests and
    /// tools; `build` is the normal path.
    pub fn from_parts(
        line: ReferenceLine,
        params: GraphParams,
        raceline_hash: u64,
        layer_stations: Vec<f64>,
        layers: Vec<Vec<LatticeNode>>,
        edges: Vec<LatticeEdge>,
    ) -> Result<Self, LatticeError> {
        let mut layer_ranges = Vec::with_capacity(layers.len());
        let mut nodes = Vec::new();
        for layer in layers {
            let start = nodes.len() as u32;
            nodes.extend(layer);
            layer_ranges.push((start, nodes.len() as u32));
        }
        Self::assemble(line, params, raceline_hash, layer_stations, layer_ranges, nodes, edges)
    }

    pub(crate) fn assemble(
        line: ReferenceLine,
        params: GraphParams,
        raceline_hash: u64,
        layer_stations: Vec<f64>,
        layer_ranges: Vec<(u32, u32)>,
        nodes: Vec<LatticeNode>,
        edges: Vec<LatticeEdge>,
    ) -> Result<Self, LatticeError> {
        let n_layers = layer_stations.len();
        if n_layers < 2 {
            return Err(LatticeError::Structure("need at least 2 layers"));
        }
        if layer_ranges.len() != n_layers {
            return Err(LatticeError::Structure("layer ranges do not match stations"));
        }
        let mut expect = 0u32;
        for &(a, b) in &layer_ranges {
            if a != expect || b < a {
                return Err(LatticeError::Structure("layer ranges must tile the node array"));
            }
            expect = b;
        }
        if expect as usize != nodes.len() {
            return Err(LatticeError::Structure("layer ranges must cover all nodes"));
        }
        let layer_of = |id: NodeId| nodes[id as usize].layer_idx as usize;
        for (i, &(a, b)) in layer_ranges.iter().enumerate() {
            for id in a..b {
                if nodes[id as usize].layer_idx as usize != i {
                    return Err(LatticeError::Structure("node layer_idx mismatch"));
                }
            }
        }
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut in_edges = vec![Vec::new(); nodes.len()];
        for (ei, e) in edges.iter().enumerate() {
            if e.from as usize >= nodes.len() || e.to as usize >= nodes.len() {
                return Err(LatticeError::Structure("edge endpoint out of range"));
            }
            if (layer_of(e.from) + 1) % n_layers != layer_of(e.to) {
                return Err(LatticeError::Structure("edges must connect consecutive layers"));
            }
            if !(e.cost >= 0.0) {
                return Err(LatticeError::Structure("edge cost must be non-negative"));
            }
            out_edges[e.from as usize].push(ei as EdgeId);
            in_edges[e.to as usize].push(ei as EdgeId);
        }
        Ok(Lattice {
            line,
            params,
            raceline_hash,
            layer_stations,
            layer_ranges,
            nodes,
            edges,
            out_edges,
            in_edges,
        })
    }

    /// Iteratively remove nodes without parents or without children (and
    /// their edges) until a fixpoint. With the cyclic lap closure the result
    /// has every node on at least one full-lap path.
    pub fn pruned(&self) -> Result<Self, LatticeError> {
        let n = self.nodes.len();
        let mut alive_node = vec![true; n];
        let mut alive_edge = vec![true; self.edges.len()];
        let mut out_deg: Vec<usize> = self.out_edges.iter().map(Vec::len).collect();
        let mut in_deg: Vec<usize> = self.in_edges.iter().map(Vec::len).collect();

        let mut queue: Vec<usize> = (0..n).filter(|&i| out_deg[i] == 0 || in_deg[i] == 0).collect();
        while let Some(i) = queue.pop() {
            if !alive_node[i] {
                continue;
            }
            alive_node[i] = false;
            for &ei in self.out_edges[i].iter().chain(&self.in_edges[i]) {
                let ei = ei as usize;
                if !alive_edge[ei] {
                    continue;
                }
                alive_edge[ei] = false;
                let e = &self.edges[ei];
                let (f, t) = (e.from as usize, e.to as usize);
                out_deg[f] -= 1;
                if out_deg[f] == 0 && alive_node[f] {
                    queue.push(f);
                }
                in_deg[t] -= 1;
                if in_deg[t] == 0 && alive_node[t] {
                    queue.push(t);
                }
            }
        }

        // Compact ids, preserving order.
        let mut remap = vec![u32::MAX; n];
        let mut nodes = Vec::new();
        let mut layer_ranges = Vec::with_capacity(self.layer_ranges.len());
        for &(a, b) in &self.layer_ranges {
            let start = nodes.len() as u32;
            for id in a..b {
                if alive_node[id as usize] {
                    remap[id as usize] = nodes.len() as u32;
                    nodes.push(self.nodes[id as usize]);
                }
            }
            let end = nodes.len() as u32;
            if start == end {
                return Err(LatticeError::Untraversable);
            }
            layer_ranges.push((start, end));
        }
        if nodes.is_empty() {
            return Err(LatticeError::Untraversable);
        }
        let mut edges = Vec::with_capacity(alive_edge.iter().filter(|&&a| a).count());
        for (ei, e) in self.edges.iter().enumerate() {
            if alive_edge[ei] {
                let mut e = e.clone();
                e.from = remap[e.from as usize];
                e.to = remap[e.to as usize];
                edges.push(e);
            }
        }
        Self::assemble(
            self.line.clone(),
            self.params,
            self.raceline_hash,
            self.layer_stations.clone(),
            layer_ranges,
            nodes,
            edges,
        )
    }

    pub fn line(&self) -> &ReferenceLine {
        &self.line
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn raceline_hash(&self) -> u64 {
        self.raceline_hash
    }

    pub fn layer_count(&self) -> usize {
        self.layer_stations.len()
    }

    pub fn layer_stations(&self) -> &[f64] {
        &self.layer_stations
    }

    /// Node ids of one layer.
    pub fn layer_nodes(&self, layer: usize) -> impl Iterator<Item = NodeId> + '_ {
        let (a, b) = self.layer_ranges[layer];
        a..b
    }

    pub fn layer_ranges(&self) -> &[(u32, u32)] {
        &self.layer_ranges
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[LatticeEdge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &LatticeNode {
        &self.nodes[id as usize]
    }

    pub fn edge(&self, id: EdgeId) -> &LatticeEdge {
        &self.edges[id as usize]
    }

    pub fn out_edges(&self, id: NodeId) -> &[EdgeId] {
        &self.out_edges[id as usize]
    }

    pub fn in_edges(&self, id: NodeId) -> &[EdgeId] {
        &self.in_edges[id as usize]
    }

    /// Serialize into the binary graph container.
    pub fn to_bytes(&self) -> Vec<u8> {
        codec::encode(self)
    }

    /// Deserialize a graph container produced by [`Self::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, codec::CodecError> {
        codec::decode(bytes)
    }

    /// Check the stored race-line fingerprint against the CSV bytes the
    /// graph claims to have been built from.
    pub fn verify_raceline(&self, csv_bytes: &[u8]) -> Result<(), codec::CodecError> {
        let found = crate::fnv1a64(csv_bytes);
        if found != self.raceline_hash {
            return Err(codec::CodecError::HashMismatch { expected: self.raceline_hash, found });
        }
        Ok(())
    }
}
