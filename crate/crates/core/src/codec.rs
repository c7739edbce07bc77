//! Binary graph container: little-endian, magic `LATG`, versioned, counted
//! arrays. Encoding is a pure function of the lattice contents, so identical
//! graphs serialize to identical bytes.

use alloc::vec::Vec;

use crate::lattice::{GraphParams, Lattice, LatticeEdge, LatticeNode};
use crate::ref_line::{RefLinePoint, ReferenceLine};
use crate::spline::{CubicSegment, Pose, SampledPath};

pub const MAGIC: [u8; 4] = *b"LATG";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum CodecError {
    BadMagic,
    Version { found: u32, expected: u32 },
    /// Input ended before the structure was complete.
    Truncated,
    /// Bytes left over after a complete structure.
    TrailingBytes,
    HashMismatch { expected: u64, found: u64 },
    Invalid(&'static str),
}

impl core::fmt::Display for CodecError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CodecError::BadMagic => write!(f, "not a graph file (bad magic)"),
            CodecError::Version { found, expected } => {
                write!(f, "graph format version {found}, expected {expected}")
            }
            CodecError::Truncated => write!(f, "graph file truncated"),
            CodecError::TrailingBytes => write!(f, "trailing bytes after graph data"),
            CodecError::HashMismatch { expected, found } => write!(
                f,
                "race line fingerprint mismatch: graph {expected:016x}, file {found:016x}"
            ),
            CodecError::Invalid(m) => write!(f, "invalid graph data: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CodecError {}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.pos + n > self.bytes.len() {
            return Err(CodecError::Truncated);
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32, CodecError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CodecError> {
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    /// Length prefix that must be representable in the remaining input.
    fn count(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()? as usize;
        if n > self.bytes.len() {
            return Err(CodecError::Truncated);
        }
        Ok(n)
    }
}

pub(crate) fn encode(lat: &Lattice) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(&MAGIC);
    w.u32(VERSION);

    let p = lat.params();
    w.f64s(&[
        p.lat_sep,
        p.long_sep_straight,
        p.long_sep_curve,
        p.kappa_curve_thresh,
        p.min_horizon,
        p.w_len,
        p.w_kappa_avg,
        p.w_kappa_range,
        p.w_rl,
        p.lat_ratio_max,
        p.r_min,
        p.veh_width,
    ]);
    w.u64(lat.raceline_hash());

    let line = lat.line();
    w.u8(line.is_closed() as u8);
    w.f64(line.lap_length());
    w.u32(line.points().len() as u32);
    for pt in line.points() {
        w.f64s(&[pt.s, pt.x, pt.y, pt.theta, pt.kappa, pt.v_ref, pt.w_left, pt.w_right]);
    }

    w.u32(lat.layer_count() as u32);
    w.f64s(lat.layer_stations());
    for &(a, b) in lat.layer_ranges() {
        w.u32(a);
        w.u32(b);
    }

    w.u32(lat.nodes().len() as u32);
    for n in lat.nodes() {
        w.u32(n.layer_idx);
        w.i32(n.lateral_idx);
        w.f64s(&[n.s, n.l, n.pose.x, n.pose.y, n.pose.theta, n.d_lat]);
        w.u8(n.on_raceline as u8);
    }

    w.u32(lat.edges().len() as u32);
    for e in lat.edges() {
        w.u32(e.from);
        w.u32(e.to);
        w.f64s(&e.segment.ax);
        w.f64s(&e.segment.ay);
        w.f64s(&[e.segment.s_len, e.s_len, e.kappa_avg, e.kappa_range, e.cost]);
        w.u32(e.sampled.len() as u32);
        w.f64s(&e.sampled.s);
        w.f64s(&e.sampled.x);
        w.f64s(&e.sampled.y);
        w.f64s(&e.sampled.psi);
        w.f64s(&e.sampled.kappa);
    }
    w.buf
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Lattice, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(CodecError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CodecError::Version { found: version, expected: VERSION });
    }

    let params = GraphParams {
        lat_sep: r.f64()?,
        long_sep_straight: r.f64()?,
        long_sep_curve: r.f64()?,
        kappa_curve_thresh: r.f64()?,
        min_horizon: r.f64()?,
        w_len: r.f64()?,
        w_kappa_avg: r.f64()?,
        w_kappa_range: r.f64()?,
        w_rl: r.f64()?,
        lat_ratio_max: r.f64()?,
        r_min: r.f64()?,
        veh_width: r.f64()?,
    };
    let raceline_hash = r.u64()?;

    let closed = r.u8()? != 0;
    let lap_length = r.f64()?;
    let n_points = r.count()?;
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        points.push(RefLinePoint {
            s: r.f64()?,
            x: r.f64()?,
            y: r.f64()?,
            theta: r.f64()?,
            kappa: r.f64()?,
            v_ref: r.f64()?,
            w_left: r.f64()?,
            w_right: r.f64()?,
        });
    }
    if points.len() < 4 {
        return Err(CodecError::Invalid("reference line too short"));
    }
    let line = ReferenceLine::from_raw(points, lap_length, closed);

    let n_layers = r.count()?;
    let layer_stations = r.f64s(n_layers)?;
    let mut layer_ranges = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let a = r.u32()?;
        let b = r.u32()?;
        layer_ranges.push((a, b));
    }

    let n_nodes = r.count()?;
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let layer_idx = r.u32()?;
        let lateral_idx = r.i32()?;
        let s = r.f64()?;
        let l = r.f64()?;
        let x = r.f64()?;
        let y = r.f64()?;
        let theta = r.f64()?;
        let d_lat = r.f64()?;
        let on_raceline = r.u8()? != 0;
        nodes.push(LatticeNode {
            layer_idx,
            lateral_idx,
            s,
            l,
            pose: Pose { x, y, theta },
            d_lat,
            on_raceline,
        });
    }

    let n_edges = r.count()?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let from = r.u32()?;
        let to = r.u32()?;
        let ax: [f64; 4] = r.f64s(4)?.try_into().unwrap();
        let ay: [f64; 4] = r.f64s(4)?.try_into().unwrap();
        let seg_len = r.f64()?;
        let s_len = r.f64()?;
        let kappa_avg = r.f64()?;
        let kappa_range = r.f64()?;
        let cost = r.f64()?;
        let n_samples = r.count()?;
        let sampled = SampledPath {
            s: r.f64s(n_samples)?,
            x: r.f64s(n_samples)?,
            y: r.f64s(n_samples)?,
            psi: r.f64s(n_samples)?,
            kappa: r.f64s(n_samples)?,
        };
        edges.push(LatticeEdge {
            from,
            to,
            segment: CubicSegment { ax, ay, s_len: seg_len },
            sampled,
            s_len,
            kappa_avg,
            kappa_range,
            cost,
        });
    }

    if r.pos != bytes.len() {
        return Err(CodecError::TrailingBytes);
    }

    Lattice::assemble(line, params, raceline_hash, layer_stations, layer_ranges, nodes, edges)
        .map_err(|_| CodecError::Invalid("inconsistent graph structure"))
}
