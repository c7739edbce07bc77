//! Closed reference (race) line: CSV grammar, Frenét frame mapping and
//! modular station arithmetic.
//!
//! The line is a discrete function `[x(s), y(s), theta(s), kappa(s), v(s)]`
//! over the station `s` together with the distance to the left/right track
//! bound at each point. Lateral offsets are measured left-positive: the
//! normal is the tangent rotated by +90 degrees.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// One discrete sample of the reference line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefLinePoint {
    /// Station along the line (m), strictly increasing, first point at 0.
    pub s: f64,
    pub x: f64,
    pub y: f64,
    /// Heading (rad), normalized to (-pi, pi].
    pub theta: f64,
    /// Curvature (1/m).
    pub kappa: f64,
    /// Race-line velocity (m/s).
    pub v_ref: f64,
    /// Distance from the line to the left track bound (m), > 0.
    pub w_left: f64,
    /// Distance from the line to the right track bound (m), > 0.
    pub w_right: f64,
}

/// Interpolated reference-line state at an arbitrary station.
#[derive(Debug, Clone, Copy)]
pub struct RefSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub kappa: f64,
    pub v_ref: f64,
    pub w_left: f64,
    pub w_right: f64,
}

/// Closed reference line over one lap.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLine {
    points: Vec<RefLinePoint>,
    lap_length: f64,
    closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefLineError {
    /// Malformed CSV content; `line` is 1-based.
    Parse { line: usize, msg: String },
    MissingColumn(&'static str),
    TooFewPoints { found: usize },
    /// Start/end gap of the polyline exceeds the closure tolerance (1 m).
    NotClosed { gap: f64 },
    InvalidPoint { index: usize, msg: &'static str },
}

impl core::fmt::Display for RefLineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RefLineError::Parse { line, msg } => write!(f, "line {line}: {msg}"),
            RefLineError::MissingColumn(c) => write!(f, "missing required column `{c}`"),
            RefLineError::TooFewPoints { found } => {
                write!(f, "need at least 4 reference points, found {found}")
            }
            RefLineError::NotClosed { gap } => {
                write!(f, "polyline is not closed: start/end gap {gap:.3} m exceeds 1 m")
            }
            RefLineError::InvalidPoint { index, msg } => write!(f, "point {index}: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for RefLineError {}

/// Polyline gap above which the input is rejected as non-closed.
const CLOSURE_TOL: f64 = 1.0;
/// Start/end points closer than this are treated as a duplicated closure row.
const DUPLICATE_TOL: f64 = 1e-6;

const REQUIRED_COLS: [&str; 5] = ["x_m", "y_m", "vx_mps", "w_left_m", "w_right_m"];
const OPTIONAL_COLS: [&str; 3] = ["s_m", "psi_rad", "kappa_radpm"];

impl ReferenceLine {
    /// Build a reference line from fully populated points.
    ///
    /// Stations are shifted so the first point sits at s = 0; headings are
    /// normalized into (-pi, pi].
    pub fn new(points: Vec<RefLinePoint>) -> Result<Self, RefLineError> {
        Self::assemble(points, false, false, false)
    }

    /// Parse the reference-line CSV grammar.
    ///
    /// Header row is required: `s_m,x_m,y_m,psi_rad,kappa_radpm,vx_mps,
    /// w_left_m,w_right_m` with `s_m`, `psi_rad` and `kappa_radpm` optional
    /// (recomputed when absent). `#` starts a comment line.
    pub fn parse_csv(text: &str) -> Result<Self, RefLineError> {
        let mut header: Option<Vec<&str>> = None;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match &header {
                None => {
                    for name in &fields {
                        if !REQUIRED_COLS.contains(name) && !OPTIONAL_COLS.contains(name) {
                            return Err(RefLineError::Parse {
                                line: line_no,
                                msg: format!("unknown column `{name}`"),
                            });
                        }
                    }
                    for req in REQUIRED_COLS {
                        if !fields.contains(&req) {
                            return Err(RefLineError::MissingColumn(req));
                        }
                    }
                    header = Some(fields);
                }
                Some(cols) => {
                    if fields.len() != cols.len() {
                        return Err(RefLineError::Parse {
                            line: line_no,
                            msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
                        });
                    }
                    let mut vals = Vec::with_capacity(fields.len());
                    for (col, field) in cols.iter().zip(&fields) {
                        let v: f64 = field.parse().map_err(|_| RefLineError::Parse {
                            line: line_no,
                            msg: format!("column `{col}`: cannot parse `{field}` as a number"),
                        })?;
                        if !v.is_finite() {
                            return Err(RefLineError::Parse {
                                line: line_no,
                                msg: format!("column `{col}`: non-finite value"),
                            });
                        }
                        vals.push(v);
                    }
                    rows.push((line_no, vals));
                }
            }
        }

        let cols = header.ok_or(RefLineError::MissingColumn("x_m"))?;
        let col = |name: &str| cols.iter().position(|c| *c == name);
        let ix = col("x_m").unwrap();
        let iy = col("y_m").unwrap();
        let iv = col("vx_mps").unwrap();
        let iwl = col("w_left_m").unwrap();
        let iwr = col("w_right_m").unwrap();
        let is = col("s_m");
        let ipsi = col("psi_rad");
        let ikap = col("kappa_radpm");

        let mut points = Vec::with_capacity(rows.len());
        let mut prev_s = f64::NEG_INFINITY;
        for (line_no, vals) in &rows {
            let p = RefLinePoint {
                s: is.map(|i| vals[i]).unwrap_or(0.0),
                x: vals[ix],
                y: vals[iy],
                theta: ipsi.map(|i| vals[i]).unwrap_or(0.0),
                kappa: ikap.map(|i| vals[i]).unwrap_or(0.0),
                v_ref: vals[iv],
                w_left: vals[iwl],
                w_right: vals[iwr],
            };
            if p.w_left <= 0.0 || p.w_right <= 0.0 {
                return Err(RefLineError::Parse {
                    line: *line_no,
                    msg: format!("track widths must be positive (w_left={}, w_right={})", p.w_left, p.w_right),
                });
            }
            if p.v_ref < 0.0 {
                return Err(RefLineError::Parse {
                    line: *line_no,
                    msg: String::from("vx_mps must be non-negative"),
                });
            }
            if let Some(i) = is {
                let s = vals[i];
                if s <= prev_s {
                    return Err(RefLineError::Parse {
                        line: *line_no,
                        msg: String::from("s_m must be strictly increasing"),
                    });
                }
                prev_s = s;
            }
            points.push(p);
        }

        Self::assemble(points, is.is_none(), ipsi.is_none(), ikap.is_none())
    }

    fn assemble(
        mut points: Vec<RefLinePoint>,
        recompute_s: bool,
        recompute_theta: bool,
        recompute_kappa: bool,
    ) -> Result<Self, RefLineError> {
        // A duplicated closure row (last == first) is dropped.
        if points.len() >= 2 {
            let first = points[0];
            let last = points[points.len() - 1];
            if math::hypot(last.x - first.x, last.y - first.y) < DUPLICATE_TOL {
                points.pop();
            }
        }
        if points.len() < 4 {
            return Err(RefLineError::TooFewPoints { found: points.len() });
        }
        let n = points.len();

        let gap = {
            let first = points[0];
            let last = points[n - 1];
            math::hypot(last.x - first.x, last.y - first.y)
        };
        if gap > CLOSURE_TOL {
            return Err(RefLineError::NotClosed { gap });
        }

        if recompute_s {
            let mut s = 0.0;
            points[0].s = 0.0;
            for i in 1..n {
                let ds = math::hypot(points[i].x - points[i - 1].x, points[i].y - points[i - 1].y);
                s += ds;
                points[i].s = s;
            }
        } else {
            // Shift so the first station is 0.
            let s0 = points[0].s;
            if s0 != 0.0 {
                for p in points.iter_mut() {
                    p.s -= s0;
                }
            }
        }

        for i in 1..n {
            if points[i].s <= points[i - 1].s {
                return Err(RefLineError::InvalidPoint {
                    index: i,
                    msg: "stations must be strictly increasing",
                });
            }
        }

        let lap_length = points[n - 1].s + gap.max(DUPLICATE_TOL);

        if recompute_theta {
            let mut thetas = Vec::with_capacity(n);
            for i in 0..n {
                let prev = points[(i + n - 1) % n];
                let next = points[(i + 1) % n];
                thetas.push(math::atan2(next.y - prev.y, next.x - prev.x));
            }
            for (p, th) in points.iter_mut().zip(thetas) {
                p.theta = th;
            }
        } else {
            for p in points.iter_mut() {
                p.theta = wrap_identity(p.theta);
            }
        }

        if recompute_kappa {
            let mut kappas = Vec::with_capacity(n);
            for i in 0..n {
                let prev = points[(i + n - 1) % n];
                let next = points[(i + 1) % n];
                let mut ds = next.s - prev.s;
                if ds <= 0.0 {
                    ds += lap_length;
                }
                kappas.push(math::angle_diff(next.theta, prev.theta) / ds);
            }
            for (p, k) in points.iter_mut().zip(kappas) {
                p.kappa = k;
            }
        }

        for (i, p) in points.iter().enumerate() {
            if p.w_left <= 0.0 || p.w_right <= 0.0 {
                return Err(RefLineError::InvalidPoint { index: i, msg: "track widths must be positive" });
            }
        }

        Ok(ReferenceLine { points, lap_length, closed: true })
    }

    /// Reconstruct from validated parts (deserialization path; no renormalization).
    pub(crate) fn from_raw(points: Vec<RefLinePoint>, lap_length: f64, closed: bool) -> Self {
        ReferenceLine { points, lap_length, closed }
    }

    pub fn points(&self) -> &[RefLinePoint] {
        &self.points
    }

    pub fn lap_length(&self) -> f64 {
        self.lap_length
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Wrap a station into [0, lap_length).
    pub fn wrap_station(&self, s: f64) -> f64 {
        let lap = self.lap_length;
        let mut r = s - lap * math::floor(s / lap);
        // Guard against r == lap from rounding.
        if r >= lap {
            r -= lap;
        }
        if r < 0.0 {
            r = 0.0;
        }
        r
    }

    /// Forward arc distance from `from` to `to` along the lap, in [0, lap).
    pub fn forward_gap(&self, from: f64, to: f64) -> f64 {
        self.wrap_station(to - from)
    }

    /// Segment index and interpolation fraction for a wrapped station.
    pub(crate) fn locate(&self, s: f64) -> (usize, f64) {
        let s = self.wrap_station(s);
        let n = self.points.len();
        // Last i with points[i].s <= s.
        let i = match self.points.partition_point(|p| p.s <= s) {
            0 => 0,
            k => k - 1,
        };
        let seg_len = if i + 1 < n {
            self.points[i + 1].s - self.points[i].s
        } else {
            self.lap_length - self.points[i].s
        };
        let t = ((s - self.points[i].s) / seg_len).clamp(0.0, 1.0);
        (i, t)
    }

    /// Interpolated line state at station `s` (any real, wrapped).
    ///
    /// Position, curvature, velocity and widths interpolate linearly; the
    /// heading interpolates along the shortest angular difference.
    pub fn sample(&self, s: f64) -> RefSample {
        let (i, t) = self.locate(s);
        let a = &self.points[i];
        let b = &self.points[(i + 1) % self.points.len()];
        RefSample {
            x: math::lerp(a.x, b.x, t),
            y: math::lerp(a.y, b.y, t),
            theta: math::angle_lerp(a.theta, b.theta, t),
            kappa: math::lerp(a.kappa, b.kappa, t),
            v_ref: math::lerp(a.v_ref, b.v_ref, t),
            w_left: math::lerp(a.w_left, b.w_left, t),
            w_right: math::lerp(a.w_right, b.w_right, t),
        }
    }

    /// Frenét -> Cartesian: `p(s, l) = r(s) + n(s) * l` with the left-positive
    /// normal `n = (-sin theta, cos theta)`.
    pub fn to_cartesian(&self, s: f64, l: f64) -> (f64, f64) {
        let r = self.sample(s);
        (r.x - math::sin(r.theta) * l, r.y + math::cos(r.theta) * l)
    }

    /// Cartesian -> Frenét by nearest projection; ties resolved toward the
    /// smaller station. Inverse of [`Self::to_cartesian`] to < 1 cm for
    /// points within the track bounds.
    pub fn to_frenet(&self, x: f64, y: f64) -> (f64, f64) {
        let n = self.points.len();
        // Coarse warm start over a strided subset of the points.
        let stride = (n / 256).max(1);
        let mut best_i = 0;
        let mut best_d2 = f64::INFINITY;
        let mut i = 0;
        while i < n {
            let p = &self.points[i];
            let d2 = sq(p.x - x) + sq(p.y - y);
            if d2 < best_d2 {
                best_d2 = d2;
                best_i = i;
            }
            i += stride;
        }
        // Exhaustive chord projection around the warm start.
        let lo = best_i as isize - stride as isize - 1;
        let hi = best_i as isize + stride as isize + 1;
        let mut best_s = 0.0;
        let mut best_dist2 = f64::INFINITY;
        for j in lo..=hi {
            let j = j.rem_euclid(n as isize) as usize;
            let (s_cand, d2) = self.project_on_segment(j, x, y);
            if d2 < best_dist2 - 1e-12 || (d2 < best_dist2 + 1e-12 && s_cand < best_s) {
                best_dist2 = d2;
                best_s = s_cand;
            }
        }
        self.refine_projection(best_s, x, y)
    }

    /// Chord projection of (x, y) onto segment `i`; returns (station, dist^2).
    fn project_on_segment(&self, i: usize, x: f64, y: f64) -> (f64, f64) {
        let n = self.points.len();
        let a = &self.points[i];
        let b = &self.points[(i + 1) % n];
        let seg_len = if i + 1 < n { b.s - a.s } else { self.lap_length - a.s };
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = sq(dx) + sq(dy);
        let t = if len2 > 0.0 {
            (((x - a.x) * dx + (y - a.y) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (px, py) = (a.x + dx * t, a.y + dy * t);
        let s = self.wrap_station(a.s + seg_len * t);
        (s, sq(x - px) + sq(y - py))
    }

    /// Iterate the tangency condition (q - r(s)) . t(s) = 0 from a chord-level
    /// warm start so that the returned (s, l) inverts `to_cartesian` with the
    /// heading-interpolated normal.
    fn refine_projection(&self, mut s: f64, x: f64, y: f64) -> (f64, f64) {
        for _ in 0..30 {
            let r = self.sample(s);
            let (tx, ty) = (math::cos(r.theta), math::sin(r.theta));
            let g = (x - r.x) * tx + (y - r.y) * ty;
            s = self.wrap_station(s + g);
            if math::abs(g) < 1e-10 {
                break;
            }
        }
        let r = self.sample(s);
        let l = -(x - r.x) * math::sin(r.theta) + (y - r.y) * math::cos(r.theta);
        (s, l)
    }
}

/// `wrap_angle` with a bit-exact fast path for already normalized input.
fn wrap_identity(a: f64) -> f64 {
    if a > -core::f64::consts::PI && a <= core::f64::consts::PI {
        a
    } else {
        math::wrap_angle(a)
    }
}

#[inline]
fn sq(v: f64) -> f64 {
    v * v
}
