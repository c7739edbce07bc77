//! Cubic-polynomial path segments.
//!
//! Two solvers share the same segment representation:
//!
//! * [`fit_c1_segment`] connects two poses with one cubic per coordinate,
//!   matching position and scaled heading at both ends. The heading
//!   constraint is scaled by the segment length, which is unknown up front
//!   and therefore refined iteratively (offline edge generation).
//! * [`solve_c2_chain`] threads one cubic per waypoint interval through a
//!   whole node sequence, matching first and second parameter derivatives at
//!   every interior junction and clamping the boundary headings (online
//!   post-processing of a search result).
//!
//! Both produce segments parameterized by `mu` in [0, 1].

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Planar pose; heading normalized to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose { x, y, theta: math::wrap_angle(theta) }
    }
}

/// One cubic segment: coefficients stored highest power first, so
/// `x(mu) = ax[0] mu^3 + ax[1] mu^2 + ax[2] mu + ax[3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicSegment {
    pub ax: [f64; 4],
    pub ay: [f64; 4],
    /// Refined arc length (m).
    pub s_len: f64,
}

/// Sampled Cartesian path: arrays share one index, `s` is cumulative chord
/// length starting at 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampledPath {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub psi: Vec<f64>,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplineError {
    /// Endpoints closer than 1 mm.
    DegenerateSegment,
    /// Consecutive chain waypoints closer than 1 mm.
    DuplicateWaypoint { index: usize },
    TooFewWaypoints,
    /// Vanishing first derivative while sampling; `mu` locates it.
    Cusp { mu: f64 },
    BadSampleCount,
}

impl core::fmt::Display for SplineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SplineError::DegenerateSegment => write!(f, "segment endpoints coincide"),
            SplineError::DuplicateWaypoint { index } => {
                write!(f, "duplicate consecutive waypoint at index {index}")
            }
            SplineError::TooFewWaypoints => write!(f, "need at least 2 waypoints"),
            SplineError::Cusp { mu } => write!(f, "cusp (zero first derivative) at mu = {mu}"),
            SplineError::BadSampleCount => write!(f, "need at least 2 samples"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SplineError {}

const MIN_SEGMENT_LEN: f64 = 1e-3;
const REFINE_REL_TOL: f64 = 1e-3;
const REFINE_MAX_ITER: usize = 10;

impl CubicSegment {
    #[inline]
    pub fn point(&self, mu: f64) -> (f64, f64) {
        (eval(&self.ax, mu), eval(&self.ay, mu))
    }

    /// First derivative with respect to `mu`.
    #[inline]
    pub fn deriv1(&self, mu: f64) -> (f64, f64) {
        (eval_d1(&self.ax, mu), eval_d1(&self.ay, mu))
    }

    /// Second derivative with respect to `mu`.
    #[inline]
    pub fn deriv2(&self, mu: f64) -> (f64, f64) {
        (eval_d2(&self.ax, mu), eval_d2(&self.ay, mu))
    }

    /// Arc length by composite Simpson over `mu` (64 intervals).
    pub fn integrate_length(&self) -> f64 {
        let n = 64;
        let h = 1.0 / n as f64;
        let speed = |mu: f64| {
            let (dx, dy) = self.deriv1(mu);
            math::hypot(dx, dy)
        };
        let mut acc = speed(0.0) + speed(1.0);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * speed(k as f64 * h);
        }
        acc * h / 3.0
    }
}

#[inline]
fn eval(a: &[f64; 4], mu: f64) -> f64 {
    ((a[0] * mu + a[1]) * mu + a[2]) * mu + a[3]
}

#[inline]
fn eval_d1(a: &[f64; 4], mu: f64) -> f64 {
    (3.0 * a[0] * mu + 2.0 * a[1]) * mu + a[2]
}

#[inline]
fn eval_d2(a: &[f64; 4], mu: f64) -> f64 {
    6.0 * a[0] * mu + 2.0 * a[1]
}

/// Solve one coordinate of the pose-to-pose constraint set for a given
/// segment length: position and length-scaled heading derivative at both
/// ends.
fn solve_coord(p_s: f64, p_e: f64, d_s: f64, d_e: f64) -> [f64; 4] {
    // a0 = p_s, a1 = d_s, a3 + a2 = p_e - p_s - a1, 3 a3 + 2 a2 = d_e - a1.
    let a0 = p_s;
    let a1 = d_s;
    let d = p_e - p_s - a1;
    let a3 = (d_e - a1) - 2.0 * d;
    let a2 = d - a3;
    [a3, a2, a1, a0]
}

fn segment_for_len(start: Pose, end: Pose, s_len: f64) -> CubicSegment {
    CubicSegment {
        ax: solve_coord(start.x, end.x, s_len * math::cos(start.theta), s_len * math::cos(end.theta)),
        ay: solve_coord(start.y, end.y, s_len * math::sin(start.theta), s_len * math::sin(end.theta)),
        s_len,
    }
}

/// Fit one cubic per coordinate through two poses with heading constraints
/// scaled by the path length.
///
/// The length is initialized to the Euclidean endpoint distance and the
/// coefficients are recomputed with the integrated arc length until the
/// relative change drops below 1e-3 (at most 10 iterations). The returned
/// `s_len` is the value the stored coefficients were solved with.
pub fn fit_c1_segment(start: Pose, end: Pose) -> Result<CubicSegment, SplineError> {
    let dist = math::hypot(end.x - start.x, end.y - start.y);
    if dist <= MIN_SEGMENT_LEN {
        return Err(SplineError::DegenerateSegment);
    }
    let mut s_len = dist;
    let mut seg = segment_for_len(start, end, s_len);
    for _ in 0..REFINE_MAX_ITER {
        let integrated = seg.integrate_length();
        if math::abs(integrated - s_len) <= REFINE_REL_TOL * integrated {
            break;
        }
        s_len = integrated;
        seg = segment_for_len(start, end, s_len);
    }
    Ok(seg)
}

/// Solve a curvature continuous cubic chain through `points`, clamped to
/// `theta_start` / `theta_end` at the boundaries.
///
/// Interior junctions match first and second `mu`-derivatives exactly; the
/// boundary heading rows are scaled by the chord length of the boundary
/// segments, re-solved once with the integrated lengths of the initial
/// solution. One banded (tridiagonal) system per coordinate.
pub fn solve_c2_chain(
    points: &[(f64, f64)],
    theta_start: f64,
    theta_end: f64,
) -> Result<Vec<CubicSegment>, SplineError> {
    if points.len() < 2 {
        return Err(SplineError::TooFewWaypoints);
    }
    let n_seg = points.len() - 1;
    for i in 0..n_seg {
        let d = math::hypot(points[i + 1].0 - points[i].0, points[i + 1].1 - points[i].1);
        if d <= MIN_SEGMENT_LEN {
            return Err(SplineError::DuplicateWaypoint { index: i + 1 });
        }
    }

    let chord = |i: usize| math::hypot(points[i + 1].0 - points[i].0, points[i + 1].1 - points[i].1);
    let mut len_first = chord(0);
    let mut len_last = chord(n_seg - 1);

    let mut segs = solve_chain_with(points, theta_start, theta_end, len_first, len_last);
    // One refinement pass of the boundary lengths.
    len_first = segs[0].integrate_length();
    len_last = segs[n_seg - 1].integrate_length();
    segs = solve_chain_with(points, theta_start, theta_end, len_first, len_last);

    for seg in segs.iter_mut() {
        seg.s_len = seg.integrate_length();
    }
    Ok(segs)
}

fn solve_chain_with(
    points: &[(f64, f64)],
    theta_start: f64,
    theta_end: f64,
    len_first: f64,
    len_last: f64,
) -> Vec<CubicSegment> {
    let n_seg = points.len() - 1;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mx = knot_derivatives(&xs, len_first * math::cos(theta_start), len_last * math::cos(theta_end));
    let my = knot_derivatives(&ys, len_first * math::sin(theta_start), len_last * math::sin(theta_end));

    let mut segs = Vec::with_capacity(n_seg);
    for i in 0..n_seg {
        let ax = coeffs_from_derivs(xs[i], xs[i + 1], mx[i], mx[i + 1]);
        let ay = coeffs_from_derivs(ys[i], ys[i + 1], my[i], my[i + 1]);
        segs.push(CubicSegment { ax, ay, s_len: 0.0 });
    }
    segs
}

/// Clamped-end knot derivatives of a cubic interpolation chain on a uniform
/// `mu` grid: interior rows `m[i-1] + 4 m[i] + m[i+1] = 3 (p[i+1] - p[i-1])`,
/// solved with the Thomas algorithm (the system is strictly diagonally
/// dominant).
fn knot_derivatives(p: &[f64], d_start: f64, d_end: f64) -> Vec<f64> {
    let n = p.len();
    if n == 2 {
        return vec![d_start, d_end];
    }
    let m = n - 2; // interior unknowns
    let mut diag = vec![4.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        rhs[i] = 3.0 * (p[i + 2] - p[i]);
    }
    rhs[0] -= d_start;
    rhs[m - 1] -= d_end;

    // Thomas elimination with unit off-diagonals.
    for i in 1..m {
        let w = 1.0 / diag[i - 1];
        diag[i] -= w;
        rhs[i] -= w * rhs[i - 1];
    }
    let mut x = vec![0.0; m];
    x[m - 1] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = (rhs[i] - x[i + 1]) / diag[i];
    }

    let mut out = Vec::with_capacity(n);
    out.push(d_start);
    out.extend_from_slice(&x);
    out.push(d_end);
    out
}

/// Cubic coefficients on [0, 1] from endpoint values and derivatives.
fn coeffs_from_derivs(p0: f64, p1: f64, m0: f64, m1: f64) -> [f64; 4] {
    let a3 = 2.0 * (p0 - p1) + m0 + m1;
    let a2 = 3.0 * (p1 - p0) - 2.0 * m0 - m1;
    [a3, a2, m0, p0]
}

/// Sample a segment at `n` uniform `mu` values: heading from the first
/// derivative, curvature from the standard parametric expression, station by
/// cumulative chord length.
pub fn sample_segment(seg: &CubicSegment, n: usize) -> Result<SampledPath, SplineError> {
    if n < 2 {
        return Err(SplineError::BadSampleCount);
    }
    let mut path = SampledPath {
        s: Vec::with_capacity(n),
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        psi: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
    };
    let cusp_tol = 1e-6 * seg.s_len;
    for k in 0..n {
        let mu = k as f64 / (n - 1) as f64;
        let (x, y) = seg.point(mu);
        let (dx, dy) = seg.deriv1(mu);
        let (ddx, ddy) = seg.deriv2(mu);
        let speed = math::hypot(dx, dy);
        if speed < cusp_tol {
            return Err(SplineError::Cusp { mu });
        }
        let psi = math::atan2(dy, dx);
        let kappa = (dx * ddy - dy * ddx) / (speed * speed * speed);
        let s = if k == 0 {
            0.0
        } else {
            path.s[k - 1] + math::hypot(x - path.x[k - 1], y - path.y[k - 1])
        };
        path.s.push(s);
        path.x.push(x);
        path.y.push(y);
        path.psi.push(psi);
        path.kappa.push(kappa);
    }
    Ok(path)
}

/// Sample a whole chain at roughly `step` meters of arc, dropping the
/// duplicated junction sample of every segment after the first.
pub fn sample_chain(segs: &[CubicSegment], step: f64) -> Result<SampledPath, SplineError> {
    let mut out = SampledPath::default();
    for (i, seg) in segs.iter().enumerate() {
        let intervals = ((seg.s_len / step) + 0.5) as usize;
        let n = intervals.max(1) + 1;
        let part = sample_segment(seg, n)?;
        out.append(&part, i > 0);
    }
    Ok(out)
}

impl SampledPath {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }

    /// Append `other`, offsetting its stations; `skip_first` drops the
    /// duplicated junction sample.
    pub fn append(&mut self, other: &SampledPath, skip_first: bool) {
        let offset = self.total_length();
        let start = if skip_first && !self.is_empty() { 1 } else { 0 };
        for k in start..other.len() {
            self.s.push(offset + other.s[k]);
            self.x.push(other.x[k]);
            self.y.push(other.y[k]);
            self.psi.push(other.psi[k]);
            self.kappa.push(other.kappa[k]);
        }
    }
}
