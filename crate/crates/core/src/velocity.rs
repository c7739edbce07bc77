//! Velocity-profile generation along a sampled path.
//!
//! The profile is limited three ways: pointwise by curvature (`a_lat = kappa
//! v^2` at the lateral limit), forward by the propulsive potential and
//! backward by the braking potential, both coupled to the lateral usage
//! through a friction ellipse. The final profile is the pointwise minimum of
//! the three passes; accelerations follow from `a = (v_next^2 - v^2) / (2
//! ds)` on the path's own sample grid.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::spline::SampledPath;

/// Acceleration limits and global speed cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    /// Max lateral acceleration (m/s^2).
    pub a_lat_max: f64,
    /// Max propulsive longitudinal acceleration (m/s^2).
    pub a_lon_max_acc: f64,
    /// Max braking deceleration (m/s^2, positive).
    pub a_lon_max_dec: f64,
    /// Global speed cap (m/s).
    pub v_cap: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        FrictionParams { a_lat_max: 12.0, a_lon_max_acc: 6.0, a_lon_max_dec: 12.0, v_cap: 60.0 }
    }
}

/// PD gains for following a lead vehicle, acting on the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowGains {
    /// Proportional gain on (gap - d_safe), 1/s.
    pub kp: f64,
    /// Derivative gain on the gap rate, dimensionless.
    pub kd: f64,
    /// Desired following distance (m).
    pub d_safe: f64,
}

impl FollowGains {
    /// Default gains with a speed-dependent safe distance.
    pub fn for_ego_speed(v_ego: f64) -> Self {
        FollowGains { kp: 0.5, kd: 0.3, d_safe: (0.8 * v_ego).max(5.0) }
    }
}

/// Per-sample velocity and signed longitudinal acceleration, aligned with
/// the path the profile was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    /// Set when the start velocity exceeds the braking-reachable envelope;
    /// the profile then holds max braking until it rejoins the envelope.
    pub infeasible_entry: bool,
}

/// Curvature-limited speed: `min(v_cap, sqrt(a_lat_max * scale / |kappa|))`.
pub fn curvature_speed_limit(kappa: f64, params: &FrictionParams, scale: f64) -> f64 {
    let k = math::abs(kappa);
    if k <= 0.0 {
        return params.v_cap;
    }
    math::sqrt(params.a_lat_max * scale / k).min(params.v_cap)
}

/// Remaining longitudinal fraction of the friction ellipse at lateral usage
/// `kappa * v^2 / a_lat_lim`.
#[inline]
fn ellipse_margin(kappa: f64, v: f64, a_lat_lim: f64) -> f64 {
    let lat = math::abs(kappa) * v * v / a_lat_lim;
    math::sqrt((1.0 - lat * lat).max(0.0))
}

/// Largest `u` with `u^2 = c + 2 a ds * margin(kappa, u)`: the speed a
/// braking step can start from when the margin is taken at the starting
/// sample itself. The right-hand side decreases in `u`, so the fixpoint is
/// unique; bisection on `u^2` over `[c, c + 2 a ds]`.
fn brake_reach(c: f64, kappa: f64, a_lon: f64, a_lat_lim: f64, ds: f64) -> f64 {
    let b = 2.0 * a_lon * ds;
    if math::abs(kappa) <= 0.0 {
        return math::sqrt(c + b);
    }
    let margin_at = |z: f64| {
        let lat = math::abs(kappa) * z / a_lat_lim;
        math::sqrt((1.0 - lat * lat).max(0.0))
    };
    let (mut lo, mut hi) = (c, c + b);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= c + b * margin_at(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    math::sqrt(0.5 * (lo + hi))
}

/// Forward-backwards solver over the combined acceleration potential.
///
/// The start sample equals `v_start` exactly; the end sample never exceeds
/// `v_goal`. Friction margins are evaluated at the sample an acceleration is
/// emitted at, so the per-sample friction-ellipse bound holds with equality
/// wherever a pass saturates. `scale` optionally derates the lateral limit
/// per sample. A start velocity above the braking-reachable envelope flags
/// the profile and the solver emits best-effort max braking until it rejoins
/// the envelope.
pub fn forward_backward_profile(
    path: &SampledPath,
    v_start: f64,
    v_goal: f64,
    params: &FrictionParams,
    scale: Option<&[f64]>,
) -> VelocityProfile {
    forward_backward_with_caps(path, v_start, v_goal, params, scale, None)
}

/// [`forward_backward_profile`] with an additional per-sample velocity cap
/// (the follow law uses it to bound the speed from the lead gap onward).
pub fn forward_backward_with_caps(
    path: &SampledPath,
    v_start: f64,
    v_goal: f64,
    params: &FrictionParams,
    scale: Option<&[f64]>,
    caps: Option<&[f64]>,
) -> VelocityProfile {
    let n = path.len();
    assert!(n >= 2, "profile needs at least 2 samples");
    if let Some(sc) = scale {
        assert_eq!(sc.len(), n, "scale table must align with the path");
    }
    if let Some(c) = caps {
        assert_eq!(c.len(), n, "cap table must align with the path");
    }
    let scale_at = |k: usize| scale.map(|s| s[k]).unwrap_or(1.0);
    let lat_lim = |k: usize| params.a_lat_max * scale_at(k);

    let v_lim: Vec<f64> = (0..n)
        .map(|k| {
            let lim = curvature_speed_limit(path.kappa[k], params, scale_at(k));
            caps.map(|c| lim.min(c[k])).unwrap_or(lim)
        })
        .collect();

    // Forward pass: propulsive limit, start pinned.
    let mut v_fwd = vec![0.0; n];
    v_fwd[0] = v_start;
    for k in 0..n - 1 {
        let ds = path.s[k + 1] - path.s[k];
        let a_avail = params.a_lon_max_acc * ellipse_margin(path.kappa[k], v_fwd[k], lat_lim(k));
        let reach = math::sqrt(v_fwd[k] * v_fwd[k] + 2.0 * a_avail * ds);
        v_fwd[k + 1] = reach.min(v_lim[k + 1]);
    }

    // Backward pass: braking limit, seeded by the goal velocity. The margin
    // depends on the sample being computed, which makes the step implicit.
    let mut v_bwd = vec![0.0; n];
    v_bwd[n - 1] = v_goal.min(v_lim[n - 1]);
    for k in (0..n - 1).rev() {
        let ds = path.s[k + 1] - path.s[k];
        let reach = brake_reach(
            v_bwd[k + 1] * v_bwd[k + 1],
            path.kappa[k],
            params.a_lon_max_dec,
            lat_lim(k),
            ds,
        );
        v_bwd[k] = reach.min(v_lim[k]);
    }

    let infeasible_entry = v_start > v_bwd[0] + 1e-9 || v_start > v_lim[0] + 1e-9;

    // Combined profile. On an infeasible entry the pass minimum is
    // unreachable from the pinned start, so hold max braking until the
    // envelope is rejoined.
    let mut v = vec![0.0; n];
    v[0] = v_start;
    for k in 0..n - 1 {
        let regular = v_fwd[k + 1].min(v_bwd[k + 1]);
        v[k + 1] = if infeasible_entry {
            let ds = path.s[k + 1] - path.s[k];
            let brake = math::sqrt((v[k] * v[k] - 2.0 * params.a_lon_max_dec * ds).max(0.0));
            regular.max(brake)
        } else {
            regular
        };
    }

    let mut a = vec![0.0; n];
    for k in 0..n - 1 {
        let ds = path.s[k + 1] - path.s[k];
        a[k] = (v[k + 1] * v[k + 1] - v[k] * v[k]) / (2.0 * ds);
    }

    VelocityProfile { v, a, infeasible_entry }
}

/// PD target speed for following: `v_lead + kp (gap - d_safe) + kd gap_rate`,
/// clamped to [0, v_cap].
pub fn follow_target_speed(
    gap: f64,
    gap_rate: f64,
    v_lead: f64,
    params: &FrictionParams,
    gains: &FollowGains,
) -> f64 {
    (v_lead + gains.kp * (gap - gains.d_safe) + gains.kd * gap_rate).clamp(0.0, params.v_cap)
}

/// Follow profile behind a lead vehicle: forward-backwards profile with the
/// PD target speed imposed from the safe-gap point onward (and as the end
/// speed), then pointwise min against the friction-limited race profile of
/// the same path.
pub fn follow_profile(
    path: &SampledPath,
    gap: f64,
    gap_rate: f64,
    v_lead: f64,
    params: &FrictionParams,
    scale: Option<&[f64]>,
    gains: &FollowGains,
    race: &VelocityProfile,
) -> VelocityProfile {
    assert_eq!(race.v.len(), path.len(), "race profile must align with the path");
    let v_target = follow_target_speed(gap, gap_rate, v_lead, params, gains);
    // The target binds where the gap shrinks to the safe distance, not only
    // at the far end of the planning horizon.
    let bind_from = (gap - gains.d_safe).max(0.0);
    let caps: Vec<f64> = path
        .s
        .iter()
        .map(|&s| if s >= bind_from { v_target } else { f64::INFINITY })
        .collect();
    let follow =
        forward_backward_with_caps(path, race.v[0], v_target, params, scale, Some(&caps));

    let n = path.len();
    let mut v = vec![0.0; n];
    for k in 0..n {
        v[k] = follow.v[k].min(race.v[k]);
    }
    let mut a = vec![0.0; n];
    for k in 0..n - 1 {
        let ds = path.s[k + 1] - path.s[k];
        a[k] = (v[k + 1] * v[k + 1] - v[k] * v[k]) / (2.0 * ds);
    }
    VelocityProfile { v, a, infeasible_entry: follow.infeasible_entry }
}

/// Piecewise-linear per-station friction scaling in (0, 1], loaded from a
/// `s_m,scale` CSV. Lookups clamp outside the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionScale {
    knots: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleParseError {
    pub line: usize,
    pub msg: String,
}

impl core::fmt::Display for ScaleParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ScaleParseError {}

impl FrictionScale {
    pub fn parse_csv(text: &str) -> Result<Self, ScaleParseError> {
        let mut knots: Vec<(f64, f64)> = Vec::new();
        let mut seen_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                if line != "s_m,scale" {
                    return Err(ScaleParseError {
                        line: line_no,
                        msg: String::from("expected header `s_m,scale`"),
                    });
                }
                seen_header = true;
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let (s, scale) = match (it.next(), it.next(), it.next()) {
                (Some(a), Some(b), None) => {
                    let parse = |v: &str| {
                        v.parse::<f64>().map_err(|_| ScaleParseError {
                            line: line_no,
                            msg: String::from("cannot parse number"),
                        })
                    };
                    (parse(a)?, parse(b)?)
                }
                _ => {
                    return Err(ScaleParseError {
                        line: line_no,
                        msg: String::from("expected two fields"),
                    })
                }
            };
            if !(scale > 0.0 && scale <= 1.0) {
                return Err(ScaleParseError {
                    line: line_no,
                    msg: String::from("scale must be in (0, 1]"),
                });
            }
            if let Some(last) = knots.last() {
                if s <= last.0 {
                    return Err(ScaleParseError {
                        line: line_no,
                        msg: String::from("s_m must be strictly increasing"),
                    });
                }
            }
            knots.push((s, scale));
        }
        if knots.is_empty() {
            return Err(ScaleParseError { line: 0, msg: String::from("no data rows") });
        }
        Ok(FrictionScale { knots })
    }

    pub fn at(&self, s: f64) -> f64 {
        let k = &self.knots;
        if s <= k[0].0 {
            return k[0].1;
        }
        if s >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|p| p.0 <= s) - 1;
        let (s0, v0) = k[i];
        let (s1, v1) = k[i + 1];
        math::lerp(v0, v1, (s - s0) / (s1 - s0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Synthetic path: only `s` and `kappa` matter to the solver.
    fn path_with(kappas: &[f64], ds: f64) -> SampledPath {
        let n = kappas.len();
        SampledPath {
            s: (0..n).map(|k| k as f64 * ds).collect(),
            x: vec![0.0; n],
            y: vec![0.0; n],
            psi: vec![0.0; n],
            kappa: kappas.to_vec(),
        }
    }

    #[test]
    fn curvature_limit_arithmetic() {
        let p = FrictionParams::default();
        assert_eq!(curvature_speed_limit(0.0, &p, 1.0), p.v_cap);
        assert!((curvature_speed_limit(0.03, &p, 1.0) - 20.0).abs() < 1e-12);
        let full = curvature_speed_limit(0.05, &p, 1.0);
        let quarter = curvature_speed_limit(0.05, &p, 0.25);
        assert!((quarter - full / 2.0).abs() < 1e-12);
    }

    #[test]
    fn straight_at_cap_is_constant() {
        let p = FrictionParams::default();
        let path = path_with(&[0.0; 20], 5.0);
        let prof = forward_backward_profile(&path, p.v_cap, p.v_cap, &p, None);
        for (&v, &a) in prof.v.iter().zip(&prof.a) {
            assert_eq!(v, p.v_cap);
            assert_eq!(a, 0.0);
        }
        assert!(!prof.infeasible_entry);
    }

    #[test]
    fn triangle_peak_matches_closed_form() {
        // 200 m straight, rest-to-rest, symmetric 10 m/s^2 limits.
        let p = FrictionParams {
            a_lat_max: 50.0,
            a_lon_max_acc: 10.0,
            a_lon_max_dec: 10.0,
            v_cap: 100.0,
        };
        let path = path_with(&[0.0; 201], 1.0);
        let prof = forward_backward_profile(&path, 0.0, 0.0, &p, None);
        let peak = prof.v.iter().cloned().fold(0.0, f64::max);
        let expect = (2.0f64 * 10.0 * 100.0).sqrt();
        assert!((peak - expect).abs() < 0.15, "peak {peak} vs {expect}");
        assert!((prof.v[100] - expect).abs() < 0.15);
        assert_eq!(*prof.v.last().unwrap(), 0.0);
        assert_eq!(prof.v[0], 0.0);
    }

    /// Corner profile: braking must begin before the curvature rises.
    #[test]
    fn corner_entry_brakes_early() {
        let p = FrictionParams::default();
        let mut kap = vec![0.0; 120];
        for item in kap.iter_mut().skip(80) {
            *item = 0.05;
        }
        let path = path_with(&kap, 1.0);
        let prof = forward_backward_profile(&path, 40.0, 60.0, &p, None);
        let v_corner = (p.a_lat_max / 0.05f64).sqrt();
        for k in 80..120 {
            assert!(prof.v[k] <= v_corner + 1e-6, "v {} at {k}", prof.v[k]);
        }
        // Already decelerating well before the corner.
        assert!(prof.a[60] < 0.0);
    }

    fn assert_friction_invariants(
        path: &SampledPath,
        prof: &VelocityProfile,
        p: &FrictionParams,
        scale: Option<&[f64]>,
    ) {
        for k in 0..path.len() {
            let sc = scale.map(|s| s[k]).unwrap_or(1.0);
            let lat = path.kappa[k].abs() * prof.v[k] * prof.v[k];
            assert!(lat <= p.a_lat_max * sc * (1.0 + 1e-6), "lat {lat} at {k}");
            let a_lim = if prof.a[k] >= 0.0 { p.a_lon_max_acc } else { p.a_lon_max_dec };
            let e = (prof.a[k] / a_lim).powi(2) + (lat / (p.a_lat_max * sc)).powi(2);
            assert!(e <= 1.0 + 1e-6, "ellipse {e} at {k}");
        }
    }

    #[test]
    fn invariants_hold_on_mixed_path() {
        let p = FrictionParams::default();
        let mut kap = vec![0.0; 150];
        for item in kap.iter_mut().take(70).skip(40) {
            *item = 0.04;
        }
        for item in kap.iter_mut().take(130).skip(100) {
            *item = -0.06;
        }
        let path = path_with(&kap, 1.5);
        let prof = forward_backward_profile(&path, 20.0, 10.0, &p, None);
        assert!(!prof.infeasible_entry);
        assert_friction_invariants(&path, &prof, &p, None);
        assert!(*prof.v.last().unwrap() <= 10.0 + 1e-9);
        assert_eq!(prof.v[0], 20.0);
    }

    #[test]
    fn scale_derates_the_limit() {
        let p = FrictionParams::default();
        let kap = vec![0.05; 50];
        let path = path_with(&kap, 1.0);
        let scale = vec![0.25; 50];
        let full = forward_backward_profile(&path, 5.0, 50.0, &p, None);
        let derated = forward_backward_profile(&path, 5.0, 50.0, &p, Some(&scale));
        for k in 0..50 {
            assert!(derated.v[k] <= full.v[k] + 1e-9);
        }
        assert_friction_invariants(&path, &derated, &p, Some(&scale));
    }

    #[test]
    fn tightening_limits_never_raises_velocity() {
        let mut kap = vec![0.0; 100];
        for item in kap.iter_mut().take(60).skip(30) {
            *item = 0.03;
        }
        let path = path_with(&kap, 2.0);
        let base = FrictionParams::default();
        let prof = forward_backward_profile(&path, 15.0, 30.0, &base, None);
        for (field, tighter) in [
            ("a_lat", FrictionParams { a_lat_max: 6.0, ..base }),
            ("v_cap", FrictionParams { v_cap: 30.0, ..base }),
            ("acc", FrictionParams { a_lon_max_acc: 3.0, ..base }),
        ] {
            let t = forward_backward_profile(&path, 15.0, 30.0, &tighter, None);
            for k in 0..path.len() {
                assert!(t.v[k] <= prof.v[k] + 1e-9, "{field} raised v at {k}");
            }
        }
    }

    #[test]
    fn infeasible_entry_flagged_and_brakes() {
        let p = FrictionParams::default();
        let mut kap = vec![0.0; 40];
        for item in kap.iter_mut().skip(10) {
            *item = 0.1; // corner limit ~ 10.95 m/s
        }
        let path = path_with(&kap, 1.0);
        let prof = forward_backward_profile(&path, 59.0, 5.0, &p, None);
        assert!(prof.infeasible_entry);
        assert_eq!(prof.v[0], 59.0);
        // Max braking while over the envelope.
        for k in 0..5 {
            assert!(prof.v[k + 1] < prof.v[k]);
            assert!(prof.a[k] >= -p.a_lon_max_dec - 1e-9);
        }
    }

    #[test]
    fn follow_target_at_setpoint_is_lead_speed() {
        let p = FrictionParams::default();
        let g = FollowGains { kp: 0.5, kd: 0.3, d_safe: 20.0 };
        assert_eq!(follow_target_speed(20.0, 0.0, 15.0, &p, &g), 15.0);
        // Too close and still closing: back off below the lead speed.
        assert!(follow_target_speed(10.0, -2.0, 15.0, &p, &g) < 15.0);
        // Far ahead: clamped to the cap.
        assert_eq!(follow_target_speed(1000.0, 0.0, 15.0, &p, &g), p.v_cap);
    }

    #[test]
    fn follow_with_large_gap_equals_race_profile() {
        let p = FrictionParams::default();
        let mut kap = vec![0.0; 80];
        for item in kap.iter_mut().skip(50) {
            *item = 0.02;
        }
        let path = path_with(&kap, 2.0);
        let race = forward_backward_profile(&path, 18.0, 25.0, &p, None);
        let g = FollowGains::for_ego_speed(18.0);
        let follow = follow_profile(&path, 500.0, 0.0, 20.0, &p, None, &g, &race);
        for k in 0..path.len() {
            assert!((follow.v[k] - race.v[k]).abs() < 1e-9, "diff at {k}");
        }
    }

    #[test]
    fn follow_never_exceeds_race_profile() {
        let p = FrictionParams::default();
        let path = path_with(&vec![0.0; 60], 2.0);
        let race = forward_backward_profile(&path, 20.0, 40.0, &p, None);
        let g = FollowGains::for_ego_speed(20.0);
        for (gap, rate, v_lead) in [(5.0, -3.0, 10.0), (30.0, 1.0, 15.0), (80.0, -5.0, 25.0)] {
            let f = follow_profile(&path, gap, rate, v_lead, &p, None, &g, &race);
            for k in 0..path.len() {
                assert!(f.v[k] <= race.v[k] + 1e-12);
            }
            assert_friction_invariants(&path, &f, &p, None);
        }
    }

    #[test]
    fn friction_scale_parse_and_lookup() {
        let table = FrictionScale::parse_csv("s_m,scale\n0,1.0\n100,0.5\n200,1.0\n").unwrap();
        assert_eq!(table.at(-10.0), 1.0);
        assert_eq!(table.at(0.0), 1.0);
        assert!((table.at(50.0) - 0.75).abs() < 1e-12);
        assert_eq!(table.at(250.0), 1.0);
        assert!(FrictionScale::parse_csv("s_m,scale\n0,1.5\n").is_err());
        assert!(FrictionScale::parse_csv("bad,header\n0,1.0\n").is_err());
    }

    /// Dynamic-programming oracle on the continuous velocity state: the
    /// reachable set at each sample is an interval [0, hi], and the new upper
    /// bound is brute-force maximized over a dense scan (which covers the
    /// non-monotone coupling near the lateral limit that a greedy pass
    /// ignores). Transition semantics mirror the solver: both margins at the
    /// sample the acceleration acts from.
    fn dp_oracle(path: &SampledPath, v_start: f64, v_goal: f64, params: &FrictionParams) -> Vec<f64> {
        let n = path.len();
        let scan = 4000;
        let v_lim: Vec<f64> =
            (0..n).map(|k| curvature_speed_limit(path.kappa[k], params, 1.0)).collect();

        // Forward: max velocity reachable from the pinned start.
        let mut reach_hi = vec![0.0; n];
        reach_hi[0] = v_start;
        for k in 0..n - 1 {
            let ds = path.s[k + 1] - path.s[k];
            let mut best: f64 = 0.0;
            for j in 0..=scan {
                let v_from = reach_hi[k] * j as f64 / scan as f64;
                let m = ellipse_margin(path.kappa[k], v_from, params.a_lat_max);
                let v_to = math::sqrt(v_from * v_from + 2.0 * params.a_lon_max_acc * m * ds);
                best = best.max(v_to);
            }
            reach_hi[k + 1] = best.min(v_lim[k + 1]);
        }

        // Backward: max velocity from which the goal is still brakeable,
        // scanning candidate start speeds of each braking step.
        let mut fin_hi = vec![0.0; n];
        fin_hi[n - 1] = v_goal.min(v_lim[n - 1]);
        for k in (0..n - 1).rev() {
            let ds = path.s[k + 1] - path.s[k];
            let c = fin_hi[k + 1] * fin_hi[k + 1];
            let upper = math::sqrt(c + 2.0 * params.a_lon_max_dec * ds);
            let mut best: f64 = 0.0;
            for j in 0..=scan {
                let u = upper * j as f64 / scan as f64;
                let m = ellipse_margin(path.kappa[k], u, params.a_lat_max);
                if u * u <= c + 2.0 * params.a_lon_max_dec * m * ds {
                    best = best.max(u);
                }
            }
            fin_hi[k] = best.min(v_lim[k]);
        }

        let mut best = vec![0.0; n];
        best[0] = v_start;
        for k in 1..n {
            best[k] = reach_hi[k].min(fin_hi[k]);
        }
        best
    }

    #[test]
    fn solver_matches_dp_oracle() {
        let p = FrictionParams {
            a_lat_max: 10.0,
            a_lon_max_acc: 5.0,
            a_lon_max_dec: 9.0,
            v_cap: 30.0,
        };
        let mut cases: Vec<(SampledPath, f64, f64)> = Vec::new();
        cases.push((path_with(&[0.0; 40], 2.0), 0.0, 0.0));
        let mut corner = vec![0.0; 45];
        for item in corner.iter_mut().take(35).skip(20) {
            *item = 0.08;
        }
        cases.push((path_with(&corner, 1.5), 12.0, 20.0));
        let mut chicane = vec![0.0; 50];
        for item in chicane.iter_mut().take(18).skip(10) {
            *item = 0.1;
        }
        for item in chicane.iter_mut().take(40).skip(30) {
            *item = -0.05;
        }
        cases.push((path_with(&chicane, 1.0), 8.0, 6.0));

        // Deterministic random-ish cases at planner-realistic discretization
        // (about 1 m steps, curvature within the vehicle turn radius). The
        // greedy forward pass is below the true optimum by a boundary term
        // of order a_acc^2 ds^2 / v^2 where the lateral limit binds, which
        // stays well under the 0.1 m/s tolerance in this regime.
        let mut state: u64 = 42;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..12 {
            let n = 20 + (next() * 30.0) as usize;
            let mut kap = vec![0.0; n];
            let c0 = 3 + (next() * (n as f64 - 12.0)) as usize;
            let c1 = (c0 + 3 + (next() * 8.0) as usize).min(n);
            let mag = 0.02 + next() * 0.07;
            let ramp = 3.min(c0);
            for k in c0..c1.min(n) {
                kap[k] = mag;
            }
            for r in 0..ramp {
                kap[c0 - 1 - r] = mag * (ramp - r) as f64 / (ramp + 1) as f64;
            }
            let path = path_with(&kap, 0.8 + next() * 0.4);
            let v0 = next() * 8.0;
            let vg = next() * 15.0;
            cases.push((path, v0, vg));
        }

        for (i, (path, v0, vg)) in cases.iter().enumerate() {
            let prof = forward_backward_profile(path, *v0, *vg, &p, None);
            assert!(!prof.infeasible_entry, "case {i} should be feasible");
            let oracle = dp_oracle(path, *v0, *vg, &p);
            for k in 0..path.len() {
                assert!(
                    (prof.v[k] - oracle[k]).abs() < 0.1,
                    "case {i} sample {k}: solver {} vs oracle {}",
                    prof.v[k],
                    oracle[k]
                );
            }
        }
    }

    /// Coarse velocity-grid reachability: every grid profile it marks
    /// feasible is truly achievable, so it lower-bounds the optimum. The
    /// solver must never fall below it.
    #[test]
    fn solver_at_least_grid_reachable() {
        let p = FrictionParams {
            a_lat_max: 10.0,
            a_lon_max_acc: 5.0,
            a_lon_max_dec: 9.0,
            v_cap: 30.0,
        };
        let mut kap = vec![0.0; 30];
        for item in kap.iter_mut().take(24).skip(14) {
            *item = 0.06;
        }
        let path = path_with(&kap, 1.5);
        let (v0, vg) = (4.0, 8.0);
        let prof = forward_backward_profile(&path, v0, vg, &p, None);

        let step = 0.05;
        let levels = (p.v_cap / step) as usize + 1;
        let n = path.len();
        let v_lim: Vec<f64> = (0..n).map(|k| curvature_speed_limit(path.kappa[k], &p, 1.0)).collect();
        let feasible = |k: usize, vf: f64, vt: f64| {
            let ds = path.s[k + 1] - path.s[k];
            let a = (vt * vt - vf * vf) / (2.0 * ds);
            let m = ellipse_margin(path.kappa[k], vf, p.a_lat_max);
            a <= p.a_lon_max_acc * m + 1e-9 && a >= -p.a_lon_max_dec * m - 1e-9
        };
        let mut reach = vec![vec![false; levels]; n];
        let mut fin = vec![vec![false; levels]; n];
        for j in 0..levels {
            let v = j as f64 * step;
            reach[1][j] = v <= v_lim[1] && feasible(0, v0, v);
            fin[n - 1][j] = v <= vg.min(v_lim[n - 1]);
        }
        for k in 1..n - 1 {
            for jf in 0..levels {
                if !reach[k][jf] {
                    continue;
                }
                for jt in 0..levels {
                    if !reach[k + 1][jt]
                        && jt as f64 * step <= v_lim[k + 1]
                        && feasible(k, jf as f64 * step, jt as f64 * step)
                    {
                        reach[k + 1][jt] = true;
                    }
                }
            }
        }
        for k in (1..n - 1).rev() {
            for jf in 0..levels {
                if jf as f64 * step > v_lim[k] {
                    continue;
                }
                for jt in 0..levels {
                    if fin[k + 1][jt] && feasible(k, jf as f64 * step, jt as f64 * step) {
                        fin[k][jf] = true;
                        break;
                    }
                }
            }
        }
        for k in 1..n {
            let mut lower = 0.0;
            for j in 0..levels {
                if reach[k][j] && fin[k][j] {
                    lower = j as f64 * step;
                }
            }
            assert!(
                prof.v[k] >= lower - 1e-6,
                "solver {} below grid-certified {} at {k}",
                prof.v[k],
                lower
            );
        }
    }
}
