//! Synthetic airfield track: two long straights joined by semicircular
//! turns, wide on the straights and pinched in the turns, with a
//! friction-limited closed-lap velocity profile on the center line.

use raceplan_core::spline::SampledPath;
use raceplan_core::velocity::{forward_backward_profile, FrictionParams};

/// Geometry of the generated track; distances in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSpec {
    pub straight_len: f64,
    pub turn_radius: f64,
    /// Full track width on the straights.
    pub width_straight: f64,
    /// Full track width inside the turns.
    pub width_curve: f64,
    /// Length of the width taper before and after each turn.
    pub taper_len: f64,
    /// Point spacing of the emitted line.
    pub step: f64,
    /// Speed cap of the race-line profile (m/s).
    pub v_cap: f64,
}

impl Default for TrackSpec {
    fn default() -> Self {
        TrackSpec {
            straight_len: 500.0,
            turn_radius: 30.0,
            width_straight: 20.0,
            width_curve: 5.0,
            taper_len: 40.0,
            step: 1.0,
            v_cap: 60.0,
        }
    }
}

impl TrackSpec {
    pub fn lap_length(&self) -> f64 {
        2.0 * self.straight_len + 2.0 * std::f64::consts::PI * self.turn_radius
    }
}

/// One generated sample of the center line.
struct Sample {
    s: f64,
    x: f64,
    y: f64,
    theta: f64,
    kappa: f64,
    half_width: f64,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn geometry(spec: &TrackSpec) -> Vec<Sample> {
    let l = spec.straight_len;
    let r = spec.turn_radius;
    let arc = std::f64::consts::PI * r;
    let lap = spec.lap_length();
    // Ceil keeps the point spacing at or under `step`, so the closing
    // segment stays inside the loader's closure tolerance.
    let n = (lap / spec.step).ceil() as usize;

    // Turn spans along the station.
    let turn1 = (l, l + arc);
    let turn2 = (2.0 * l + arc, 2.0 * l + 2.0 * arc);

    let half_w = |s: f64| -> f64 {
        let ws = spec.width_straight / 2.0;
        let wc = spec.width_curve / 2.0;
        // Distance into the nearest turn (negative outside).
        let in_turn =
            (s >= turn1.0 && s <= turn1.1) || (s >= turn2.0 && s <= turn2.1);
        if in_turn {
            return wc;
        }
        // Distance to the nearest turn boundary measured along the lap.
        let mut d = f64::INFINITY;
        for edge in [turn1.0, turn1.1, turn2.0, turn2.1] {
            let fwd = (edge - s).rem_euclid(lap);
            let bwd = (s - edge).rem_euclid(lap);
            d = d.min(fwd.min(bwd));
        }
        wc + (ws - wc) * smoothstep(d / spec.taper_len)
    };

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = i as f64 * lap / n as f64;
        let (x, y, theta, kappa) = if s < l {
            (s, 0.0, 0.0, 0.0)
        } else if s < l + arc {
            let phi = (s - l) / r;
            (l + r * phi.sin(), r - r * phi.cos(), phi, 1.0 / r)
        } else if s < 2.0 * l + arc {
            let t = s - l - arc;
            (l - t, 2.0 * r, std::f64::consts::PI, 0.0)
        } else {
            let phi = (s - 2.0 * l - arc) / r;
            (
                -r * phi.sin(),
                r + r * phi.cos(),
                raceplan_core::math::wrap_angle(std::f64::consts::PI + phi),
                1.0 / r,
            )
        };
        out.push(Sample { s, x, y, theta, kappa, half_width: half_w(s) });
    }
    out
}

/// Friction-limited velocity profile around the closed lap: solve three
/// concatenated laps with the linear forward-backwards pass and keep the
/// converged middle lap.
pub fn closed_lap_speeds(s: &[f64], kappa: &[f64], lap: f64, fric: &FrictionParams) -> Vec<f64> {
    let n = s.len();
    let mut path = SampledPath::default();
    for rep in 0..3 {
        for i in 0..n {
            path.s.push(s[i] + rep as f64 * lap);
            path.kappa.push(kappa[i]);
            path.x.push(0.0);
            path.y.push(0.0);
            path.psi.push(0.0);
        }
    }
    let v_floor = path
        .kappa
        .iter()
        .map(|&k| raceplan_core::velocity::curvature_speed_limit(k, fric, 1.0))
        .fold(f64::INFINITY, f64::min);
    let prof = forward_backward_profile(&path, v_floor, v_floor, fric, None);
    prof.v[n..2 * n].to_vec()
}

/// Emit the reference-line CSV for the airfield track.
pub fn airfield_csv(spec: &TrackSpec) -> String {
    let samples = geometry(spec);
    let fric = FrictionParams { v_cap: spec.v_cap, ..FrictionParams::default() };
    let stations: Vec<f64> = samples.iter().map(|p| p.s).collect();
    let kappas: Vec<f64> = samples.iter().map(|p| p.kappa).collect();
    let speeds = closed_lap_speeds(&stations, &kappas, spec.lap_length(), &fric);

    let mut out = String::new();
    out.push_str("# synthetic airfield track: two straights joined by semicircular turns\n");
    out.push_str("s_m,x_m,y_m,psi_rad,kappa_radpm,vx_mps,w_left_m,w_right_m\n");
    for (p, v) in samples.iter().zip(&speeds) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.s, p.x, p.y, p.theta, p.kappa, v, p.half_width, p.half_width
        ));
    }
    out
}
