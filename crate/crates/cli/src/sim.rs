//! Closed-loop scenario simulation: ideal trajectory tracking at a fixed
//! planner period, a scripted lead vehicle on the race line, constant
//! velocity prediction of the lead, triggered blocked zones, and a CSV
//! trace of one row per tick.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use raceplan_core::collision::{zone_chain, ObstacleGroup, ObstacleKind, ObstacleSet, Side};
use raceplan_core::lattice::Lattice;
use raceplan_core::planner::{
    plan_cycle, ActionSet, LeadState, PlanError, PlanRequest, PlannerConfig, Primitive, Trajectory,
};
use raceplan_core::velocity::FrictionParams;
use raceplan_core::ReferenceLine;

use crate::config::{ObstacleSpec, ParamsFile, Scenario, ZoneTrigger};
use crate::{io, svg, CliError};

pub const TRACE_HEADER: &str =
    "t_s,ego_s_m,ego_l_m,ego_v_mps,primitive,n_candidates,cycle_ms,lead_s_m,lead_l_m";

/// One trace record per planner tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub ego_s: f64,
    pub ego_l: f64,
    pub ego_v: f64,
    /// Chosen primitive, or "brake" when the planner returned nothing.
    pub primitive: String,
    pub n_candidates: usize,
    pub cycle_ms: f64,
    pub lead_s: Option<f64>,
    pub lead_l: Option<f64>,
}

pub fn write_trace(rows: &[TraceRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 64 + 80);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let lead_s = r.lead_s.map(|v| v.to_string()).unwrap_or_default();
        let lead_l = r.lead_l.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t, r.ego_s, r.ego_l, r.ego_v, r.primitive, r.n_candidates, r.cycle_ms, lead_s, lead_l
        );
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, CliError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 {
            if raw != TRACE_HEADER {
                return Err(CliError::input(format!("line 1: unexpected trace header `{raw}`")));
            }
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 9 {
            return Err(CliError::input(format!("line {line_no}: expected 9 fields")));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            fields[i]
                .parse()
                .map_err(|_| CliError::input(format!("line {line_no}: bad number `{}`", fields[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>, CliError> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(TraceRow {
            t: num(0)?,
            ego_s: num(1)?,
            ego_l: num(2)?,
            ego_v: num(3)?,
            primitive: fields[4].to_string(),
            n_candidates: fields[5]
                .parse()
                .map_err(|_| CliError::input(format!("line {line_no}: bad candidate count")))?,
            cycle_ms: num(6)?,
            lead_s: opt(7)?,
            lead_l: opt(8)?,
        });
    }
    Ok(rows)
}

/// Everything a simulation run needs, loaded and built once.
pub struct SimContext {
    pub scenario: Scenario,
    pub track: ReferenceLine,
    pub lattice: Lattice,
    pub params: ParamsFile,
    pub config: PlannerConfig,
    /// Per-reference-point speed profile of the lead (aligned with the race
    /// line points), present iff the scenario has a lead.
    pub lead_speeds: Option<Vec<f64>>,
    /// Static obstacles resolved to Cartesian circles.
    pub obstacles: Vec<(f64, f64, f64)>,
}

pub fn prepare(scenario: Scenario) -> Result<SimContext, CliError> {
    let track = io::load_reference_line(&scenario.track_file)?;
    let (raceline, raceline_bytes) = io::load_raceline_with_bytes(&scenario.raceline_file)?;
    let params = io::load_params(scenario.params_file.as_deref())?;

    let lattice = match &scenario.graph_file {
        Some(path) => {
            let lat = io::load_graph(path)?;
            lat.verify_raceline(&raceline_bytes)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            lat
        }
        None => Lattice::build(raceline, params.graph, raceplan_core::fnv1a64(&raceline_bytes))
            .map_err(|e| CliError::input(format!("graph build failed: {e}")))?,
    };

    let mut config = PlannerConfig {
        veh_radius: (params.graph.veh_width.hypot(params.veh_len)) / 2.0,
        friction: FrictionParams { v_cap: scenario.ego_v_cap, ..FrictionParams::default() },
        ..PlannerConfig::default()
    };
    if let Some(path) = &scenario.friction_file {
        config.scale = Some(io::load_friction(path)?);
    }

    let line = lattice.line();
    let lead_speeds = scenario.lead.as_ref().map(|lead| {
        let fric = FrictionParams { v_cap: lead.v_cap, ..FrictionParams::default() };
        let stations: Vec<f64> = line.points().iter().map(|p| p.s).collect();
        let kappas: Vec<f64> = line.points().iter().map(|p| p.kappa).collect();
        crate::track::closed_lap_speeds(&stations, &kappas, line.lap_length(), &fric)
    });

    let mut obstacles = Vec::new();
    for spec in &scenario.obstacles {
        let (x, y, r) = match *spec {
            ObstacleSpec::Cartesian { x, y, r } => (x, y, r),
            ObstacleSpec::Frenet { s, l, r } => {
                let (x, y) = line.to_cartesian(s, l);
                (x, y, r)
            }
        };
        obstacles.push((x, y, r));
    }

    Ok(SimContext { scenario, track, lattice, params, config, lead_speeds, obstacles })
}

/// Three-circle cover of a vehicle footprint along its heading.
pub fn footprint_circles(
    x: f64,
    y: f64,
    theta: f64,
    veh_len: f64,
    veh_width: f64,
) -> Vec<(f64, f64, f64)> {
    let r = (veh_len / 6.0).hypot(veh_width / 2.0);
    let (dx, dy) = (theta.cos(), theta.sin());
    [-veh_len / 3.0, 0.0, veh_len / 3.0]
        .iter()
        .map(|d| (x + dx * d, y + dy * d, r))
        .collect()
}

/// Lead vehicle obstacle groups: spot-like footprint plus a path-like
/// constant-velocity prediction chain over 200 ms.
pub fn lead_groups(
    line: &ReferenceLine,
    lead: &LeadState,
    veh_len: f64,
    veh_width: f64,
) -> Vec<ObstacleGroup> {
    let heading = line.sample(lead.s).theta;
    let (x, y) = line.to_cartesian(lead.s, lead.l);
    let body = ObstacleGroup::new(ObstacleKind::Vehicle, footprint_circles(x, y, heading, veh_len, veh_width));

    let mut pred = Vec::new();
    let mut tau = 0.0;
    while tau <= 0.2 + 1e-9 {
        let s = line.wrap_station(lead.s + lead.v * tau);
        let (px, py) = line.to_cartesian(s, lead.l);
        let h = line.sample(s).theta;
        pred.extend(footprint_circles(px, py, h, veh_len, veh_width));
        tau += 0.05;
    }
    vec![body, ObstacleGroup::new(ObstacleKind::PredictionSample, pred)]
}

#[derive(Debug, Clone, Copy)]
struct EgoState {
    s: f64,
    l: f64,
    x: f64,
    y: f64,
    psi: f64,
    v: f64,
}

/// Interpolated trajectory state at a path position.
fn traj_at(traj: &Trajectory, pos: f64) -> (f64, f64, f64, f64) {
    let n = traj.len();
    let pos = pos.clamp(0.0, traj.s[n - 1]);
    let i = match traj.s.partition_point(|&s| s <= pos) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    let t = ((pos - traj.s[i]) / (traj.s[i + 1] - traj.s[i])).clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| a + (b - a) * t;
    let psi = raceplan_core::math::angle_lerp(traj.psi[i], traj.psi[i + 1], t);
    (lerp(traj.x[i], traj.x[i + 1]), lerp(traj.y[i], traj.y[i + 1]), psi, lerp(traj.v[i], traj.v[i + 1]))
}

fn interp_profile(traj: &Trajectory, pos: f64) -> (f64, f64) {
    let n = traj.len();
    let pos = pos.clamp(0.0, traj.s[n - 1]);
    let i = match traj.s.partition_point(|&s| s <= pos) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    let t = ((pos - traj.s[i]) / (traj.s[i + 1] - traj.s[i])).clamp(0.0, 1.0);
    (traj.v[i] + (traj.v[i + 1] - traj.v[i]) * t, traj.a[i])
}

/// Advance a path position by `dt` following the velocity profile; the
/// kinematic term lets the vehicle pull away from standstill.
fn advance(traj: &Trajectory, pos: f64, v_now: f64, dt: f64) -> (f64, f64) {
    let mut pos = pos;
    let mut v = v_now;
    let sub = 10;
    let h = dt / sub as f64;
    for _ in 0..sub {
        let (v_prof, a) = interp_profile(traj, pos);
        let v_kin = (v + a * h).max(0.0);
        v = v_prof.max(v_kin);
        pos += v * h;
    }
    pos = pos.min(*traj.s.last().unwrap());
    let (v_prof, _) = interp_profile(traj, pos);
    (pos, v.max(v_prof))
}

/// Brake-hold advance at max deceleration (degraded planning result).
fn advance_braking(traj: &Trajectory, pos: f64, v_now: f64, dt: f64, a_dec: f64) -> (f64, f64) {
    let mut pos = pos;
    let mut v = v_now;
    let sub = 10;
    let h = dt / sub as f64;
    for _ in 0..sub {
        v = (v - a_dec * h).max(0.0);
        pos += v * h;
    }
    pos = pos.min(*traj.s.last().unwrap());
    (pos, v)
}

pub struct SimResult {
    pub rows: Vec<TraceRow>,
    pub degraded_ticks: usize,
    /// Static-obstacle and ego-lead hits found by the 10 ms post sweep.
    pub collisions: usize,
    /// First time the ego is ahead of the lead, if ever.
    pub overtake_time: Option<f64>,
    /// Serialized snapshot CSVs, (tick time, contents).
    pub snapshots: Vec<(f64, String)>,
}

pub fn run(ctx: &SimContext) -> SimResult {
    let line = ctx.lattice.line();
    let lap = line.lap_length();
    let sc = &ctx.scenario;
    let ticks = (sc.duration / sc.period).ceil() as usize;

    let mut ego = {
        let s = line.wrap_station(sc.ego_s);
        let (x, y) = line.to_cartesian(s, sc.ego_l);
        EgoState { s, l: sc.ego_l, x, y, psi: line.sample(s).theta, v: sc.ego_v }
    };
    let mut traj: Option<(Trajectory, f64)> = None;
    let mut braking = false;

    let mut lead_state: Option<(f64, f64)> = sc.lead.as_ref().map(|l| (line.wrap_station(l.s), l.l));
    let lead_speed_at = |s: f64| -> f64 {
        let speeds = ctx.lead_speeds.as_ref().unwrap();
        let pts = line.points();
        let i = match pts.partition_point(|p| p.s <= s) {
            0 => 0,
            k => k - 1,
        };
        let j = (i + 1) % pts.len();
        let seg = if j == 0 { lap - pts[i].s } else { pts[j].s - pts[i].s };
        let t = ((s - pts[i].s) / seg).clamp(0.0, 1.0);
        speeds[i] + (speeds[j] - speeds[i]) * t
    };

    let mut zone_active = vec![false; sc.zones.len()];
    let mut prev_primitive: Option<Primitive> = None;
    let mut rows = Vec::with_capacity(ticks);
    let mut degraded_ticks = 0;
    let mut overtake_time = None;
    let mut snapshots = Vec::new();
    let snap_every = if sc.snapshot_period > 0.0 {
        (sc.snapshot_period / sc.period).round().max(1.0) as usize
    } else {
        0
    };

    for k in 0..ticks {
        let t = k as f64 * sc.period;

        let lead_now = lead_state.map(|(s, l)| LeadState { s, l, v: lead_speed_at(s) });

        // Zone triggers latch on.
        for (zi, zone) in sc.zones.iter().enumerate() {
            if zone_active[zi] {
                continue;
            }
            zone_active[zi] = match zone.trigger {
                ZoneTrigger::None => true,
                ZoneTrigger::Time(at) => t >= at,
                ZoneTrigger::Gap(d) => lead_now
                    .map(|lead| line.forward_gap(ego.s, lead.s) <= d)
                    .unwrap_or(false),
            };
        }
        let all_zones_active = zone_active.iter().all(|&a| a);

        // Predicted ego pose one calculation period ahead.
        let predicted = match (&traj, braking) {
            (Some((tr, pos)), false) => {
                let (p, v) = advance(tr, *pos, ego.v, sc.period);
                let (x, y, psi, _) = traj_at(tr, p);
                (x, y, psi, v, Some(p))
            }
            (Some((tr, pos)), true) => {
                let (p, v) =
                    advance_braking(tr, *pos, ego.v, sc.period, ctx.config.friction.a_lon_max_dec);
                let (x, y, psi, _) = traj_at(tr, p);
                (x, y, psi, v, Some(p))
            }
            (None, _) => (ego.x, ego.y, ego.psi, ego.v, None),
        };
        let (pred_s, pred_l) = line.to_frenet(predicted.0, predicted.1);

        // Obstacle snapshot for this cycle.
        let mut obstacles = ObstacleSet::empty();
        for &(x, y, r) in &ctx.obstacles {
            obstacles.push(ObstacleGroup::new(ObstacleKind::Static, [(x, y, r)]));
        }
        for (zi, zone) in sc.zones.iter().enumerate() {
            if zone_active[zi] {
                obstacles.push(zone_chain(
                    line,
                    zone.s_start,
                    zone.s_end,
                    zone.side,
                    ctx.params.graph.lat_sep / 2.0,
                    ctx.config.veh_radius,
                    1.5,
                ));
            }
        }
        let lead_for_request = lead_now.filter(|lead| {
            line.forward_gap(pred_s, lead.s) <= ctx.params.graph.min_horizon
        });
        if let Some(lead) = &lead_for_request {
            for g in lead_groups(line, lead, ctx.params.veh_len, ctx.params.graph.veh_width) {
                obstacles.push(g);
            }
        }

        let request = PlanRequest {
            ego_s: pred_s,
            ego_l: pred_l,
            ego_v: predicted.3,
            ego_theta: Some(predicted.2),
            obstacles,
            lead: lead_for_request,
            horizon: ctx.params.graph.min_horizon,
        };

        let t0 = Instant::now();
        let plan = plan_cycle(&ctx.lattice, &request, &ctx.config);
        let cycle_ms = t0.elapsed().as_secs_f64() * 1e3;

        let (set, n_candidates) = match plan {
            Ok(set) => {
                let n = set.candidates.values().map(Vec::len).sum();
                (set, n)
            }
            Err(PlanError::NoFeasibleStart) | Err(PlanError::OutsideTrack { .. }) => {
                (ActionSet::default(), 0)
            }
        };
        let chosen = choose_primitive(&set, all_zones_active, prev_primitive);
        prev_primitive = chosen;

        rows.push(TraceRow {
            t,
            ego_s: ego.s,
            ego_l: ego.l,
            ego_v: ego.v,
            primitive: chosen.map(|p| p.as_str().to_string()).unwrap_or_else(|| "brake".into()),
            n_candidates,
            cycle_ms,
            lead_s: lead_now.map(|l| l.s),
            lead_l: lead_now.map(|l| l.l),
        });

        // Move the ego to the predicted pose; adopt the new trajectory when
        // planning succeeded, otherwise brake along the previous one.
        match chosen {
            Some(p) => {
                let new_traj = set.candidates[&p][0].clone();
                if snap_every > 0 && k % snap_every == 0 {
                    snapshots.push((t, trajectory_csv(&new_traj)));
                }
                ego = EgoState {
                    s: line.wrap_station(pred_s),
                    l: pred_l,
                    x: predicted.0,
                    y: predicted.1,
                    psi: predicted.2,
                    v: predicted.3,
                };
                traj = Some((new_traj, 0.0));
                braking = false;
            }
            None => {
                degraded_ticks += 1;
                ego = EgoState {
                    s: line.wrap_station(pred_s),
                    l: pred_l,
                    x: predicted.0,
                    y: predicted.1,
                    psi: predicted.2,
                    v: if braking || traj.is_none() {
                        predicted.3
                    } else {
                        // First degraded tick: the prediction still followed
                        // the old profile; cap it by max braking.
                        (ego.v - ctx.config.friction.a_lon_max_dec * sc.period).max(0.0)
                    },
                };
                if let (Some(p), Some((_, pos))) = (predicted.4, &mut traj) {
                    *pos = p;
                }
                braking = true;
            }
        }

        // Lead motion along the race line, shifting into an active zone.
        if let Some((s, l)) = &mut lead_state {
            let mut v = lead_speed_at(*s);
            let sub = 10;
            let h = sc.period / sub as f64;
            for _ in 0..sub {
                *s = line.wrap_station(*s + v * h);
                v = lead_speed_at(*s);
            }
            let mut l_target = 0.0;
            for (zi, zone) in sc.zones.iter().enumerate() {
                if !zone_active[zi] {
                    continue;
                }
                let span = line.forward_gap(zone.s_start, zone.s_end);
                let into = line.forward_gap(zone.s_start - 30.0, *s);
                if into <= span + 30.0 {
                    let w = match zone.side {
                        Side::Left => line.sample(*s).w_left,
                        Side::Right => -line.sample(*s).w_right,
                    };
                    l_target = w / 2.0;
                }
            }
            let max_step = 1.5 * sc.period;
            *l += (l_target - *l).clamp(-max_step, max_step);
        }

        // First moment the ego is ahead of the lead.
        if overtake_time.is_none() {
            if let Some((ls, _)) = lead_state {
                let ahead = line.forward_gap(ls, ego.s);
                if ahead > 2.0 && ahead < lap / 2.0 {
                    overtake_time = Some(t);
                }
            }
        }
    }

    let collisions = collision_sweep(ctx, &rows);
    SimResult { rows, degraded_ticks, collisions, overtake_time, snapshots }
}

/// Prefer any overtake primitive when the regulation allows it, keeping the
/// side already being driven to avoid flapping mid-maneuver; ties between
/// fresh candidates resolve by path cost.
fn choose_primitive(
    set: &ActionSet,
    overtaking_allowed: bool,
    prev: Option<Primitive>,
) -> Option<Primitive> {
    if overtaking_allowed {
        if let Some(p) = prev.filter(|&p| p != Primitive::Straight && set.get(p).is_some()) {
            return Some(p);
        }
        let mut best: Option<(f64, Primitive)> = None;
        for p in [Primitive::Left, Primitive::Right] {
            if let Some(cands) = set.get(p) {
                let cost = cands[0].path_cost;
                if best.map(|(c, _)| cost < c).unwrap_or(true) {
                    best = Some((cost, p));
                }
            }
        }
        if let Some((_, p)) = best {
            return Some(p);
        }
    }
    set.get(Primitive::Straight).map(|_| Primitive::Straight)
}

/// 10 ms interpolation sweep over the trace: the ego center must stay out
/// of every static circle and at least two meters from the lead center.
fn collision_sweep(ctx: &SimContext, rows: &[TraceRow]) -> usize {
    let line = ctx.lattice.line();
    let mut hits = 0;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let steps = ((b.t - a.t) / 0.01).round().max(1.0) as usize;
        let ds_ego = line.forward_gap(a.ego_s, b.ego_s);
        for j in 0..steps {
            let f = j as f64 / steps as f64;
            let s = line.wrap_station(a.ego_s + ds_ego * f);
            let l = a.ego_l + (b.ego_l - a.ego_l) * f;
            let (x, y) = line.to_cartesian(s, l);
            for &(ox, oy, or) in &ctx.obstacles {
                if (x - ox).hypot(y - oy) < or {
                    hits += 1;
                }
            }
            if let (Some(ls0), Some(ls1), Some(ll0), Some(ll1)) =
                (a.lead_s, b.lead_s, a.lead_l, b.lead_l)
            {
                let ds_lead = line.forward_gap(ls0, ls1);
                let lead_s = line.wrap_station(ls0 + ds_lead * f);
                let lead_l = ll0 + (ll1 - ll0) * f;
                let (lx, ly) = line.to_cartesian(lead_s, lead_l);
                if (x - lx).hypot(y - ly) < 2.0 {
                    hits += 1;
                }
            }
        }
    }
    hits
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("s_m,x_m,y_m,psi_rad,kappa_radpm,v_mps,a_mps2\n");
    for k in 0..traj.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            traj.s[k], traj.x[k], traj.y[k], traj.psi[k], traj.kappa[k], traj.v[k], traj.a[k]
        );
    }
    out
}

pub fn write_outputs(ctx: &SimContext, result: &SimResult, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("trace.csv"), write_trace(&result.rows))?;

    let scene = svg::Scene {
        track: &ctx.track,
        raceline: ctx.lattice.line(),
        obstacles: &ctx.obstacles,
        zones: &ctx.scenario.zones,
        trace: &result.rows,
        plot_period: ctx.scenario.plot_period,
    };
    std::fs::write(out_dir.join("overview.svg"), svg::render(&scene))?;

    if !result.snapshots.is_empty() {
        let dir = out_dir.join("snapshots");
        std::fs::create_dir_all(&dir)?;
        for (t, csv) in &result.snapshots {
            std::fs::write(dir.join(format!("t_{:06}.csv", (t * 1e3).round() as u64)), csv)?;
        }
    }

    std::fs::write(out_dir.join("summary.txt"), summary_text(ctx, result))?;
    Ok(())
}

pub fn summary_text(ctx: &SimContext, result: &SimResult) -> String {
    let times: Vec<f64> = result.rows.iter().map(|r| r.cycle_ms).collect();
    let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
    let mut sorted = times.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |p: f64| -> f64 {
        if sorted.is_empty() {
            return 0.0;
        }
        sorted[((sorted.len() - 1) as f64 * p).round() as usize]
    };
    let mut out = String::new();
    let _ = writeln!(out, "ticks: {}", result.rows.len());
    let _ = writeln!(out, "sim_time_s: {}", ctx.scenario.duration);
    let _ = writeln!(out, "degraded_ticks: {}", result.degraded_ticks);
    let _ = writeln!(out, "collisions: {}", result.collisions);
    if let Some(t) = result.overtake_time {
        let _ = writeln!(out, "overtake_time_s: {t:.1}");
    }
    let _ = writeln!(out, "cycle_ms_mean: {mean:.2}");
    let _ = writeln!(out, "cycle_ms_p50: {:.2}", pct(0.5));
    let _ = writeln!(out, "cycle_ms_p99: {:.2}", pct(0.99));
    let _ = writeln!(out, "update_rate_hz: {:.1}", 1e3 / mean.max(1e-9));
    out
}
