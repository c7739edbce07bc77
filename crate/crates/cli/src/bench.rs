//! Planning-cycle throughput measurement over a seeded random workload.

use std::fmt::Write as _;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use raceplan_core::collision::{ObstacleGroup, ObstacleKind, ObstacleSet};
use raceplan_core::lattice::Lattice;
use raceplan_core::planner::{plan_cycle, PlanRequest, PlannerConfig};

pub struct BenchReport {
    pub cycles: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
    /// Mean cycle time grouped by obstacle count 0..=3.
    pub by_obstacles: [f64; 4],
    pub degraded: usize,
}

pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted[((sorted.len() - 1) as f64 * p).round() as usize]
}

/// Run `cycles` planning cycles at seeded random ego positions with 0..=3
/// random static obstacles ahead.
pub fn run(lat: &Lattice, config: &PlannerConfig, cycles: usize, seed: u64) -> BenchReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let line = lat.line();
    let lap = line.lap_length();

    let mut times = Vec::with_capacity(cycles);
    let mut sums = [0.0f64; 4];
    let mut counts = [0usize; 4];
    let mut degraded = 0;

    for _ in 0..cycles {
        let ego_s = rng.gen::<f64>() * lap;
        let at = line.sample(ego_s);
        let margin = (at.w_left.min(at.w_right) - lat.params().veh_width / 2.0).max(0.1);
        let ego_l = (rng.gen::<f64>() - 0.5) * 2.0 * margin.min(1.5);
        let ego_v = at.v_ref * (0.4 + 0.4 * rng.gen::<f64>());

        let n_obs = rng.gen_range(0..=3usize);
        let mut obstacles = ObstacleSet::empty();
        for _ in 0..n_obs {
            let s = line.wrap_station(ego_s + 40.0 + rng.gen::<f64>() * 140.0);
            let w = line.sample(s);
            let l = (rng.gen::<f64>() - 0.5) * (w.w_left + w.w_right - 3.0).max(0.5);
            let (x, y) = line.to_cartesian(s, l);
            let r = 0.3 + rng.gen::<f64>() * 0.9;
            obstacles.push(ObstacleGroup::new(ObstacleKind::Static, [(x, y, r)]));
        }

        let request = PlanRequest {
            ego_s,
            ego_l,
            ego_v,
            ego_theta: None,
            obstacles,
            lead: None,
            horizon: lat.params().min_horizon,
        };
        let t0 = Instant::now();
        let result = plan_cycle(lat, &request, config);
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        times.push(ms);
        sums[n_obs] += ms;
        counts[n_obs] += 1;
        match result {
            Ok(set) if !set.is_empty() => {}
            _ => degraded += 1,
        }
    }

    let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
    let mut sorted = times;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut by_obstacles = [0.0; 4];
    for i in 0..4 {
        by_obstacles[i] = if counts[i] > 0 { sums[i] / counts[i] as f64 } else { 0.0 };
    }
    BenchReport {
        cycles,
        mean_ms: mean,
        p50_ms: percentile(&sorted, 0.5),
        p99_ms: percentile(&sorted, 0.99),
        by_obstacles,
        degraded,
    }
}

pub fn report_text(r: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cycles: {}", r.cycles);
    let _ = writeln!(out, "mean_ms: {:.3}", r.mean_ms);
    let _ = writeln!(out, "p50_ms: {:.3}", r.p50_ms);
    let _ = writeln!(out, "p99_ms: {:.3}", r.p99_ms);
    let _ = writeln!(out, "update_rate_hz: {:.1}", 1e3 / r.mean_ms.max(1e-9));
    for (i, ms) in r.by_obstacles.iter().enumerate() {
        let _ = writeln!(out, "mean_ms_{i}_obstacles: {ms:.3}");
    }
    let _ = writeln!(out, "degraded_cycles: {}", r.degraded);
    out
}
