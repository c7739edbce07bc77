use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use raceplan::config::{self, ObstacleSpec};
use raceplan::{bench, io, sim, track, CliError};
use raceplan_core::collision::{ObstacleGroup, ObstacleKind, ObstacleSet};
use raceplan_core::lattice::Lattice;
use raceplan_core::planner::{plan_cycle, PlanError, PlanRequest, PlannerConfig};
use raceplan_core::velocity::FrictionParams;

/// Graph-based local trajectory planner for race tracks: offline lattice
/// construction, per-cycle action-set planning, closed-loop scenario
/// simulation and throughput benchmarks.
#[derive(Parser)]
#[command(name = "raceplan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the offline graph for a track and persist it.
    BuildGraph {
        /// Track file (reference-line CSV) providing the bound geometry.
        #[arg(long)]
        track: PathBuf,
        /// Race line file (reference-line CSV) the lattice is built on.
        #[arg(long)]
        raceline: PathBuf,
        /// Graph parameter file; built-in defaults when omitted.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Output graph file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one planning cycle and dump the action set.
    Plan {
        /// Graph file produced by build-graph.
        #[arg(long)]
        graph: PathBuf,
        /// Ego state as `s,l,v` (m, m, m/s).
        #[arg(long)]
        ego: String,
        /// Obstacle file ([obstacle] / [lead] / [zone] sections).
        #[arg(long)]
        obstacles: Option<PathBuf>,
        /// Output directory for per-primitive trajectory CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a closed-loop scenario simulation.
    Simulate {
        /// Scenario file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (trace.csv, overview.svg, summary.txt).
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure planning-cycle timing over a seeded random workload.
    Bench {
        /// Graph file produced by build-graph.
        #[arg(long)]
        graph: PathBuf,
        /// Number of planning cycles.
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
        /// Workload seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate the synthetic airfield track and a default parameter file.
    GenTrack {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Straight length (m).
        #[arg(long, default_value_t = 500.0)]
        straight: f64,
        /// Turn radius (m).
        #[arg(long, default_value_t = 30.0)]
        radius: f64,
        /// Track width on the straights (m).
        #[arg(long, default_value_t = 20.0)]
        width: f64,
        /// Track width in the turns (m).
        #[arg(long, default_value_t = 5.0)]
        curve_width: f64,
        /// Race-line speed cap (km/h).
        #[arg(long, default_value_t = 216.0)]
        v_cap_kmh: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildGraph { track, raceline, params, out } => cmd_build_graph(&track, &raceline, params.as_deref(), &out),
        Command::Plan { graph, ego, obstacles, out } => cmd_plan(&graph, &ego, obstacles.as_deref(), &out),
        Command::Simulate { scenario, out } => cmd_simulate(&scenario, &out),
        Command::Bench { graph, cycles, seed } => cmd_bench(&graph, cycles, seed),
        Command::GenTrack { out, straight, radius, width, curve_width, v_cap_kmh } => {
            cmd_gen_track(&out, straight, radius, width, curve_width, v_cap_kmh)
        }
    }
}

fn cmd_build_graph(
    track: &Path,
    raceline: &Path,
    params: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    // The track file supplies the bound geometry for plots and validation;
    // it may be the same file as the race line.
    let track_line = io::load_reference_line(track)?;
    let (raceline_line, raceline_bytes) = io::load_raceline_with_bytes(raceline)?;
    let params = io::load_params(params)?;

    let t0 = Instant::now();
    let lat = Lattice::build(raceline_line, params.graph, raceplan_core::fnv1a64(&raceline_bytes))
        .map_err(|e| CliError::input(format!("graph build failed: {e}")))?;
    let build_s = t0.elapsed().as_secs_f64();

    io::save_graph(&lat, out)?;
    println!("track: {} (lap {:.1} m)", track.display(), track_line.lap_length());
    println!("raceline: {} (lap {:.1} m)", raceline.display(), lat.line().lap_length());
    println!(
        "graph: {} layers, {} nodes, {} edges, built in {:.2} s",
        lat.layer_count(),
        lat.nodes().len(),
        lat.edges().len(),
        build_s
    );
    println!("written: {}", out.display());
    Ok(())
}

fn parse_ego(text: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::input("--ego expects `s,l,v`"));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| CliError::input(format!("--ego: `{p}` is not a number")));
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

fn cmd_plan(graph: &Path, ego: &str, obstacles: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let lat = io::load_graph(graph)?;
    let (ego_s, ego_l, ego_v) = parse_ego(ego)?;
    let parsed = match obstacles {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            config::parse_obstacle_file(&text)?
        }
        None => Default::default(),
    };

    let line = lat.line();
    let config = PlannerConfig::default();
    let mut set = ObstacleSet::empty();
    for spec in &parsed.obstacles {
        let (x, y, r) = match *spec {
            ObstacleSpec::Cartesian { x, y, r } => (x, y, r),
            ObstacleSpec::Frenet { s, l, r } => {
                let (x, y) = line.to_cartesian(s, l);
                (x, y, r)
            }
        };
        set.push(ObstacleGroup::new(ObstacleKind::Static, [(x, y, r)]));
    }
    // Zones in an obstacle file are always active.
    for zone in &parsed.zones {
        set.push(raceplan_core::collision::zone_chain(
            line,
            zone.s_start,
            zone.s_end,
            zone.side,
            lat.params().lat_sep / 2.0,
            config.veh_radius,
            1.5,
        ));
    }
    let lead = parsed.lead.map(|l| raceplan_core::planner::LeadState {
        s: line.wrap_station(l.s),
        l: l.l,
        v: l.v_cap.min(line.sample(l.s).v_ref),
    });
    if let Some(lead) = &lead {
        for g in sim::lead_groups(line, lead, 4.8, lat.params().veh_width) {
            set.push(g);
        }
    }

    let request = PlanRequest {
        ego_s,
        ego_l,
        ego_v,
        ego_theta: None,
        obstacles: set,
        lead,
        horizon: lat.params().min_horizon,
    };
    let t0 = Instant::now();
    let result = plan_cycle(&lat, &request, &config);
    let cycle_ms = t0.elapsed().as_secs_f64() * 1e3;

    let action_set = match result {
        Ok(set) => set,
        Err(e @ PlanError::OutsideTrack { .. }) => return Err(CliError::input(e.to_string())),
        Err(PlanError::NoFeasibleStart) => {
            return Err(CliError::degraded("no feasible start node (all first-layer nodes blocked)"))
        }
    };

    std::fs::create_dir_all(out)?;
    for (primitive, trajs) in &action_set.candidates {
        let traj = &trajs[0];
        let path = out.join(format!("{}.csv", primitive.as_str()));
        std::fs::write(&path, sim::trajectory_csv(traj))?;
        let v_min = traj.v.iter().cloned().fold(f64::INFINITY, f64::min);
        let v_max = traj.v.iter().cloned().fold(0.0, f64::max);
        println!(
            "{}: cost {:.2}, length {:.1} m, v {:.1}..{:.1} m/s, cycle {:.2} ms -> {}",
            primitive.as_str(),
            traj.path_cost,
            traj.s.last().unwrap(),
            v_min,
            v_max,
            cycle_ms,
            path.display()
        );
    }
    if action_set.is_empty() {
        return Err(CliError::degraded("empty action set (no primitive feasible)"));
    }
    Ok(())
}

fn cmd_simulate(scenario_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(scenario_path)
        .map_err(|e| CliError::input(format!("{}: {e}", scenario_path.display())))?;
    let base = scenario_path.parent().unwrap_or(Path::new("."));
    let scenario = config::parse_scenario(&text, base)?;
    let ctx = sim::prepare(scenario)?;
    let result = sim::run(&ctx);
    sim::write_outputs(&ctx, &result, out)?;
    print!("{}", sim::summary_text(&ctx, &result));
    println!("outputs: {}", out.display());
    if result.collisions > 0 {
        return Err(CliError::degraded(format!("{} collision samples in post check", result.collisions)));
    }
    Ok(())
}

fn cmd_bench(graph: &Path, cycles: usize, seed: u64) -> Result<(), CliError> {
    let lat = io::load_graph(graph)?;
    let config = PlannerConfig {
        friction: FrictionParams::default(),
        ..PlannerConfig::default()
    };
    let report = bench::run(&lat, &config, cycles, seed);
    print!("{}", bench::report_text(&report));
    Ok(())
}

fn cmd_gen_track(
    out: &Path,
    straight: f64,
    radius: f64,
    width: f64,
    curve_width: f64,
    v_cap_kmh: f64,
) -> Result<(), CliError> {
    if straight <= 0.0 || radius <= 0.0 || width <= 0.0 || curve_width <= 0.0 {
        return Err(CliError::input("track dimensions must be positive"));
    }
    let spec = track::TrackSpec {
        straight_len: straight,
        turn_radius: radius,
        width_straight: width,
        width_curve: curve_width,
        v_cap: v_cap_kmh / 3.6,
        ..track::TrackSpec::default()
    };
    std::fs::create_dir_all(out)?;
    let csv_path = out.join("airfield.csv");
    std::fs::write(&csv_path, track::airfield_csv(&spec))?;
    let params_path = out.join("graph.cfg");
    std::fs::write(&params_path, config::default_params_text())?;
    println!("track: {} (lap {:.1} m)", csv_path.display(), spec.lap_length());
    println!("params: {}", params_path.display());
    Ok(())
}
