//! Line-oriented key-value configuration with `[section]` headers.
//!
//! The grammar serves three file kinds: graph-parameter files (flat keys,
//! no sections), obstacle files (`[obstacle]` / `[lead]` / `[zone]`
//! sections) and full scenario files. `#` starts a comment, blank lines are
//! skipped, keys and values are trimmed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use raceplan_core::lattice::GraphParams;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct Section {
    pub name: String,
    pub line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::input(format!("line {line}: `{key}` is not a number"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64(key)?.ok_or_else(|| {
            CliError::input(format!("section [{}] (line {}): missing key `{key}`", self.name, self.line))
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Parse into sections; keys before any header land in a section named "".
pub fn parse_sections(text: &str) -> Result<Vec<Section>, CliError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut current = Section { name: String::new(), line: 0, entries: BTreeMap::new() };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::input(format!("line {line_no}: unterminated section header")))?;
            if !current.entries.is_empty() || !current.name.is_empty() {
                sections.push(current);
            }
            current = Section { name: name.trim().to_string(), line: line_no, entries: BTreeMap::new() };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("line {line_no}: expected `key = value`")))?;
        current.entries.insert(key.trim().to_string(), (value.trim().to_string(), line_no));
    }
    if !current.entries.is_empty() || !current.name.is_empty() {
        sections.push(current);
    }
    Ok(sections)
}

/// Graph parameters plus the vehicle length the planner needs for its
/// collision radius; all keys optional over the defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamsFile {
    pub graph: GraphParams,
    pub veh_len: f64,
}

impl Default for ParamsFile {
    fn default() -> Self {
        ParamsFile { graph: GraphParams::default(), veh_len: 4.8 }
    }
}

pub fn parse_params(text: &str) -> Result<ParamsFile, CliError> {
    let sections = parse_sections(text)?;
    let mut out = ParamsFile::default();
    for section in &sections {
        if !section.name.is_empty() {
            return Err(CliError::input(format!(
                "params file does not take sections (found [{}])",
                section.name
            )));
        }
        let g = &mut out.graph;
        for key in section.keys().map(str::to_string).collect::<Vec<_>>() {
            let v = section.require_f64(&key)?;
            match key.as_str() {
                "lat_sep" => g.lat_sep = v,
                "long_sep_straight" => g.long_sep_straight = v,
                "long_sep_curve" => g.long_sep_curve = v,
                "kappa_curve_thresh" => g.kappa_curve_thresh = v,
                "min_horizon" => g.min_horizon = v,
                "w_len" => g.w_len = v,
                "w_kappa_avg" => g.w_kappa_avg = v,
                "w_kappa_range" => g.w_kappa_range = v,
                "w_rl" => g.w_rl = v,
                "lat_ratio_max" => g.lat_ratio_max = v,
                "r_min" => g.r_min = v,
                "veh_width" => g.veh_width = v,
                "veh_len" => out.veh_len = v,
                other => return Err(CliError::input(format!("unknown parameter `{other}`"))),
            }
        }
    }
    Ok(out)
}

pub fn default_params_text() -> String {
    let p = GraphParams::default();
    format!(
        "# Offline graph parameters\n\
         lat_sep = {}\n\
         long_sep_straight = {}\n\
         long_sep_curve = {}\n\
         kappa_curve_thresh = {}\n\
         min_horizon = {}\n\
         w_len = {}\n\
         w_kappa_avg = {}\n\
         w_kappa_range = {}\n\
         w_rl = {}\n\
         lat_ratio_max = {}\n\
         r_min = {}\n\
         veh_width = {}\n\
         veh_len = 4.8\n",
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
        p.veh_width
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZoneTrigger {
    /// Active from the start.
    None,
    /// Activates at simulation time (s).
    Time(f64),
    /// Activates once the ego closes to this forward gap behind the lead (m).
    Gap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoneSpec {
    pub s_start: f64,
    pub s_end: f64,
    pub side: raceplan_core::collision::Side,
    pub trigger: ZoneTrigger,
}

/// Static obstacle, either Cartesian or Frenét depending on the keys given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleSpec {
    Cartesian { x: f64, y: f64, r: f64 },
    Frenet { s: f64, l: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadSpec {
    pub s: f64,
    pub l: f64,
    pub v_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub track_file: PathBuf,
    pub raceline_file: PathBuf,
    pub friction_file: Option<PathBuf>,
    pub graph_file: Option<PathBuf>,
    pub params_file: Option<PathBuf>,
    pub ego_s: f64,
    pub ego_l: f64,
    pub ego_v: f64,
    pub ego_v_cap: f64,
    pub lead: Option<LeadSpec>,
    pub obstacles: Vec<ObstacleSpec>,
    pub zones: Vec<ZoneSpec>,
    pub duration: f64,
    pub period: f64,
    pub plot_period: f64,
    pub snapshot_period: f64,
}

fn speed_cap(section: &Section, default_mps: f64) -> Result<f64, CliError> {
    if let Some(kmh) = section.f64("v_cap_kmh")? {
        return Ok(kmh / 3.6);
    }
    Ok(section.f64("v_cap")?.unwrap_or(default_mps))
}

fn parse_obstacle(section: &Section) -> Result<ObstacleSpec, CliError> {
    let r = section.require_f64("r")?;
    if r <= 0.0 {
        return Err(CliError::input(format!(
            "section [obstacle] (line {}): radius must be positive",
            section.line
        )));
    }
    match (section.f64("x")?, section.f64("y")?) {
        (Some(x), Some(y)) => Ok(ObstacleSpec::Cartesian { x, y, r }),
        _ => Ok(ObstacleSpec::Frenet {
            s: section.require_f64("s")?,
            l: section.f64("l")?.unwrap_or(0.0),
            r,
        }),
    }
}

fn parse_zone(section: &Section) -> Result<ZoneSpec, CliError> {
    use raceplan_core::collision::Side;
    let side = match section.get("side") {
        Some("left") => Side::Left,
        Some("right") => Side::Right,
        other => {
            return Err(CliError::input(format!(
                "section [zone] (line {}): side must be `left` or `right`, got {other:?}",
                section.line
            )))
        }
    };
    let trigger = match section.get("trigger") {
        None | Some("none") => ZoneTrigger::None,
        Some(t) => {
            let (kind, value) = t.split_once(':').ok_or_else(|| {
                CliError::input(format!(
                    "section [zone] (line {}): trigger must be `none`, `time:T` or `gap:D`",
                    section.line
                ))
            })?;
            let v: f64 = value.trim().parse().map_err(|_| {
                CliError::input(format!("section [zone] (line {}): bad trigger value", section.line))
            })?;
            match kind.trim() {
                "time" => ZoneTrigger::Time(v),
                "gap" => ZoneTrigger::Gap(v),
                other => {
                    return Err(CliError::input(format!(
                        "section [zone] (line {}): unknown trigger kind `{other}`",
                        section.line
                    )))
                }
            }
        }
    };
    Ok(ZoneSpec {
        s_start: section.require_f64("s_start")?,
        s_end: section.require_f64("s_end")?,
        side,
        trigger,
    })
}

/// Obstacle-file contents for the `plan` subcommand: the dynamic parts of a
/// scenario without the simulation loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObstacleFile {
    pub lead: Option<LeadSpec>,
    pub obstacles: Vec<ObstacleSpec>,
    pub zones: Vec<ZoneSpec>,
}

pub fn parse_obstacle_file(text: &str) -> Result<ObstacleFile, CliError> {
    let mut out = ObstacleFile::default();
    for section in parse_sections(text)? {
        match section.name.as_str() {
            "obstacle" => out.obstacles.push(parse_obstacle(&section)?),
            "zone" => out.zones.push(parse_zone(&section)?),
            "lead" => {
                out.lead = Some(LeadSpec {
                    s: section.require_f64("s")?,
                    l: section.f64("l")?.unwrap_or(0.0),
                    v_cap: speed_cap(&section, 60.0)?,
                })
            }
            other => return Err(CliError::input(format!("unknown section [{other}]"))),
        }
    }
    Ok(out)
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario, CliError> {
    let mut track_file = None;
    let mut raceline_file = None;
    let mut friction_file = None;
    let mut graph_file = None;
    let mut params_file = None;
    let mut ego: Option<(f64, f64, f64, f64)> = None;
    let mut lead = None;
    let mut obstacles = Vec::new();
    let mut zones = Vec::new();
    let mut duration = 30.0;
    let mut period = 0.1;
    let mut plot_period = 1.0;
    let mut snapshot_period = 0.0;

    let resolve = |p: &str| -> PathBuf {
        let path = PathBuf::from(p);
        if path.is_absolute() {
            path
        } else {
            base_dir.join(path)
        }
    };

    for section in parse_sections(text)? {
        match section.name.as_str() {
            "track" => {
                track_file = section.get("file").map(resolve);
                raceline_file = section.get("raceline").map(resolve);
                friction_file = section.get("friction").map(resolve);
                graph_file = section.get("graph").map(resolve);
                params_file = section.get("params").map(resolve);
            }
            "ego" => {
                ego = Some((
                    section.f64("s")?.unwrap_or(0.0),
                    section.f64("l")?.unwrap_or(0.0),
                    section.f64("v")?.unwrap_or(0.0),
                    speed_cap(&section, 60.0)?,
                ));
            }
            "lead" => {
                lead = Some(LeadSpec {
                    s: section.require_f64("s")?,
                    l: section.f64("l")?.unwrap_or(0.0),
                    v_cap: speed_cap(&section, 60.0)?,
                });
            }
            "obstacle" => obstacles.push(parse_obstacle(&section)?),
            "zone" => zones.push(parse_zone(&section)?),
            "sim" => {
                duration = section.f64("duration")?.unwrap_or(duration);
                period = section.f64("period")?.unwrap_or(period);
                plot_period = section.f64("plot_period")?.unwrap_or(plot_period);
                snapshot_period = section.f64("snapshot_period")?.unwrap_or(snapshot_period);
            }
            "" => return Err(CliError::input("scenario keys must live inside a section")),
            other => return Err(CliError::input(format!("unknown section [{other}]"))),
        }
    }

    let track_file = track_file.ok_or_else(|| CliError::input("scenario is missing [track] file"))?;
    let (ego_s, ego_l, ego_v, ego_v_cap) =
        ego.ok_or_else(|| CliError::input("scenario is missing the [ego] section"))?;
    if duration <= 0.0 || period <= 0.0 {
        return Err(CliError::input("simulation duration and period must be positive"));
    }
    Ok(Scenario {
        raceline_file: raceline_file.unwrap_or_else(|| track_file.clone()),
        track_file,
        friction_file,
        graph_file,
        params_file,
        ego_s,
        ego_l,
        ego_v,
        ego_v_cap,
        lead,
        obstacles,
        zones,
        duration,
        period,
        plot_period,
        snapshot_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip_defaults() {
        let parsed = parse_params(&default_params_text()).unwrap();
        assert_eq!(parsed, ParamsFile::default());
    }

    #[test]
    fn params_reject_unknown_key() {
        assert!(parse_params("lat_sep = 0.5\nbogus = 1\n").is_err());
    }

    #[test]
    fn scenario_parses_with_all_sections() {
        let text = "\
[track]
file = tracks/airfield.csv

[ego]
s = 0
l = 0
v = 15
v_cap_kmh = 150

[lead]
s = 120
v_cap_kmh = 75

[obstacle]
s = 150
l = 2.0
r = 1.0

[obstacle]
x = 10.0
y = -3.0
r = 0.5

[zone]
s_start = 200
s_end = 450
side = left
trigger = time:12

[sim]
duration = 40
period = 0.1
";
        let sc = parse_scenario(text, Path::new("/base")).unwrap();
        assert_eq!(sc.track_file, PathBuf::from("/base/tracks/airfield.csv"));
        assert_eq!(sc.raceline_file, sc.track_file);
        assert!((sc.ego_v_cap - 150.0 / 3.6).abs() < 1e-12);
        assert_eq!(sc.obstacles.len(), 2);
        assert_eq!(sc.zones.len(), 1);
        assert_eq!(sc.zones[0].trigger, ZoneTrigger::Time(12.0));
        let lead = sc.lead.unwrap();
        assert!((lead.v_cap - 75.0 / 3.6).abs() < 1e-12);
        assert_eq!(sc.duration, 40.0);
    }

    #[test]
    fn zone_needs_valid_side_and_trigger() {
        let bad_side = "[track]\nfile = t.csv\n[ego]\ns=0\n[zone]\ns_start=0\ns_end=10\nside=up\n";
        assert!(parse_scenario(bad_side, Path::new(".")).is_err());
        let bad_trig =
            "[track]\nfile = t.csv\n[ego]\ns=0\n[zone]\ns_start=0\ns_end=10\nside=left\ntrigger=when:5\n";
        assert!(parse_scenario(bad_trig, Path::new(".")).is_err());
    }

    #[test]
    fn obstacle_file_grammar() {
        let text = "[obstacle]\ns = 50\nl = 1\nr = 0.8\n\n[lead]\ns = 90\nv_cap = 18\n";
        let parsed = parse_obstacle_file(text).unwrap();
        assert_eq!(parsed.obstacles.len(), 1);
        assert_eq!(parsed.lead.unwrap().v_cap, 18.0);
    }
}
