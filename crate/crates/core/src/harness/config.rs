//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[scenario]`, `[graph]`,
//! `[guidance]`, `[dynamics]` and `[perturbations]`. Every problem is reported
//! as a [`Error::Config`] naming the field and, when it can be located, the
//! line.
//!
//! ```toml
//! [scenario]
//! agents = 2
//! t_max = 5.0
//! init = "explicit"
//! positions = [[0.0, 0.0], [2.0, 0.0]]
//!
//! [graph]
//! provider = "dynamic-priority"
//! neighbors = 1
//!
//! [guidance]
//! epsilon = 1.0
//! ```

use std::collections::BTreeMap;

use toml::{Table, Value};

use crate::dynamics::{Dynamics, HeavisideMode, Integrator, NadfParams, UavParams, UgvParams};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::guidance::{GuidanceParams, Weights};
use crate::neighbors::GraphProvider;
use crate::scenario::{InitRule, LeaderMotion, LeaderScript, ScenarioConfig, Termination};

const SECTIONS: [&str; 5] = ["scenario", "graph", "guidance", "dynamics", "perturbations"];

fn allowed(section: &str) -> &'static [&'static str] {
    match section {
        "scenario" => &[
            "agents", "dimension", "dt", "t_max", "delta", "seed", "init", "width", "height",
            "radius", "positions", "headings", "termination", "hold",
        ],
        "graph" => &["provider", "neighbors", "edges"],
        "guidance" => &["epsilon", "weight", "weights", "cruise"],
        "dynamics" => &[
            "kind", "integrator", "damping", "gain", "guidance_floor", "heaviside", "k1", "k2",
            "wheel_radius", "axle_distance", "phi_limit", "mass", "gravity", "control_gain",
            "flight_gain", "v_floor", "initial_speed",
        ],
        "perturbations" => &[
            "delay", "saturation", "drift", "leader", "leader_motion", "leader_velocity",
            "leader_speed", "leader_amplitude", "leader_omega",
        ],
        _ => &[],
    }
}

/// A parsed scenario plus the fields that were filled from defaults, as
/// `[section].key = value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: ScenarioConfig,
    pub defaulted: Vec<String>,
}

/// Line numbers of keys, for error messages.
#[derive(Default)]
pub(crate) struct LineMap {
    lines: BTreeMap<(String, String), usize>,
}

impl LineMap {
    fn build(text: &str) -> Self {
        let mut lines = BTreeMap::new();
        if let Ok(doc) = toml::de::DeTable::parse(text) {
            for (section, value) in doc.get_ref() {
                let sline = line_of(text, section.span().start);
                lines.insert((section.get_ref().to_string(), String::new()), sline);
                if let Some(t) = value.get_ref().as_table() {
                    for key in t.keys() {
                        lines.insert(
                            (section.get_ref().to_string(), key.get_ref().to_string()),
                            line_of(text, key.span().start),
                        );
                    }
                }
            }
        }
        Self { lines }
    }

    fn get(&self, section: &str, key: &str) -> Option<usize> {
        self.lines
            .get(&(section.to_string(), key.to_string()))
            .or_else(|| self.lines.get(&(section.to_string(), String::new())))
            .copied()
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses the TOML text into a table, mapping syntax errors to config errors.
pub(crate) fn parse_table(text: &str) -> Result<(Table, LineMap)> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
        field: "syntax".into(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    Ok((table, LineMap::build(text)))
}

/// Typed access to one section, tracking defaults.
pub(crate) struct Section<'a, 'd> {
    name: &'a str,
    table: Option<&'a Table>,
    lines: &'a LineMap,
    defaulted: &'d mut Vec<String>,
}

impl<'a, 'd> Section<'a, 'd> {
    pub(crate) fn new(
        root: &'a Table,
        name: &'a str,
        lines: &'a LineMap,
        defaulted: &'d mut Vec<String>,
    ) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                return Err(Error::Config {
                    field: format!("[{name}]"),
                    line: lines.get(name, ""),
                    message: "expected a table".into(),
                })
            }
        };
        Ok(Self {
            name,
            table,
            lines,
            defaulted,
        })
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            field: format!("[{}].{key}", self.name),
            line: self.lines.get(self.name, key),
            message: message.into(),
        }
    }

    /// Rejects keys outside `keys`.
    pub(crate) fn only(&self, keys: &[&str]) -> Result<()> {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !keys.contains(&k.as_str()) {
                    return Err(self.err(k, "unknown key"));
                }
            }
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    pub(crate) fn has(&self, key: &str) -> bool {
        self.raw(key).is_some()
    }

    fn note_default(&mut self, key: &str, shown: impl std::fmt::Display) {
        self.defaulted.push(format!("[{}].{key} = {shown}", self.name));
    }

    fn as_f64(&self, key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(self.err(key, format!("expected a number, got {}", other.type_str()))),
        }
    }

    pub(crate) fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| self.as_f64(key, v)).transpose()
    }

    pub(crate) fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.opt_f64(key)? {
            Some(x) => Ok(x),
            None => {
                self.note_default(key, default);
                Ok(default)
            }
        }
    }

    pub(crate) fn req_f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    pub(crate) fn opt_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
            Some(Value::Integer(i)) => Err(self.err(key, format!("must be >= 0, got {i}"))),
            Some(other) => Err(self.err(
                key,
                format!("expected an integer, got {}", other.type_str()),
            )),
        }
    }

    pub(crate) fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.opt_usize(key)? {
            Some(x) => Ok(x),
            None => {
                self.note_default(key, default);
                Ok(default)
            }
        }
    }

    pub(crate) fn req_usize(&self, key: &str) -> Result<usize> {
        self.opt_usize(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    /// Integers up to `i64::MAX`, or a decimal string for larger seeds.
    pub(crate) fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => {
                self.note_default(key, default);
                Ok(default)
            }
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(Value::String(s)) => s
                .parse()
                .map_err(|_| self.err(key, format!("not an unsigned integer: {s:?}"))),
            Some(other) => Err(self.err(
                key,
                format!("expected a non-negative integer, got {}", other.type_str()),
            )),
        }
    }

    pub(crate) fn opt_str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(other) => Err(self.err(key, format!("expected a string, got {}", other.type_str()))),
        }
    }

    pub(crate) fn str_or(&mut self, key: &str, default: &'static str) -> Result<&'a str> {
        match self.opt_str(key)? {
            Some(s) => Ok(s),
            None => {
                self.note_default(key, format!("{default:?}"));
                Ok(default)
            }
        }
    }

    pub(crate) fn req_str(&self, key: &str) -> Result<&'a str> {
        self.opt_str(key)?
            .ok_or_else(|| self.err(key, "missing required key"))
    }

    fn array(&self, key: &str) -> Result<Option<&'a Vec<Value>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(other) => Err(self.err(key, format!("expected an array, got {}", other.type_str()))),
        }
    }

    pub(crate) fn opt_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.array(key)?
            .map(|a| a.iter().map(|v| self.as_f64(key, v)).collect())
            .transpose()
    }

    pub(crate) fn opt_point(&self, key: &str, dim: usize) -> Result<Option<Point>> {
        self.opt_f64_list(key)?
            .map(|c| self.point(key, &c, dim))
            .transpose()
    }

    fn point(&self, key: &str, c: &[f64], dim: usize) -> Result<Point> {
        if c.len() != dim {
            return Err(self.err(key, format!("expected {dim} coordinates, got {}", c.len())));
        }
        Point::new(c).map_err(|e| self.err(key, e.to_string()))
    }

    pub(crate) fn opt_points(&self, key: &str, dim: usize) -> Result<Option<Vec<Point>>> {
        let Some(rows) = self.array(key)? else {
            return Ok(None);
        };
        rows.iter()
            .map(|row| match row {
                Value::Array(a) => {
                    let c: Vec<f64> = a.iter().map(|v| self.as_f64(key, v)).collect::<Result<_>>()?;
                    self.point(key, &c, dim)
                }
                other => Err(self.err(
                    key,
                    format!("expected a list of coordinate arrays, got {}", other.type_str()),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn opt_pairs(&self, key: &str) -> Result<Option<Vec<(usize, usize)>>> {
        let Some(rows) = self.array(key)? else {
            return Ok(None);
        };
        rows.iter()
            .map(|row| match row.as_array().map(|a| a.as_slice()) {
                Some([Value::Integer(a), Value::Integer(b)]) if *a >= 0 && *b >= 0 => {
                    Ok((*a as usize, *b as usize))
                }
                _ => Err(self.err(key, "expected [from, to] pairs of agent ids")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub(crate) fn pick<T: Copy>(&self, key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
        options
            .iter()
            .find(|(name, _)| *name == value)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(key, format!("unknown value {value:?}, expected one of {names:?}"))
            })
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    let (root, lines) = parse_table(text)?;
    parse_root(&root, &lines, &[])
}

/// Scenario sections of `root`; `extra` names further top-level tables the
/// caller handles itself.
pub(crate) fn parse_root(root: &Table, lines: &LineMap, extra: &[&str]) -> Result<ParsedConfig> {
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) && !extra.contains(&key.as_str()) {
            return Err(Error::Config {
                field: format!("[{key}]"),
                line: lines.get(key, ""),
                message: "unknown section".into(),
            });
        }
    }
    let mut defaulted = Vec::new();
    let config = build(root, lines, &mut defaulted)?;
    config.validate().map_err(|e| locate(e, lines))?;
    Ok(ParsedConfig { config, defaulted })
}

/// Adds the line of the offending key to a validation error.
fn locate(e: Error, lines: &LineMap) -> Error {
    match e {
        Error::Config {
            field,
            line: None,
            message,
        } => {
            let line = field
                .strip_prefix('[')
                .and_then(|f| f.split_once("]."))
                .and_then(|(s, k)| lines.get(s, k));
            Error::Config {
                field,
                line,
                message,
            }
        }
        other => other,
    }
}

fn build(root: &Table, lines: &LineMap, defaulted: &mut Vec<String>) -> Result<ScenarioConfig> {
    let mut s = Section::new(root, "scenario", lines, defaulted)?;
    s.only(allowed("scenario"))?;
    let agents = s.req_usize("agents")?;
    let dimension = s.usize_or("dimension", 2)?;
    let dt = s.f64_or("dt", 0.01)?;
    let t_max = s.req_f64("t_max")?;
    let delta = s.f64_or("delta", 0.02)?;
    let seed = s.u64_or("seed", 0)?;
    let init_kind = s.req_str("init")?;
    let init = match init_kind {
        "uniform-box" => InitRule::UniformBox {
            width: s.req_f64("width")?,
            height: s.req_f64("height")?,
        },
        "circle" => InitRule::Circle {
            radius: s.req_f64("radius")?,
        },
        "explicit" => InitRule::Explicit(
            s.opt_points("positions", dimension)?
                .ok_or_else(|| s.err("positions", "missing required key"))?,
        ),
        other => {
            return Err(s.err(
                "init",
                format!("unknown value {other:?}, expected one of [\"uniform-box\", \"circle\", \"explicit\"]"),
            ))
        }
    };
    let headings = s.opt_f64_list("headings")?;
    let termination = match s.str_or("termination", "horizon")? {
        "horizon" => Termination::Horizon,
        "converged" => Termination::Converged {
            hold: s.f64_or("hold", 0.0)?,
        },
        other => {
            return Err(s.err(
                "termination",
                format!("unknown value {other:?}, expected \"horizon\" or \"converged\""),
            ))
        }
    };

    let mut g = Section::new(root, "graph", lines, defaulted)?;
    g.only(allowed("graph"))?;
    let provider_kind = g.req_str("provider")?;
    let provider = match provider_kind {
        "dynamic-priority" | "dynamic-plain" => {
            let neighbors = g.usize_or("neighbors", 1)?;
            if provider_kind == "dynamic-plain" {
                GraphProvider::DynamicPlain { neighbors }
            } else {
                let mut scratch = Vec::new();
                let gs = Section::new(root, "guidance", lines, &mut scratch)?;
                let epsilon = gs.req_f64("epsilon")?;
                GraphProvider::DynamicPriority { epsilon, neighbors }
            }
        }
        "fixed" => match g.opt_pairs("edges")? {
            Some(edges) => GraphProvider::FixedDigraph { edges },
            None => {
                g.note_default("edges", "ring");
                GraphProvider::ring(agents)
            }
        },
        other => {
            return Err(g.err(
                "provider",
                format!("unknown value {other:?}, expected one of [\"dynamic-priority\", \"dynamic-plain\", \"fixed\"]"),
            ))
        }
    };
    if provider_kind == "fixed" && g.has("neighbors") {
        return Err(g.err("neighbors", "not used by the fixed provider"));
    }

    let mut gd = Section::new(root, "guidance", lines, defaulted)?;
    gd.only(allowed("guidance"))?;
    if gd.has("epsilon") && provider_kind != "dynamic-priority" {
        return Err(gd.err("epsilon", "only used by the dynamic-priority provider"));
    }
    let weights = match gd.opt_f64_list("weights")? {
        Some(w) => {
            if gd.has("weight") {
                return Err(gd.err("weight", "give either weight or weights"));
            }
            Weights::PerRank(w)
        }
        None => Weights::Uniform(gd.f64_or("weight", 1.0)?),
    };
    let cruise = gd.opt_point("cruise", dimension)?;
    let guidance = GuidanceParams { weights, cruise };

    let mut d = Section::new(root, "dynamics", lines, defaulted)?;
    d.only(allowed("dynamics"))?;
    let kind = d.str_or("kind", "single")?;
    let own: &[&str] = match kind {
        "single" => &["kind", "integrator"],
        "double" => &["kind", "damping", "gain", "guidance_floor", "heaviside"],
        "ugv" => &["kind", "k1", "k2", "wheel_radius", "axle_distance", "phi_limit"],
        "uav" => &[
            "kind", "mass", "gravity", "control_gain", "flight_gain", "v_floor", "initial_speed",
        ],
        other => {
            return Err(d.err(
                "kind",
                format!("unknown value {other:?}, expected one of [\"single\", \"double\", \"ugv\", \"uav\"]"),
            ))
        }
    };
    if let Some(t) = d.table {
        if let Some(k) = t.keys().find(|k| !own.contains(&k.as_str())) {
            return Err(d.err(k, format!("not used by {kind} dynamics")));
        }
    }
    let dynamics = match kind {
        "single" => {
            let name = d.str_or("integrator", "euler")?;
            Dynamics::Single {
                integrator: d.pick(
                    "integrator",
                    name,
                    &[("euler", Integrator::Euler), ("rk4", Integrator::Rk4)],
                )?,
            }
        }
        "double" => {
            let def = NadfParams::default();
            let name = d.str_or("heaviside", "oppose-only")?;
            Dynamics::Double(NadfParams {
                damping: d.f64_or("damping", def.damping)?,
                gain: d.f64_or("gain", def.gain)?,
                guidance_floor: d.f64_or("guidance_floor", def.guidance_floor)?,
                heaviside: d.pick(
                    "heaviside",
                    name,
                    &[
                        ("oppose-only", HeavisideMode::OpposeOnly),
                        ("as-printed", HeavisideMode::AsPrinted),
                    ],
                )?,
            })
        }
        "ugv" => {
            let def = UgvParams::default();
            Dynamics::Ugv(UgvParams {
                k1: d.f64_or("k1", def.k1)?,
                k2: d.f64_or("k2", def.k2)?,
                wheel_radius: d.f64_or("wheel_radius", def.wheel_radius)?,
                axle_distance: d.f64_or("axle_distance", def.axle_distance)?,
                phi_limit: d.f64_or("phi_limit", def.phi_limit)?,
            })
        }
        _ => {
            let def = UavParams::default();
            Dynamics::Uav(UavParams {
                mass: d.f64_or("mass", def.mass)?,
                gravity: d.f64_or("gravity", def.gravity)?,
                control_gain: d.f64_or("control_gain", def.control_gain)?,
                flight_gain: d.f64_or("flight_gain", def.flight_gain)?,
                v_floor: d.f64_or("v_floor", def.v_floor)?,
                initial_speed: d.f64_or("initial_speed", def.initial_speed)?,
            })
        }
    };

    let mut p = Section::new(root, "perturbations", lines, defaulted)?;
    p.only(allowed("perturbations"))?;
    let delay = p.f64_or("delay", 0.0)?;
    let saturation = p.opt_f64("saturation")?;
    let drift = p.opt_points("drift", dimension)?;
    let leader = match p.opt_usize("leader")? {
        None => {
            for k in ["leader_motion", "leader_velocity", "leader_speed", "leader_amplitude", "leader_omega"] {
                if p.has(k) {
                    return Err(p.err(k, "needs [perturbations].leader"));
                }
            }
            None
        }
        Some(agent) => {
            let motion = match p.req_str("leader_motion")? {
                "linear" => LeaderMotion::Linear {
                    velocity: p
                        .opt_point("leader_velocity", dimension)?
                        .ok_or_else(|| p.err("leader_velocity", "missing required key"))?,
                },
                "sinusoidal" => LeaderMotion::Sinusoidal {
                    speed: p.req_f64("leader_speed")?,
                    amplitude: p.req_f64("leader_amplitude")?,
                    omega: p.req_f64("leader_omega")?,
                },
                other => {
                    return Err(p.err(
                        "leader_motion",
                        format!("unknown value {other:?}, expected \"linear\" or \"sinusoidal\""),
                    ))
                }
            };
            Some(LeaderScript { agent, motion })
        }
    };

    Ok(ScenarioConfig {
        agents,
        dimension,
        dynamics,
        provider,
        guidance,
        dt,
        t_max,
        delta,
        delay,
        saturation,
        drift,
        leader,
        init,
        headings,
        termination,
        seed,
    })
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn point(p: &Point) -> Value {
    Value::Array(p.coords().iter().map(|&c| float(c)).collect())
}

fn points(ps: &[Point]) -> Value {
    Value::Array(ps.iter().map(point).collect())
}

fn int(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn string(s: &str) -> Value {
    Value::String(s.to_string())
}

/// Writes every field explicitly, so that parsing the result gives back
/// `config` with nothing defaulted.
pub fn serialize_config(config: &ScenarioConfig) -> String {
    to_table(config).to_string()
}

pub(crate) fn to_table(c: &ScenarioConfig) -> Table {
    let mut s = Table::new();
    s.insert("agents".into(), int(c.agents));
    s.insert("dimension".into(), int(c.dimension));
    s.insert("dt".into(), float(c.dt));
    s.insert("t_max".into(), float(c.t_max));
    s.insert("delta".into(), float(c.delta));
    s.insert(
        "seed".into(),
        match i64::try_from(c.seed) {
            Ok(i) => Value::Integer(i),
            Err(_) => string(&c.seed.to_string()),
        },
    );
    match &c.init {
        InitRule::UniformBox { width, height } => {
            s.insert("init".into(), string("uniform-box"));
            s.insert("width".into(), float(*width));
            s.insert("height".into(), float(*height));
        }
        InitRule::Circle { radius } => {
            s.insert("init".into(), string("circle"));
            s.insert("radius".into(), float(*radius));
        }
        InitRule::Explicit(ps) => {
            s.insert("init".into(), string("explicit"));
            s.insert("positions".into(), points(ps));
        }
    }
    if let Some(h) = &c.headings {
        s.insert("headings".into(), Value::Array(h.iter().map(|&x| float(x)).collect()));
    }
    match c.termination {
        Termination::Horizon => {
            s.insert("termination".into(), string("horizon"));
        }
        Termination::Converged { hold } => {
            s.insert("termination".into(), string("converged"));
            s.insert("hold".into(), float(hold));
        }
    }

    let mut g = Table::new();
    let mut gd = Table::new();
    match &c.provider {
        GraphProvider::DynamicPriority { epsilon, neighbors } => {
            g.insert("provider".into(), string("dynamic-priority"));
            g.insert("neighbors".into(), int(*neighbors));
            gd.insert("epsilon".into(), float(*epsilon));
        }
        GraphProvider::DynamicPlain { neighbors } => {
            g.insert("provider".into(), string("dynamic-plain"));
            g.insert("neighbors".into(), int(*neighbors));
        }
        GraphProvider::FixedDigraph { edges } => {
            g.insert("provider".into(), string("fixed"));
            g.insert(
                "edges".into(),
                Value::Array(
                    edges
                        .iter()
                        .map(|&(a, b)| Value::Array(vec![int(a), int(b)]))
                        .collect(),
                ),
            );
        }
    }
    match &c.guidance.weights {
        Weights::Uniform(a) => {
            gd.insert("weight".into(), float(*a));
        }
        Weights::PerRank(w) => {
            gd.insert("weights".into(), Value::Array(w.iter().map(|&x| float(x)).collect()));
        }
    }
    if let Some(cr) = &c.guidance.cruise {
        gd.insert("cruise".into(), point(cr));
    }

    let mut d = Table::new();
    match &c.dynamics {
        Dynamics::Single { integrator } => {
            d.insert("kind".into(), string("single"));
            let name = match integrator {
                Integrator::Euler => "euler",
                Integrator::Rk4 => "rk4",
            };
            d.insert("integrator".into(), string(name));
        }
        Dynamics::Double(p) => {
            d.insert("kind".into(), string("double"));
            d.insert("damping".into(), float(p.damping));
            d.insert("gain".into(), float(p.gain));
            d.insert("guidance_floor".into(), float(p.guidance_floor));
            let name = match p.heaviside {
                HeavisideMode::OpposeOnly => "oppose-only",
                HeavisideMode::AsPrinted => "as-printed",
            };
            d.insert("heaviside".into(), string(name));
        }
        Dynamics::Ugv(p) => {
            d.insert("kind".into(), string("ugv"));
            d.insert("k1".into(), float(p.k1));
            d.insert("k2".into(), float(p.k2));
            d.insert("wheel_radius".into(), float(p.wheel_radius));
            d.insert("axle_distance".into(), float(p.axle_distance));
            d.insert("phi_limit".into(), float(p.phi_limit));
        }
        Dynamics::Uav(p) => {
            d.insert("kind".into(), string("uav"));
            d.insert("mass".into(), float(p.mass));
            d.insert("gravity".into(), float(p.gravity));
            d.insert("control_gain".into(), float(p.control_gain));
            d.insert("flight_gain".into(), float(p.flight_gain));
            d.insert("v_floor".into(), float(p.v_floor));
            d.insert("initial_speed".into(), float(p.initial_speed));
        }
    }

    let mut p = Table::new();
    p.insert("delay".into(), float(c.delay));
    if let Some(sat) = c.saturation {
        p.insert("saturation".into(), float(sat));
    }
    if let Some(dr) = &c.drift {
        p.insert("drift".into(), points(dr));
    }
    if let Some(l) = &c.leader {
        p.insert("leader".into(), int(l.agent));
        match &l.motion {
            LeaderMotion::Linear { velocity } => {
                p.insert("leader_motion".into(), string("linear"));
                p.insert("leader_velocity".into(), point(velocity));
            }
            LeaderMotion::Sinusoidal {
                speed,
                amplitude,
                omega,
            } => {
                p.insert("leader_motion".into(), string("sinusoidal"));
                p.insert("leader_speed".into(), float(*speed));
                p.insert("leader_amplitude".into(), float(*amplitude));
                p.insert("leader_omega".into(), float(*omega));
            }
        }
    }

    let mut root = Table::new();
    root.insert("scenario".into(), Value::Table(s));
    root.insert("graph".into(), Value::Table(g));
    root.insert("guidance".into(), Value::Table(gd));
    root.insert("dynamics".into(), Value::Table(d));
    root.insert("perturbations".into(), Value::Table(p));
    root
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"
[scenario]
agents = 2
t_max = 5.0
init = "explicit"
positions = [[0.0, 0.0], [2.0, 0.0]]

[graph]
provider = "dynamic-priority"
neighbors = 1

[guidance]
epsilon = 1.0
"#;

    fn line_of_err(e: &Error) -> (String, Option<usize>) {
        match e {
            Error::Config { field, line, .. } => (field.clone(), *line),
            other => panic!("not a config error: {other}"),
        }
    }

    #[test]
    fn minimal_config() {
        let p = parse_config(MINIMAL).unwrap();
        let c = &p.config;
        assert_eq!(c.agents, 2);
        assert_eq!(
            c.provider,
            GraphProvider::DynamicPriority {
                epsilon: 1.0,
                neighbors: 1
            }
        );
        assert_eq!(c.dt, 0.01);
        assert!(p.defaulted.contains(&"[scenario].dt = 0.01".to_string()));
        assert!(p.defaulted.contains(&"[dynamics].kind = \"single\"".to_string()));
        assert!(!p.defaulted.iter().any(|d| d.contains("agents")));
    }

    #[test]
    fn negative_epsilon_names_field_and_line() {
        let text = MINIMAL.replace("epsilon = 1.0", "epsilon = -1.0");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(line_of_err(&e), ("[guidance].epsilon".into(), Some(13)));
        assert!(e.to_string().contains("[guidance].epsilon"));
    }

    #[test]
    fn unknown_key_has_line() {
        let text = MINIMAL.replace("t_max = 5.0", "t_max = 5.0\nspeed = 3");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(line_of_err(&e), ("[scenario].speed".into(), Some(5)));
    }

    #[test]
    fn missing_and_mistyped_keys() {
        let e = parse_config(&MINIMAL.replace("t_max = 5.0\n", "")).unwrap_err();
        assert_eq!(line_of_err(&e).0, "[scenario].t_max");
        let e = parse_config(&MINIMAL.replace("agents = 2", "agents = \"two\"")).unwrap_err();
        assert_eq!(line_of_err(&e), ("[scenario].agents".into(), Some(3)));
        let e = parse_config(&MINIMAL.replace("agents = 2", "agents = 2.5")).unwrap_err();
        assert!(e.to_string().contains("integer"));
    }

    #[test]
    fn syntax_error_has_line() {
        let e = parse_config("[scenario]\nagents = = 2\n").unwrap_err();
        assert_eq!(line_of_err(&e), ("syntax".into(), Some(2)));
    }

    #[test]
    fn key_for_other_dynamics_rejected() {
        let text = format!("{MINIMAL}\n[dynamics]\nkind = \"single\"\ngain = 3.0\n");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(line_of_err(&e).0, "[dynamics].gain");
    }

    #[test]
    fn wide_box_template() {
        let text = r#"
[scenario]
agents = 200
t_max = 200.0
init = "uniform-box"
width = 30.0
height = 30.0

[graph]
provider = "dynamic-priority"

[guidance]
epsilon = 3.0
"#;
        let c = parse_config(text).unwrap().config;
        assert_eq!(c.initial_positions().len(), 200);
        assert_eq!(c.provider.neighbor_limit(), Some(1));
    }

    #[test]
    fn fixed_provider_defaults_to_ring() {
        let text = MINIMAL
            .replace("provider = \"dynamic-priority\"\nneighbors = 1", "provider = \"fixed\"")
            .replace("epsilon = 1.0", "");
        let p = parse_config(&text).unwrap();
        assert_eq!(p.config.provider, GraphProvider::ring(2));
    }

    fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
        let provider = prop_oneof![
            (0.0..5.0f64, 1usize..4)
                .prop_map(|(epsilon, neighbors)| GraphProvider::DynamicPriority { epsilon, neighbors }),
            (1usize..4).prop_map(|neighbors| GraphProvider::DynamicPlain { neighbors }),
            Just(GraphProvider::ring(4)),
        ];
        let dynamics = prop_oneof![
            Just(Dynamics::Single {
                integrator: Integrator::Euler
            }),
            Just(Dynamics::Single {
                integrator: Integrator::Rk4
            }),
            (0.1..5.0f64, 0.0..300.0f64).prop_map(|(damping, gain)| Dynamics::Double(NadfParams {
                damping,
                gain,
                ..Default::default()
            })),
        ];
        let init = prop_oneof![
            (0.1..50.0f64, 0.1..50.0f64).prop_map(|(width, height)| InitRule::UniformBox { width, height }),
            (0.1..10.0f64).prop_map(|radius| InitRule::Circle { radius }),
            prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 4)
                .prop_map(|v| InitRule::Explicit(v.into_iter().map(|(x, y)| Point::xy(x, y)).collect())),
        ];
        (
            provider,
            dynamics,
            init,
            1e-4..0.1f64,
            1.0..100.0f64,
            any::<u64>(),
            prop::option::of(0.1..5.0f64),
            prop::option::of(0.0..2.0f64),
            0.0..1.0f64,
        )
            .prop_map(|(provider, dynamics, init, dt, t_max, seed, sat, hold, delay)| {
                let mut c = ScenarioConfig::single(4, provider, init);
                c.dynamics = dynamics;
                c.dt = dt;
                c.t_max = t_max;
                c.seed = seed;
                c.saturation = sat;
                c.delay = delay;
                c.termination = hold.map_or(Termination::Horizon, |hold| Termination::Converged { hold });
                c
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trips(c in arb_config()) {
            let text = serialize_config(&c);
            let back = parse_config(&text).unwrap();
            prop_assert_eq!(&back.config, &c);
            prop_assert!(back.defaulted.is_empty(), "{:?}", back.defaulted);
        }
    }

    #[test]
    fn round_trip_other_dynamics() {
        let mut ugv = ScenarioConfig::single(5, GraphProvider::ring(5), InitRule::Circle { radius: 1.0 });
        ugv.dynamics = Dynamics::Ugv(UgvParams::default());
        ugv.headings = Some(vec![0.0, 0.1, 0.2, 0.3, 0.4]);
        let mut uav = ScenarioConfig::single(
            2,
            GraphProvider::ring(2),
            InitRule::Explicit(vec![Point::xyz(0.0, 0.0, 0.0), Point::xyz(0.0, 5.0, 0.0)]),
        );
        uav.dimension = 3;
        uav.dynamics = Dynamics::Uav(UavParams::default());
        uav.guidance.cruise = Some(Point::xyz(2.0, 0.0, 0.0));
        let mut dbl = ScenarioConfig::single(5, GraphProvider::ring(5), InitRule::Circle { radius: 3.0 });
        dbl.dynamics = Dynamics::Double(NadfParams::default());
        dbl.drift = Some(vec![Point::xy(0.0, 1.0); 5]);
        dbl.guidance.weights = Weights::PerRank(vec![1.0]);
        dbl.leader = Some(LeaderScript {
            agent: 4,
            motion: LeaderMotion::Sinusoidal {
                speed: 1.0,
                amplitude: 2.0,
                omega: 0.5,
            },
        });
        for c in [ugv, uav, dbl] {
            let back = parse_config(&serialize_config(&c)).unwrap();
            assert_eq!(back.config, c);
        }
    }
}
