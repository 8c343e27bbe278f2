//! TOML run configuration.
//!
//! A file describes either a scenario (sections `vehicle`, `control`,
//! `path`, `initial`, optional `sim` and `compare`) or a gain-plane analysis
//! (sections `vehicle`, `analysis`, optional `[[points]]`). Lengths are metres,
//! speeds m/s, curvature 1/m. Angles are strings carrying an explicit unit,
//! `"30 deg"` or `"0.5236 rad"`.
//!
//! Every key is checked: unknown keys are rejected and all missing required
//! keys are reported together.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path as FsPath, PathBuf};

use toml::{Table, Value};

use crate::analysis::kappa_bar;
use crate::controller::{ControlConfig, Gains, Variant};
use crate::error::{ConfigError, Result};
use crate::geometry::{read_curvature_table, PathKind, PathSpec, PathState, Pose};
use crate::sim::{Frame, ScenarioConfig, SteeringUpdate, DEFAULT_DT};
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: ScenarioConfig,
    /// Variants for the `compare` workflow.
    pub compare: Vec<Variant>,
    /// CSV file the sampled curvature table was read from.
    pub curvature_file: Option<PathBuf>,
}

/// Curvatures at which the gain plane is scanned.
#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureSet {
    /// Multiples of the largest admissible curvature.
    Fractions(Vec<f64>),
    /// Absolute values in 1/m.
    Absolute(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainPoint {
    pub name: String,
    pub gains: Gains,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub vehicle: VehicleParams,
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub resolution: usize,
    pub curvatures: CurvatureSet,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_points: usize,
    /// Gain pairs whose frequency response is reported.
    pub points: Vec<GainPoint>,
}

impl AnalysisConfig {
    pub fn kappas(&self) -> Vec<f64> {
        match &self.curvatures {
            CurvatureSet::Fractions(f) => {
                let kb = kappa_bar(&self.vehicle);
                f.iter().map(|x| x * kb).collect()
            }
            CurvatureSet::Absolute(k) => k.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Scenario(ScenarioFile),
    Analysis(AnalysisConfig),
}

struct Reader<'a> {
    root: &'a Table,
    missing: Vec<String>,
    unknown: Vec<String>,
}

const VEHICLE_KEYS: [&str; 4] = ["wheelbase", "sensor_offset", "max_steer", "speed"];

impl<'a> Reader<'a> {
    fn section(&mut self, name: &str, allowed: &[&str], required: bool) -> Option<&'a Table> {
        match self.root.get(name) {
            Some(Value::Table(t)) => {
                for k in t.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.unknown.push(format!("{name}.{k}"));
                    }
                }
                Some(t)
            }
            Some(_) => {
                self.unknown.push(format!("{name} (expected a table)"));
                None
            }
            None => {
                if required {
                    self.missing.push(format!("[{name}]"));
                }
                None
            }
        }
    }

    fn require(&mut self, section: &str, t: Option<&'a Table>, keys: &[&str]) {
        for k in keys {
            if t.map_or(true, |t| !t.contains_key(*k)) {
                self.missing.push(format!("{section}.{k}"));
            }
        }
    }
}

fn key(section: &str, k: &str) -> String {
    format!("{section}.{k}")
}

fn number(t: &Table, section: &str, k: &str) -> Result<f64, ConfigError> {
    match t.get(k) {
        Some(Value::Float(x)) => Ok(*x),
        Some(Value::Integer(i)) => Ok(*i as f64),
        Some(Value::String(s)) if s.trim().ends_with("deg") || s.trim().ends_with("rad") => {
            Err(ConfigError::Unit {
                key: key(section, k),
                value: s.clone(),
                expected: "a plain number in SI units",
            })
        }
        Some(_) => Err(ConfigError::Type {
            key: key(section, k),
            expected: "a number",
        }),
        None => unreachable!("presence checked before conversion"),
    }
}

fn opt_number(t: Option<&Table>, section: &str, k: &str, default: f64) -> Result<f64, ConfigError> {
    match t {
        Some(t) if t.contains_key(k) => number(t, section, k),
        _ => Ok(default),
    }
}

fn integer(t: &Table, section: &str, k: &str) -> Result<i64, ConfigError> {
    match t.get(k) {
        Some(Value::Integer(i)) => Ok(*i),
        _ => Err(ConfigError::Type {
            key: key(section, k),
            expected: "an integer",
        }),
    }
}

fn string<'t>(t: &'t Table, section: &str, k: &str) -> Result<&'t str, ConfigError> {
    match t.get(k) {
        Some(Value::String(s)) => Ok(s),
        _ => Err(ConfigError::Type {
            key: key(section, k),
            expected: "a string",
        }),
    }
}

/// Parse `"<number> deg"` or `"<number> rad"` into radians.
pub fn parse_angle(text: &str, key_name: &str) -> Result<f64, ConfigError> {
    let unit_err = || ConfigError::Unit {
        key: key_name.to_string(),
        value: text.to_string(),
        expected: "\"<number> deg\" or \"<number> rad\"",
    };
    let t = text.trim();
    let (num, degrees) = if let Some(n) = t.strip_suffix("deg") {
        (n, true)
    } else if let Some(n) = t.strip_suffix("rad") {
        (n, false)
    } else {
        return Err(unit_err());
    };
    let v: f64 = num.trim().parse().map_err(|_| unit_err())?;
    if !v.is_finite() {
        return Err(unit_err());
    }
    Ok(if degrees { v.to_radians() } else { v })
}

fn angle(t: &Table, section: &str, k: &str) -> Result<f64, ConfigError> {
    match t.get(k) {
        Some(Value::String(s)) => parse_angle(s, &key(section, k)),
        Some(Value::Float(_)) | Some(Value::Integer(_)) => Err(ConfigError::Unit {
            key: key(section, k),
            value: t[k].to_string(),
            expected: "an angle string with a deg or rad suffix",
        }),
        _ => Err(ConfigError::Type {
            key: key(section, k),
            expected: "an angle string",
        }),
    }
}

fn invalid(k: String, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        key: k,
        reason: e.to_string(),
    }
}

fn vehicle(t: &Table) -> Result<VehicleParams, ConfigError> {
    let p = VehicleParams {
        wheelbase: number(t, "vehicle", "wheelbase")?,
        sensor_offset: number(t, "vehicle", "sensor_offset")?,
        max_steer: angle(t, "vehicle", "max_steer")?,
        speed: number(t, "vehicle", "speed")?,
    };
    p.validate().map_err(|e| invalid("vehicle".into(), e))?;
    if p.sensor_offset < 0.0 {
        log::warn!(
            "vehicle.sensor_offset = {} is negative: the sensor sits behind the rear axle",
            p.sensor_offset
        );
    }
    Ok(p)
}

fn variant(t: &Table, section: &str, k: &str) -> Result<Variant, ConfigError> {
    let s = string(t, section, k)?;
    s.parse().map_err(|_| ConfigError::Variant {
        key: key(section, k),
        value: s.to_string(),
    })
}

fn pair(t: &Table, section: &str, k: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError::Type {
        key: key(section, k),
        expected: "a two-element numeric array [lo, hi]",
    };
    match t.get(k) {
        Some(Value::Array(a)) if a.len() == 2 => {
            let f = |v: &Value| match v {
                Value::Float(x) => Some(*x),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            };
            Ok((f(&a[0]).ok_or_else(bad)?, f(&a[1]).ok_or_else(bad)?))
        }
        _ => Err(bad()),
    }
}

fn numbers(t: &Table, section: &str, k: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = || ConfigError::Type {
        key: key(section, k),
        expected: "an array of numbers",
    };
    match t.get(k) {
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(i) => Ok(*i as f64),
                _ => Err(bad()),
            })
            .collect(),
        _ => Err(bad()),
    }
}

/// Parse configuration text. Relative file references (sampled curvature
/// tables) are resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: Option<&FsPath>) -> Result<ParsedConfig> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    if root.contains_key("analysis") {
        Ok(ParsedConfig::Analysis(parse_analysis(&root)?))
    } else {
        Ok(ParsedConfig::Scenario(parse_scenario(&root, base_dir)?))
    }
}

pub fn parse_scenario_config(text: &str, base_dir: Option<&FsPath>) -> Result<ScenarioFile> {
    match parse_config(text, base_dir)? {
        ParsedConfig::Scenario(s) => Ok(s),
        ParsedConfig::Analysis(_) => Err(ConfigError::Invalid {
            key: "analysis".into(),
            reason: "expected a scenario config, found an analysis config".into(),
        }
        .into()),
    }
}

pub fn parse_analysis_config(text: &str) -> Result<AnalysisConfig> {
    match parse_config(text, None)? {
        ParsedConfig::Analysis(a) => Ok(a),
        ParsedConfig::Scenario(_) => Err(ConfigError::Missing(vec!["[analysis]".into()]).into()),
    }
}

const PATH_KEYS: [&str; 9] = [
    "kind",
    "radius",
    "kappa_max",
    "period",
    "periods",
    "file",
    "anchor_x",
    "anchor_y",
    "anchor_heading",
];

fn parse_scenario(root: &Table, base_dir: Option<&FsPath>) -> Result<ScenarioFile> {
    let mut r = Reader {
        root,
        missing: Vec::new(),
        unknown: Vec::new(),
    };
    for k in root.keys() {
        if !["vehicle", "control", "path", "initial", "sim", "compare"].contains(&k.as_str()) {
            r.unknown.push(k.clone());
        }
    }
    let veh = r.section("vehicle", &VEHICLE_KEYS, true);
    let ctl = r.section(
        "control",
        &["k1", "k2", "max_lateral_accel", "variant"],
        true,
    );
    let path = r.section("path", &PATH_KEYS, true);
    let init = r.section("initial", &["s", "e", "theta"], true);
    let sim = r.section("sim", &["dt", "t_end", "frame", "steering_update"], false);
    let cmp = r.section("compare", &["variants"], false);
    r.require("vehicle", veh, &VEHICLE_KEYS);
    r.require("control", ctl, &["k1", "k2", "max_lateral_accel"]);
    r.require("path", path, &["kind"]);
    r.require("initial", init, &["s", "e", "theta"]);
    let kind_name = path.and_then(|t| t.get("kind")).and_then(Value::as_str);
    let kind_keys: &[&str] = match kind_name {
        Some("circular") => &["radius"],
        Some("cosine") => &["kappa_max", "period", "periods"],
        Some("sampled") => &["file"],
        _ => &[],
    };
    r.require("path", path, kind_keys);
    if !r.unknown.is_empty() {
        return Err(ConfigError::Unknown(r.unknown).into());
    }
    if !r.missing.is_empty() {
        return Err(ConfigError::Missing(r.missing).into());
    }
    let (veh, ctl, path, init) = (veh.unwrap(), ctl.unwrap(), path.unwrap(), init.unwrap());

    let vehicle = vehicle(veh)?;
    let v = match ctl.get("variant") {
        Some(_) => variant(ctl, "control", "variant")?,
        None => Variant::Full,
    };
    let gains = Gains::new(number(ctl, "control", "k1")?, number(ctl, "control", "k2")?);
    let a_max = number(ctl, "control", "max_lateral_accel")?;
    let control =
        ControlConfig::new(gains, a_max, v, &vehicle).map_err(|e| invalid("control".into(), e))?;

    let kind_name = string(path, "path", "kind")?;
    // keys that belong to a different path kind are rejected
    let allowed: &[&str] =
        match kind_name {
            "straight" => &[],
            "circular" => &["radius"],
            "cosine" => &["kappa_max", "period", "periods"],
            "sampled" => &["file"],
            other => return Err(invalid(
                "path.kind".into(),
                format!(
                    "unknown path kind {other:?} (expected straight | circular | cosine | sampled)"
                ),
            )
            .into()),
        };
    let stray: Vec<String> = path
        .keys()
        .filter(|k| {
            !["kind", "anchor_x", "anchor_y", "anchor_heading"].contains(&k.as_str())
                && !allowed.contains(&k.as_str())
        })
        .map(|k| format!("path.{k} (not used by kind {kind_name:?})"))
        .collect();
    if !stray.is_empty() {
        return Err(ConfigError::Unknown(stray).into());
    }
    let mut curvature_file = None;
    let kind = match kind_name {
        "straight" => PathKind::Straight,
        "circular" => PathKind::Circular {
            radius: number(path, "path", "radius")?,
        },
        "cosine" => {
            let periods = integer(path, "path", "periods")?;
            if !(1..=u32::MAX as i64).contains(&periods) {
                return Err(invalid("path.periods".into(), "must be a positive integer").into());
            }
            PathKind::Cosine {
                kappa_max: number(path, "path", "kappa_max")?,
                period: number(path, "path", "period")?,
                periods: periods as u32,
            }
        }
        _ => {
            let file = PathBuf::from(string(path, "path", "file")?);
            let resolved = match base_dir {
                Some(b) if file.is_relative() => b.join(&file),
                _ => file,
            };
            let table = read_curvature_table(&resolved)?;
            curvature_file = Some(resolved);
            PathKind::Sampled { table }
        }
    };
    let anchor = Pose {
        x: opt_number(Some(path), "path", "anchor_x", 0.0)?,
        y: opt_number(Some(path), "path", "anchor_y", 0.0)?,
        heading: match path.get("anchor_heading") {
            Some(_) => angle(path, "path", "anchor_heading")?,
            None => 0.0,
        },
    };
    let spec = PathSpec::new(kind).with_anchor(anchor);
    spec.validate().map_err(|e| invalid("path".into(), e))?;

    let initial = PathState {
        s: number(init, "initial", "s")?,
        e: number(init, "initial", "e")?,
        theta: angle(init, "initial", "theta")?,
    };
    let dt = opt_number(sim, "sim", "dt", DEFAULT_DT)?;
    let t_end = opt_number(
        sim,
        "sim",
        "t_end",
        ScenarioConfig::default_t_end(&spec, vehicle.speed),
    )?;
    let frame = match sim.and_then(|t| t.get("frame")) {
        Some(_) => {
            let s = string(sim.unwrap(), "sim", "frame")?;
            s.parse::<Frame>()
                .map_err(|e| invalid("sim.frame".into(), e))?
        }
        None => Frame::Path,
    };
    let steering_update = match sim.and_then(|t| t.get("steering_update")) {
        Some(_) => {
            let s = string(sim.unwrap(), "sim", "steering_update")?;
            s.parse::<SteeringUpdate>()
                .map_err(|e| invalid("sim.steering_update".into(), e))?
        }
        None => SteeringUpdate::Stage,
    };
    let compare = match cmp.and_then(|t| t.get("variants")) {
        Some(Value::Array(a)) => {
            let mut out = Vec::new();
            for v in a {
                let s = v.as_str().ok_or(ConfigError::Type {
                    key: "compare.variants".into(),
                    expected: "an array of variant names",
                })?;
                out.push(s.parse().map_err(|_| ConfigError::Variant {
                    key: "compare.variants".into(),
                    value: s.to_string(),
                })?);
            }
            if out.is_empty() {
                return Err(invalid("compare.variants".into(), "at least one variant").into());
            }
            out
        }
        Some(_) => {
            return Err(ConfigError::Type {
                key: "compare.variants".into(),
                expected: "an array of variant names",
            }
            .into())
        }
        None => vec![Variant::Full, Variant::Naive],
    };
    let scenario = ScenarioConfig {
        path: spec,
        vehicle,
        control,
        initial,
        dt,
        t_end,
        frame,
        steering_update,
    };
    scenario.validate().map_err(|e| invalid("sim".into(), e))?;
    Ok(ScenarioFile {
        scenario,
        compare,
        curvature_file,
    })
}

const ANALYSIS_KEYS: [&str; 8] = [
    "k1_range",
    "k2_range",
    "resolution",
    "kappa0_fractions",
    "kappa0",
    "omega_min",
    "omega_max",
    "omega_points",
];

fn parse_analysis(root: &Table) -> Result<AnalysisConfig> {
    let mut r = Reader {
        root,
        missing: Vec::new(),
        unknown: Vec::new(),
    };
    for k in root.keys() {
        if !["vehicle", "analysis", "points"].contains(&k.as_str()) {
            r.unknown.push(k.clone());
        }
    }
    let veh = r.section("vehicle", &VEHICLE_KEYS, true);
    let an = r.section("analysis", &ANALYSIS_KEYS, true);
    r.require("vehicle", veh, &VEHICLE_KEYS);
    let points_val = root.get("points");
    if let Some(Value::Array(items)) = points_val {
        for (i, it) in items.iter().enumerate() {
            if let Value::Table(t) = it {
                for k in t.keys() {
                    if !["name", "k1", "k2"].contains(&k.as_str()) {
                        r.unknown.push(format!("points[{i}].{k}"));
                    }
                }
                for k in ["name", "k1", "k2"] {
                    if !t.contains_key(k) {
                        r.missing.push(format!("points[{i}].{k}"));
                    }
                }
            }
        }
    }
    if !r.unknown.is_empty() {
        return Err(ConfigError::Unknown(r.unknown).into());
    }
    if !r.missing.is_empty() {
        return Err(ConfigError::Missing(r.missing).into());
    }
    let (veh, an) = (veh.unwrap(), an.unwrap());
    let vehicle = vehicle(veh)?;
    let k1_range = if an.contains_key("k1_range") {
        pair(an, "analysis", "k1_range")?
    } else {
        (-3.0, 3.0)
    };
    let k2_range = if an.contains_key("k2_range") {
        pair(an, "analysis", "k2_range")?
    } else {
        (-3.0, 3.0)
    };
    for (k, (lo, hi)) in [
        ("analysis.k1_range", k1_range),
        ("analysis.k2_range", k2_range),
    ] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(k.into(), format!("need finite lo < hi, got [{lo}, {hi}]")).into());
        }
    }
    let resolution = if an.contains_key("resolution") {
        integer(an, "analysis", "resolution")?
    } else {
        200
    };
    if !(2..=5000).contains(&resolution) {
        return Err(invalid("analysis.resolution".into(), "must be between 2 and 5000").into());
    }
    let curvatures = match (
        an.contains_key("kappa0_fractions"),
        an.contains_key("kappa0"),
    ) {
        (true, true) => {
            return Err(invalid(
                "analysis.kappa0".into(),
                "give either kappa0 or kappa0_fractions, not both",
            )
            .into())
        }
        (false, true) => CurvatureSet::Absolute(numbers(an, "analysis", "kappa0")?),
        (true, false) => CurvatureSet::Fractions(numbers(an, "analysis", "kappa0_fractions")?),
        (false, false) => CurvatureSet::Fractions(vec![0.0, 0.5, 1.0]),
    };
    let omega_min = opt_number(Some(an), "analysis", "omega_min", 1e-3)?;
    let omega_max = opt_number(Some(an), "analysis", "omega_max", 1e3)?;
    if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
        return Err(invalid(
            "analysis.omega_min".into(),
            "need 0 < omega_min < omega_max",
        )
        .into());
    }
    let omega_points = if an.contains_key("omega_points") {
        integer(an, "analysis", "omega_points")?
    } else {
        400
    };
    if !(2..=1_000_000).contains(&omega_points) {
        return Err(invalid("analysis.omega_points".into(), "must be between 2 and 1e6").into());
    }
    let points = match points_val {
        None => Vec::new(),
        Some(Value::Array(items)) => {
            let mut out = Vec::new();
            let mut names = BTreeSet::new();
            for (i, it) in items.iter().enumerate() {
                let sec = format!("points[{i}]");
                let t = it.as_table().ok_or(ConfigError::Type {
                    key: sec.clone(),
                    expected: "a table with name, k1, k2",
                })?;
                let name = string(t, &sec, "name")?.to_string();
                if !names.insert(name.clone()) {
                    return Err(invalid(
                        format!("{sec}.name"),
                        format!("duplicate point name {name:?}"),
                    )
                    .into());
                }
                out.push(GainPoint {
                    name,
                    gains: Gains::new(number(t, &sec, "k1")?, number(t, &sec, "k2")?),
                });
            }
            out
        }
        Some(_) => {
            return Err(ConfigError::Type {
                key: "points".into(),
                expected: "an array of tables ([[points]])",
            }
            .into())
        }
    };
    Ok(AnalysisConfig {
        vehicle,
        k1_range,
        k2_range,
        resolution: resolution as usize,
        curvatures,
        omega_min,
        omega_max,
        omega_points: omega_points as usize,
        points,
    })
}

/// TOML float literal that parses back to the same bits.
fn lit(x: f64) -> String {
    format!("{x:?}")
}

fn rad(x: f64) -> String {
    format!("\"{x:?} rad\"")
}

fn toml_str(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

fn vehicle_toml(out: &mut String, p: &VehicleParams) {
    let _ = writeln!(out, "[vehicle]");
    let _ = writeln!(out, "wheelbase = {}", lit(p.wheelbase));
    let _ = writeln!(out, "sensor_offset = {}", lit(p.sensor_offset));
    let _ = writeln!(out, "max_steer = {}", rad(p.max_steer));
    let _ = writeln!(out, "speed = {}", lit(p.speed));
}

impl ScenarioFile {
    /// Fully resolved config as TOML. Parsing the result gives an identical
    /// configuration (angles are echoed in radians).
    pub fn to_toml(&self) -> String {
        let c = &self.scenario;
        let mut out = String::new();
        vehicle_toml(&mut out, &c.vehicle);
        let _ = writeln!(out, "\n[control]");
        let _ = writeln!(out, "k1 = {}", lit(c.control.gains.k1));
        let _ = writeln!(out, "k2 = {}", lit(c.control.gains.k2));
        let _ = writeln!(
            out,
            "max_lateral_accel = {}",
            lit(c.control.max_lateral_accel)
        );
        let _ = writeln!(out, "variant = \"{}\"", c.control.variant);
        let _ = writeln!(out, "\n[path]");
        match &c.path.kind {
            PathKind::Straight => {
                let _ = writeln!(out, "kind = \"straight\"");
            }
            PathKind::Circular { radius } => {
                let _ = writeln!(out, "kind = \"circular\"\nradius = {}", lit(*radius));
            }
            PathKind::Cosine {
                kappa_max,
                period,
                periods,
            } => {
                let _ = writeln!(
                    out,
                    "kind = \"cosine\"\nkappa_max = {}\nperiod = {}\nperiods = {periods}",
                    lit(*kappa_max),
                    lit(*period)
                );
            }
            PathKind::Sampled { .. } => {
                let file = self
                    .curvature_file
                    .as_deref()
                    .map(|p| p.to_string_lossy().into_owned());
                let _ = writeln!(
                    out,
                    "kind = \"sampled\"\nfile = {}",
                    toml_str(&file.unwrap_or_default())
                );
            }
        }
        let a = c.path.anchor;
        let _ = writeln!(
            out,
            "anchor_x = {}\nanchor_y = {}\nanchor_heading = {}",
            lit(a.x),
            lit(a.y),
            rad(a.heading)
        );
        let _ = writeln!(out, "\n[initial]");
        let _ = writeln!(
            out,
            "s = {}\ne = {}\ntheta = {}",
            lit(c.initial.s),
            lit(c.initial.e),
            rad(c.initial.theta)
        );
        let _ = writeln!(out, "\n[sim]");
        let _ = writeln!(
            out,
            "dt = {}\nt_end = {}\nframe = \"{}\"\nsteering_update = \"{}\"",
            lit(c.dt),
            lit(c.t_end),
            c.frame.as_str(),
            c.steering_update.as_str()
        );
        let names: Vec<String> = self.compare.iter().map(|v| format!("\"{v}\"")).collect();
        let _ = writeln!(out, "\n[compare]\nvariants = [{}]", names.join(", "));
        out
    }
}

impl AnalysisConfig {
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        vehicle_toml(&mut out, &self.vehicle);
        let _ = writeln!(out, "\n[analysis]");
        let _ = writeln!(
            out,
            "k1_range = [{}, {}]",
            lit(self.k1_range.0),
            lit(self.k1_range.1)
        );
        let _ = writeln!(
            out,
            "k2_range = [{}, {}]",
            lit(self.k2_range.0),
            lit(self.k2_range.1)
        );
        let _ = writeln!(out, "resolution = {}", self.resolution);
        let list = |v: &[f64]| v.iter().map(|x| lit(*x)).collect::<Vec<_>>().join(", ");
        match &self.curvatures {
            CurvatureSet::Fractions(f) => {
                let _ = writeln!(out, "kappa0_fractions = [{}]", list(f));
            }
            CurvatureSet::Absolute(k) => {
                let _ = writeln!(out, "kappa0 = [{}]", list(k));
            }
        }
        let _ = writeln!(
            out,
            "omega_min = {}\nomega_max = {}\nomega_points = {}",
            lit(self.omega_min),
            lit(self.omega_max),
            self.omega_points
        );
        for p in &self.points {
            let _ = writeln!(
                out,
                "\n[[points]]\nname = {}\nk1 = {}\nk2 = {}",
                toml_str(&p.name),
                lit(p.gains.k1),
                lit(p.gains.k2)
            );
        }
        out
    }
}

impl ParsedConfig {
    pub fn to_toml(&self) -> String {
        match self {
            ParsedConfig::Scenario(s) => s.to_toml(),
            ParsedConfig::Analysis(a) => a.to_toml(),
        }
    }
}
