//! Batch workflows behind the `latsteer` binary. Each command reads one
//! config, writes its artifacts into an output directory and records them in
//! `manifest.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{freq_response_on, log_space, numeric_peak, stability_region_scan, ScanCell};
use crate::config::{parse_config, AnalysisConfig, ParsedConfig, ScenarioFile};
use crate::controller::{desired_yaw_error, feedforward_error, Variant};
use crate::error::{ConfigError, Error, Result};
use crate::presets::{preset_text, PRESETS};
use crate::sim::{
    compare_controllers, metrics_to_json, metrics_to_kv, run_scenario, write_text,
    write_trajectory_csv, ScenarioResult,
};
use crate::vehicle::VehicleParams;

pub const UNITS_NOTE: &str =
    "SI units: lengths m, time s, angles rad, curvature 1/m, frequency rad/s; \
M and M_max are metres of lateral deviation per unit (1/m) curvature amplitude, i.e. m^2";

/// Prefix selecting a built-in config instead of a file, e.g. `preset:cosine_road`.
pub const PRESET_PREFIX: &str = "preset:";

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub source: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Fully resolved configuration; running it again reproduces the outputs.
    pub config_echo: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_s: f64,
    pub exit_status: i32,
    pub error: Option<String>,
    pub seedless: bool,
    pub units: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_echo: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_s: 0.0,
            exit_status: 0,
            error: None,
            seedless: true,
            units: UNITS_NOTE.to_string(),
        }
    }

    pub fn write(&self, out_dir: &FsPath) -> Result<PathBuf> {
        let path = out_dir.join("manifest.json");
        write_text(
            &path,
            &(serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"),
        )?;
        Ok(path)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Config text plus where it came from.
pub struct ConfigSource {
    pub label: String,
    pub text: String,
    pub base_dir: Option<PathBuf>,
}

pub fn read_config_source(spec: &str) -> Result<ConfigSource> {
    if let Some(name) = spec.strip_prefix(PRESET_PREFIX) {
        let text = preset_text(name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Config(ConfigError::Invalid {
                key: "--config".into(),
                reason: format!("unknown preset {name:?}; available: {}", names.join(", ")),
            })
        })?;
        return Ok(ConfigSource {
            label: spec.to_string(),
            text: text.to_string(),
            base_dir: None,
        });
    }
    let path = PathBuf::from(spec);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(ConfigSource {
        label: spec.to_string(),
        text,
        base_dir: path.parent().map(FsPath::to_path_buf),
    })
}

struct Ctx<'a> {
    out_dir: &'a FsPath,
    manifest: &'a mut RunManifest,
}

impl Ctx<'_> {
    fn file(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.manifest.outputs.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name);
        write_text(&p, text)
    }
}

fn ensure_dir(dir: &FsPath) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn scenario_from(src: &ConfigSource, ov: Overrides) -> Result<ScenarioFile> {
    let mut f = match parse_config(&src.text, src.base_dir.as_deref())? {
        ParsedConfig::Scenario(s) => s,
        ParsedConfig::Analysis(_) => {
            return Err(ConfigError::Invalid {
                key: "analysis".into(),
                reason: "this command needs a scenario config".into(),
            }
            .into())
        }
    };
    if let Some(dt) = ov.dt {
        f.scenario.dt = dt;
        f.scenario.validate().map_err(|e| {
            Error::Config(ConfigError::Invalid {
                key: "--dt".into(),
                reason: e.to_string(),
            })
        })?;
    }
    if let Some(v) = ov.variant {
        f.scenario.control = f.scenario.control.with_variant(v);
        f.compare = vec![v];
    }
    Ok(f)
}

fn analysis_from(src: &ConfigSource) -> Result<AnalysisConfig> {
    match parse_config(&src.text, src.base_dir.as_deref())? {
        ParsedConfig::Analysis(a) => Ok(a),
        ParsedConfig::Scenario(_) => Err(ConfigError::Missing(vec!["[analysis]".into()]).into()),
    }
}

fn record_inputs(m: &mut RunManifest, src: &ConfigSource, f: Option<&ScenarioFile>) -> Result<()> {
    m.inputs.push(InputDigest {
        source: src.label.clone(),
        sha256: sha256_hex(src.text.as_bytes()),
    });
    if let Some(path) = f.and_then(|f| f.curvature_file.as_ref()) {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        m.inputs.push(InputDigest {
            source: path.to_string_lossy().into_owned(),
            sha256: sha256_hex(&bytes),
        });
    }
    Ok(())
}

fn write_result(ctx: &mut Ctx, tag: &str, r: &ScenarioResult) -> Result<()> {
    let sfx = if tag.is_empty() {
        String::new()
    } else {
        format!("_{tag}")
    };
    let p = ctx.file(&format!("trajectory{sfx}.csv"));
    write_trajectory_csv(&p, &r.trajectory)?;
    ctx.text(&format!("metrics{sfx}.txt"), &metrics_to_kv(&r.metrics))?;
    ctx.text(
        &format!("metrics{sfx}.json"),
        &(metrics_to_json(&r.metrics) + "\n"),
    )?;
    if let (Some(e), Some(cc)) = (&r.earth_trajectory, &r.cross_check) {
        let p = ctx.file(&format!("trajectory{sfx}_earth.csv"));
        write_trajectory_csv(&p, e)?;
        let json = serde_json::to_string_pretty(cc).expect("cross-check serialises");
        ctx.text(&format!("cross_check{sfx}.json"), &(json + "\n"))?;
    }
    Ok(())
}

fn simulate(src: &ConfigSource, ov: Overrides, ctx: &mut Ctx) -> Result<()> {
    let f = scenario_from(src, ov)?;
    record_inputs(ctx.manifest, src, Some(&f))?;
    ctx.manifest.config_echo = f.to_toml();
    let r = run_scenario(&f.scenario)?;
    write_result(ctx, "", &r)
}

fn compare(src: &ConfigSource, ov: Overrides, ctx: &mut Ctx) -> Result<()> {
    let f = scenario_from(src, ov)?;
    record_inputs(ctx.manifest, src, Some(&f))?;
    ctx.manifest.config_echo = f.to_toml();
    let report = compare_controllers(&f.scenario, &f.compare);
    let mut table = String::from(
        "variant,ok,settling_time,steady_e_D,steady_theta_D,steady_theta_hat,steady_gamma_fb,sway_amplitude,overshoot,saturation_fraction,sign_changes,error\n",
    );
    let mut first_err = None;
    for run in &report.runs {
        match &run.outcome {
            Ok(r) => {
                write_result(ctx, run.variant.as_str(), r)?;
                let m = &r.metrics;
                let _ = writeln!(
                    table,
                    "{},1,{},{},{},{},{},{},{},{},{},",
                    run.variant,
                    m.settling_time.map_or("".into(), |t| t.to_string()),
                    m.steady_e_d,
                    m.steady_theta_d,
                    m.steady_theta_hat,
                    m.steady_gamma_fb,
                    m.sway_amplitude,
                    m.overshoot,
                    m.saturation_fraction,
                    m.sign_changes
                );
            }
            Err(e) => {
                log::error!("variant {} failed: {e}", run.variant);
                first_err.get_or_insert_with(|| e.clone());
                let _ = writeln!(
                    table,
                    "{},0,,,,,,,,,,\"{}\"",
                    run.variant,
                    e.replace('"', "'")
                );
            }
        }
    }
    ctx.text("comparison.csv", &table)?;
    let mut deltas = String::from(
        "reference,variant,max_abs_e_D,max_abs_theta_D,max_abs_gamma_des,max_position\n",
    );
    for d in &report.deltas {
        let _ = writeln!(
            deltas,
            "{},{},{},{},{},{}",
            d.reference,
            d.variant,
            d.max_abs_e_d,
            d.max_abs_theta_d,
            d.max_abs_gamma_des,
            d.max_position
        );
    }
    ctx.text("deltas.csv", &deltas)?;
    if report.runs.iter().all(|r| r.outcome.is_err()) {
        return Err(Error::Domain(format!(
            "every variant failed; first error: {}",
            first_err.unwrap_or_default()
        )));
    }
    Ok(())
}

fn scan_csv(cells: &[ScanCell]) -> String {
    let mut out = String::from("k1,k2,kappa0,stable,marginal,M_max,omega_m\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.k1,
            c.k2,
            c.kappa0,
            u8::from(c.stable),
            u8::from(c.marginal),
            c.m_max,
            c.omega_m
        );
    }
    out
}

fn stability_map(src: &ConfigSource, ctx: &mut Ctx) -> Result<()> {
    let a = analysis_from(src)?;
    record_inputs(ctx.manifest, src, None)?;
    ctx.manifest.config_echo = a.to_toml();
    let cells = stability_region_scan(
        a.k1_range,
        a.k2_range,
        &a.kappas(),
        &a.vehicle,
        a.resolution,
    )?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    if failed > 0 {
        log::warn!("{failed} cells could not be evaluated (recorded as unstable with NaN peak)");
    }
    ctx.text("stability_map.csv", &scan_csv(&cells))
}

fn freq(src: &ConfigSource, ctx: &mut Ctx) -> Result<()> {
    let a = analysis_from(src)?;
    record_inputs(ctx.manifest, src, None)?;
    ctx.manifest.config_echo = a.to_toml();
    if a.points.is_empty() {
        return Err(ConfigError::Missing(vec!["[[points]]".into()]).into());
    }
    let omegas = log_space(a.omega_min, a.omega_max, a.omega_points);
    let mut peaks =
        String::from("point,k1,k2,kappa0,stable,M_max,omega_m,M_max_numeric,omega_m_numeric\n");
    for pt in &a.points {
        for (i, &kappa0) in a.kappas().iter().enumerate() {
            let fr = freq_response_on(kappa0, pt.gains, &a.vehicle, &omegas)?;
            let mut csv = String::from("omega_rad_s,M\n");
            for (w, m) in &fr.samples {
                let _ = writeln!(csv, "{w},{m}");
            }
            ctx.text(&format!("freq_response_{}_k{i}.csv", pt.name), &csv)?;
            let num = numeric_peak(
                kappa0,
                pt.gains,
                &a.vehicle,
                a.omega_min,
                a.omega_max,
                a.omega_points,
            )?;
            let _ = writeln!(
                peaks,
                "{},{},{},{},{},{},{},{},{}",
                pt.name,
                pt.gains.k1,
                pt.gains.k2,
                kappa0,
                u8::from(fr.stable),
                fr.peak.m_max,
                fr.peak.omega_m,
                num.m_max,
                num.omega_m
            );
        }
    }
    ctx.text("peaks.csv", &peaks)
}

/// Feedforward error and desired yaw-angle error against curvature for
/// sensor offsets of 2, 3 and 4 m on a 2.57 m wheelbase.
pub fn offset_terms_csv() -> Result<String> {
    let offsets = [2.0, 3.0, 4.0];
    let mut out = String::from(
        "kappa,dgamma_ff_d2,dgamma_ff_d3,dgamma_ff_d4,theta0_d2,theta0_d3,theta0_d4\n",
    );
    for i in 0..=200 {
        let kappa = i as f64 * 1e-3;
        let mut row = vec![kappa.to_string()];
        for d in offsets {
            let p = VehicleParams {
                sensor_offset: d,
                ..VehicleParams::reference()
            };
            row.push(feedforward_error(kappa, &p)?.to_string());
        }
        for d in offsets {
            row.push(desired_yaw_error(kappa, d)?.to_string());
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

fn figs_repro(ov: Overrides, ctx: &mut Ctx) -> Result<()> {
    let mut echo = String::new();
    ctx.text("offset_terms.csv", &offset_terms_csv()?)?;
    for (name, text) in PRESETS {
        let src = ConfigSource {
            label: format!("{PRESET_PREFIX}{name}"),
            text: text.to_string(),
            base_dir: None,
        };
        let dir = ctx.out_dir.join(name);
        ensure_dir(&dir)?;
        let mut sub = RunManifest::new(name);
        let mut sctx = Ctx {
            out_dir: &dir,
            manifest: &mut sub,
        };
        if name.starts_with("gain_plane") {
            stability_map(&src, &mut sctx)?;
            sctx.manifest.inputs.clear();
            freq(&src, &mut sctx)?;
        } else {
            compare(&src, ov, &mut sctx)?;
        }
        let _ = writeln!(echo, "# ---- {name} ----\n{}", sub.config_echo);
        ctx.manifest.inputs.extend(sub.inputs);
        ctx.manifest.outputs.extend(sub.outputs);
    }
    ctx.manifest.config_echo = echo;
    Ok(())
}

pub enum Command<'a> {
    Simulate(&'a str),
    Compare(&'a str),
    StabilityMap(&'a str),
    FreqResponse(&'a str),
    FigsRepro,
}

impl Command<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
            Command::StabilityMap(_) => "stability-map",
            Command::FreqResponse(_) => "freq-response",
            Command::FigsRepro => "figs-repro",
        }
    }
}

/// Run one command into `out_dir` and write its manifest. The manifest is
/// written on failure too (when the directory is usable) with the error and
/// exit status filled in.
pub fn execute(cmd: Command, out_dir: &FsPath, ov: Overrides) -> (RunManifest, Result<()>) {
    let start = Instant::now();
    let mut manifest = RunManifest::new(cmd.name());
    let result = ensure_dir(out_dir).and_then(|()| {
        let mut ctx = Ctx {
            out_dir,
            manifest: &mut manifest,
        };
        match cmd {
            Command::Simulate(c) => simulate(&read_config_source(c)?, ov, &mut ctx),
            Command::Compare(c) => compare(&read_config_source(c)?, ov, &mut ctx),
            Command::StabilityMap(c) => stability_map(&read_config_source(c)?, &mut ctx),
            Command::FreqResponse(c) => freq(&read_config_source(c)?, &mut ctx),
            Command::FigsRepro => figs_repro(ov, &mut ctx),
        }
    });
    manifest.wall_clock_s = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.exit_status = e.exit_code();
        manifest.error = Some(e.to_string());
    }
    if out_dir.is_dir() {
        if let Err(e) = manifest.write(out_dir) {
            log::error!("could not write manifest: {e}");
            if result.is_ok() {
                manifest.exit_status = e.exit_code();
                return (manifest, Err(e));
            }
        }
    }
    (manifest, result)
}

pub fn cmd_simulate(config: &str, out_dir: &FsPath, ov: Overrides) -> Result<RunManifest> {
    let (m, r) = execute(Command::Simulate(config), out_dir, ov);
    r.map(|()| m)
}

pub fn cmd_compare(config: &str, out_dir: &FsPath, ov: Overrides) -> Result<RunManifest> {
    let (m, r) = execute(Command::Compare(config), out_dir, ov);
    r.map(|()| m)
}

pub fn cmd_stability_map(config: &str, out_dir: &FsPath) -> Result<RunManifest> {
    let (m, r) = execute(Command::StabilityMap(config), out_dir, Overrides::default());
    r.map(|()| m)
}

pub fn cmd_freq_response(config: &str, out_dir: &FsPath) -> Result<RunManifest> {
    let (m, r) = execute(Command::FreqResponse(config), out_dir, Overrides::default());
    r.map(|()| m)
}

pub fn cmd_figs_repro(out_dir: &FsPath, ov: Overrides) -> Result<RunManifest> {
    let (m, r) = execute(Command::FigsRepro, out_dir, ov);
    r.map(|()| m)
}
