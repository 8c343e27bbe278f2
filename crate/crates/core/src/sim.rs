//! Fixed-step closed-loop simulation, tracking metrics and controller
//! comparisons.
//!
//! The path-frame model is the primary integration. The earth-frame model
//! can run alongside it as an independent closed loop: at every RK4 stage
//! the earth-frame state is projected onto the path to obtain the errors fed
//! to the controller. Agreement of the two runs checks the frame transforms
//! and the projection.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::Path as FsPath;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controller::{control, ControlConfig, SteeringDecision, Variant};
use crate::error::{Error, Result};
use crate::geometry::{
    path_to_earth, project_to_earth_errors, wrap_angle_error, EarthState, Path, PathKind, PathSpec,
    PathState,
};
use crate::integrate::rk4_step;
use crate::vehicle::{earth_derivatives, path_derivatives, VehicleParams};

/// `|1 - e kappa|` below this aborts the run.
pub const SINGULARITY_TOLERANCE: f64 = 1e-6;
/// `|e_D|` threshold for the settling time.
pub const SETTLING_THRESHOLD: f64 = 0.01;
/// Fraction of the horizon, counted from the end, averaged for steady values.
pub const STEADY_FRACTION: f64 = 0.2;
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Path,
    Earth,
    Both,
}

impl Frame {
    pub fn as_str(self) -> &'static str {
        match self {
            Frame::Path => "path",
            Frame::Earth => "earth",
            Frame::Both => "both",
        }
    }
}

impl FromStr for Frame {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "path" => Ok(Frame::Path),
            "earth" => Ok(Frame::Earth),
            "both" => Ok(Frame::Both),
            other => Err(format!(
                "unknown frame {other:?} (expected path | earth | both)"
            )),
        }
    }
}

/// When the steering law is evaluated inside an RK4 step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SteeringUpdate {
    /// At every stage, so the closed loop is integrated as one smooth ODE.
    Stage,
    /// Once at the start of the step and held for all four stages.
    Step,
}

impl SteeringUpdate {
    pub fn as_str(self) -> &'static str {
        match self {
            SteeringUpdate::Stage => "stage",
            SteeringUpdate::Step => "step",
        }
    }
}

impl FromStr for SteeringUpdate {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stage" => Ok(SteeringUpdate::Stage),
            "step" => Ok(SteeringUpdate::Step),
            other => Err(format!(
                "unknown steering update {other:?} (expected stage | step)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub path: PathSpec,
    pub vehicle: VehicleParams,
    pub control: ControlConfig,
    pub initial: PathState,
    pub dt: f64,
    pub t_end: f64,
    pub frame: Frame,
    pub steering_update: SteeringUpdate,
}

impl ScenarioConfig {
    /// Horizon used when a config does not set one: 30 s, or 1.2 times the
    /// time needed to drive every curvature period of a periodic road.
    pub fn default_t_end(path: &PathSpec, speed: f64) -> f64 {
        match &path.kind {
            PathKind::Cosine {
                period, periods, ..
            } => *periods as f64 * period / speed * 1.2,
            _ => 30.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.path.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.t_end > self.dt && self.t_end.is_finite()) {
            return Err(Error::param(
                "t_end",
                format!("must exceed dt, got {}", self.t_end),
            ));
        }
        let PathState { s, e, theta } = self.initial;
        if !(s.is_finite() && e.is_finite() && theta.is_finite()) {
            return Err(Error::param("initial", "state must be finite"));
        }
        Ok(())
    }

    /// Number of integration steps; the horizon is rounded to a whole number
    /// of steps.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

/// One recorded instant. Field order matches the trajectory CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Sample {
    pub t: f64,
    pub s_d: f64,
    pub e_d: f64,
    pub theta_d: f64,
    pub theta_0: f64,
    pub theta_hat: f64,
    pub gamma_des: f64,
    pub gamma_ff: f64,
    pub gamma_fb: f64,
    pub x_a: f64,
    pub y_a: f64,
    pub psi: f64,
    pub kappa_d: f64,
    #[serde(skip)]
    pub feedback_argument: f64,
    #[serde(skip)]
    pub clamped: bool,
}

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "t",
    "s_D",
    "e_D",
    "theta_D",
    "theta_0",
    "theta_hat",
    "gamma_des",
    "gamma_ff",
    "gamma_fb",
    "x_A",
    "y_A",
    "psi",
    "kappa_D",
];

impl Sample {
    fn new(t: f64, ps: &PathState, es: &EarthState, kappa: f64, dec: &SteeringDecision) -> Self {
        Sample {
            t,
            s_d: ps.s,
            e_d: ps.e,
            theta_d: ps.theta,
            theta_0: dec.theta0,
            theta_hat: ps.theta - dec.theta0,
            gamma_des: dec.gamma_des,
            gamma_ff: dec.gamma_ff,
            gamma_fb: dec.gamma_fb,
            x_a: es.x,
            y_a: es.y,
            psi: es.psi,
            kappa_d: kappa,
            feedback_argument: dec.feedback_argument,
            clamped: dec.clamped(),
        }
    }

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.s_d,
            self.e_d,
            self.theta_d,
            self.theta_0,
            self.theta_hat,
            self.gamma_des,
            self.gamma_ff,
            self.gamma_fb,
            self.x_a,
            self.y_a,
            self.psi,
            self.kappa_d,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub frame: Frame,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least the initial sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingMetrics {
    /// First time after which `|e_D|` stays below [`SETTLING_THRESHOLD`].
    pub settling_time: Option<f64>,
    pub steady_e_d: f64,
    pub steady_theta_d: f64,
    pub steady_theta_hat: f64,
    pub steady_gamma_fb: f64,
    /// Half peak-to-peak of `e_D` over the last complete curvature period
    /// (or the steady window on roads without one).
    pub sway_amplitude: f64,
    /// Largest excursion of `e_D` past the path, on the side opposite the
    /// initial deviation.
    pub overshoot: f64,
    /// Fraction of samples whose unwrapped feedback exceeds the wrapper bound.
    pub saturation_fraction: f64,
    /// Fraction of samples where the physical steering limit clipped the command.
    pub clamp_fraction: f64,
    pub sign_changes: usize,
    pub max_abs_gamma_fb: f64,
    pub final_e_d: f64,
    pub final_theta_d: f64,
    pub final_s_d: f64,
}

/// Largest disagreement between the earth-frame and path-frame runs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct CrossCheck {
    pub max_position_error: f64,
    pub max_heading_error: f64,
    pub max_lateral_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub trajectory: Trajectory,
    pub metrics: TrackingMetrics,
    pub cross_check: Option<CrossCheck>,
    /// The earth-frame trajectory when `frame = both`.
    pub earth_trajectory: Option<Trajectory>,
}

fn check_trackable(path: &Path, p: &VehicleParams) -> Result<()> {
    let dk = p.sensor_offset.abs() * path.max_abs_curvature();
    if dk >= 1.0 {
        return Err(Error::Untrackable(dk));
    }
    Ok(())
}

fn check_singularity(ps: &PathState, kappa: f64) -> Result<()> {
    let c = 1.0 - ps.e * kappa;
    if c.abs() < SINGULARITY_TOLERANCE {
        return Err(Error::Singularity { s: ps.s, value: c });
    }
    Ok(())
}

struct Loop<'a> {
    path: &'a Path,
    cfg: &'a ScenarioConfig,
}

impl Loop<'_> {
    fn decide(&self, ps: &PathState) -> Result<(f64, SteeringDecision)> {
        let (kappa, _) = self.path.curvature_at(ps.s)?;
        check_singularity(ps, kappa)?;
        let wrapped = PathState {
            theta: wrap_angle_error(ps.theta, 0.0),
            ..*ps
        };
        Ok((
            kappa,
            control(&wrapped, kappa, &self.cfg.control, &self.cfg.vehicle)?,
        ))
    }

    fn path_field(&self, z: &[f64; 3], held: Option<f64>) -> Result<[f64; 3]> {
        let ps = PathState {
            s: z[0],
            e: z[1],
            theta: z[2],
        };
        let (kappa, dec) = self.decide(&ps)?;
        let gamma = held.unwrap_or(dec.applied);
        path_derivatives(&ps, gamma, &self.cfg.vehicle, kappa)
    }

    fn run_path(&self) -> Result<Trajectory> {
        let cfg = self.cfg;
        let n = cfg.steps();
        let mut samples = Vec::with_capacity(n + 1);
        let mut z = [
            cfg.initial.s,
            cfg.initial.e,
            wrap_angle_error(cfg.initial.theta, 0.0),
        ];
        for i in 0..=n {
            let t = i as f64 * cfg.dt;
            let ps = PathState {
                s: z[0],
                e: z[1],
                theta: z[2],
            };
            let (kappa, dec) = self.decide(&ps)?;
            samples.push(Sample::new(
                t,
                &ps,
                &path_to_earth(self.path, &ps)?,
                kappa,
                &dec,
            ));
            if i == n {
                break;
            }
            let held = match cfg.steering_update {
                SteeringUpdate::Stage => None,
                SteeringUpdate::Step => Some(dec.applied),
            };
            z = rk4_step(|y| self.path_field(y, held), t, &z, cfg.dt)?;
            z[2] = wrap_angle_error(z[2], 0.0);
        }
        Ok(Trajectory {
            dt: cfg.dt,
            frame: Frame::Path,
            samples,
        })
    }

    fn run_earth(&self) -> Result<Trajectory> {
        let cfg = self.cfg;
        let n = cfg.steps();
        let mut samples = Vec::with_capacity(n + 1);
        let start = path_to_earth(self.path, &cfg.initial)?;
        let mut z = [start.x, start.y, start.psi];
        let mut s_hint = cfg.initial.s;
        for i in 0..=n {
            let t = i as f64 * cfg.dt;
            let es = EarthState {
                x: z[0],
                y: z[1],
                psi: z[2],
            };
            let ps = project_to_earth_errors(self.path, &es, s_hint)?;
            s_hint = ps.s;
            let (kappa, dec) = self.decide(&ps)?;
            samples.push(Sample::new(t, &ps, &es, kappa, &dec));
            if i == n {
                break;
            }
            let held = match cfg.steering_update {
                SteeringUpdate::Stage => None,
                SteeringUpdate::Step => Some(dec.applied),
            };
            let hint = s_hint;
            z = rk4_step(
                |y| {
                    let es = EarthState {
                        x: y[0],
                        y: y[1],
                        psi: y[2],
                    };
                    let gamma = match held {
                        Some(g) => g,
                        None => {
                            self.decide(&project_to_earth_errors(self.path, &es, hint)?)?
                                .1
                                .applied
                        }
                    };
                    earth_derivatives(&es, gamma, &cfg.vehicle)
                },
                t,
                &z,
                cfg.dt,
            )?;
        }
        Ok(Trajectory {
            dt: cfg.dt,
            frame: Frame::Earth,
            samples,
        })
    }
}

fn cross_check(a: &Trajectory, b: &Trajectory) -> CrossCheck {
    let mut out = CrossCheck::default();
    for (p, q) in a.samples.iter().zip(&b.samples) {
        out.max_position_error = out
            .max_position_error
            .max((p.x_a - q.x_a).hypot(p.y_a - q.y_a));
        out.max_heading_error = out
            .max_heading_error
            .max(wrap_angle_error(p.psi, q.psi).abs());
        out.max_lateral_error = out.max_lateral_error.max((p.e_d - q.e_d).abs());
    }
    out
}

/// Integrate the closed loop and compute tracking metrics.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    if cfg.vehicle.sensor_offset < 0.0 {
        log::warn!(
            "negative sensor offset d = {}: sensor behind the rear axle",
            cfg.vehicle.sensor_offset
        );
    }
    let path = Path::new(cfg.path.clone())?;
    check_trackable(&path, &cfg.vehicle)?;
    let lp = Loop { path: &path, cfg };
    let (primary, earth) = match cfg.frame {
        Frame::Path => (lp.run_path()?, None),
        Frame::Earth => (lp.run_earth()?, None),
        Frame::Both => {
            let (a, b) = rayon::join(|| lp.run_path(), || lp.run_earth());
            (a?, Some(b?))
        }
    };
    let metrics = compute_metrics(&primary, &path, &cfg.control, cfg.initial.e);
    if metrics.clamp_fraction > 0.0 {
        log::warn!(
            "steering command exceeded the physical limit on {:.3}% of samples and was clamped",
            100.0 * metrics.clamp_fraction
        );
    }
    let cross = earth.as_ref().map(|e| cross_check(&primary, e));
    Ok(ScenarioResult {
        trajectory: primary,
        metrics,
        cross_check: cross,
        earth_trajectory: earth,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Number of sign reversals of `e_D` (exact zeros are skipped) among
/// samples with `t < before`.
pub fn sign_changes(samples: &[Sample], before: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for s in samples.iter().take_while(|s| s.t < before) {
        if s.e_d == 0.0 {
            continue;
        }
        if last != 0.0 && (s.e_d > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = s.e_d;
    }
    count
}

fn half_range(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if lo > hi {
        f64::NAN
    } else {
        0.5 * (hi - lo)
    }
}

pub fn compute_metrics(
    traj: &Trajectory,
    path: &Path,
    ctl: &ControlConfig,
    e0: f64,
) -> TrackingMetrics {
    let samples = &traj.samples;
    let n = samples.len();
    let last = traj.last();
    let t_end = last.t;

    let settling_time = match samples
        .iter()
        .rposition(|s| s.e_d.abs() >= SETTLING_THRESHOLD)
    {
        None => Some(0.0),
        Some(i) if i + 1 < n => Some(samples[i + 1].t),
        Some(_) => None,
    };

    let steady_start = t_end * (1.0 - STEADY_FRACTION);
    let steady = || samples.iter().filter(move |s| s.t >= steady_start);

    let sway_amplitude = match path.curvature_period() {
        Some((period, count)) => {
            let reached = (last.s_d / period).floor().min(count as f64);
            if reached >= 1.0 {
                let (lo, hi) = ((reached - 1.0) * period, reached * period);
                half_range(
                    samples
                        .iter()
                        .filter(|s| s.s_d >= lo && s.s_d <= hi)
                        .map(|s| s.e_d),
                )
            } else {
                half_range(steady().map(|s| s.e_d))
            }
        }
        None => half_range(steady().map(|s| s.e_d)),
    };

    let overshoot = if e0 < 0.0 {
        samples.iter().map(|s| s.e_d).fold(0.0, f64::max)
    } else if e0 > 0.0 {
        samples.iter().map(|s| -s.e_d).fold(0.0, f64::max)
    } else {
        samples.iter().map(|s| s.e_d.abs()).fold(0.0, f64::max)
    };

    let saturated = samples
        .iter()
        .filter(|s| s.feedback_argument.abs() > ctl.g_sat())
        .count();
    let clamped = samples.iter().filter(|s| s.clamped).count();

    TrackingMetrics {
        settling_time,
        steady_e_d: mean(steady().map(|s| s.e_d)),
        steady_theta_d: mean(steady().map(|s| s.theta_d)),
        steady_theta_hat: mean(steady().map(|s| s.theta_hat)),
        steady_gamma_fb: mean(steady().map(|s| s.gamma_fb)),
        sway_amplitude,
        overshoot,
        saturation_fraction: saturated as f64 / n as f64,
        clamp_fraction: clamped as f64 / n as f64,
        sign_changes: sign_changes(samples, f64::INFINITY),
        max_abs_gamma_fb: samples.iter().map(|s| s.gamma_fb.abs()).fold(0.0, f64::max),
        final_e_d: last.e_d,
        final_theta_d: last.theta_d,
        final_s_d: last.s_d,
    }
}

/// Outcome of one variant in a comparison.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub variant: Variant,
    pub outcome: std::result::Result<ScenarioResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalDelta {
    pub reference: Variant,
    pub variant: Variant,
    pub max_abs_e_d: f64,
    pub max_abs_theta_d: f64,
    pub max_abs_gamma_des: f64,
    pub max_position: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub runs: Vec<VariantRun>,
    /// Deltas of every successful run against the first successful one.
    pub deltas: Vec<SignalDelta>,
}

impl ComparisonReport {
    pub fn result(&self, variant: Variant) -> Option<&ScenarioResult> {
        self.runs
            .iter()
            .find(|r| r.variant == variant)
            .and_then(|r| r.outcome.as_ref().ok())
    }
}

/// Run the same scenario once per variant. A failing variant is recorded in
/// the report rather than aborting the comparison.
pub fn compare_controllers(cfg: &ScenarioConfig, variants: &[Variant]) -> ComparisonReport {
    use rayon::prelude::*;
    let runs: Vec<VariantRun> = variants
        .par_iter()
        .map(|&variant| {
            let mut c = cfg.clone();
            c.control = c.control.with_variant(variant);
            VariantRun {
                variant,
                outcome: run_scenario(&c).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let mut deltas = Vec::new();
    let mut ok = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| (r.variant, o)));
    if let Some((ref_variant, reference)) = ok.next() {
        for (variant, other) in ok {
            let mut d = SignalDelta {
                reference: ref_variant,
                variant,
                max_abs_e_d: 0.0,
                max_abs_theta_d: 0.0,
                max_abs_gamma_des: 0.0,
                max_position: 0.0,
            };
            for (a, b) in reference
                .trajectory
                .samples
                .iter()
                .zip(&other.trajectory.samples)
            {
                d.max_abs_e_d = d.max_abs_e_d.max((a.e_d - b.e_d).abs());
                d.max_abs_theta_d = d
                    .max_abs_theta_d
                    .max(wrap_angle_error(a.theta_d, b.theta_d).abs());
                d.max_abs_gamma_des = d.max_abs_gamma_des.max((a.gamma_des - b.gamma_des).abs());
                d.max_position = d.max_position.max((a.x_a - b.x_a).hypot(a.y_a - b.y_a));
            }
            deltas.push(d);
        }
    }
    ComparisonReport { runs, deltas }
}

/// Write a trajectory CSV with the fixed column set. Values use the shortest
/// representation that round-trips, so identical runs give identical bytes.
pub fn write_trajectory_csv(path: &FsPath, traj: &Trajectory) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    for s in &traj.samples {
        w.write_record(s.values().iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

/// Flat `key=value` lines, one metric per line.
pub fn metrics_to_kv(m: &TrackingMetrics) -> String {
    let mut out = String::new();
    let rows: [(&str, String); 15] = [
        ("settling_time_s", fmt_opt(m.settling_time)),
        ("steady_e_D_m", m.steady_e_d.to_string()),
        ("steady_theta_D_rad", m.steady_theta_d.to_string()),
        ("steady_theta_hat_rad", m.steady_theta_hat.to_string()),
        ("steady_gamma_fb_rad", m.steady_gamma_fb.to_string()),
        ("sway_amplitude_m", m.sway_amplitude.to_string()),
        ("overshoot_m", m.overshoot.to_string()),
        ("saturation_fraction", m.saturation_fraction.to_string()),
        ("clamp_fraction", m.clamp_fraction.to_string()),
        ("sign_changes", m.sign_changes.to_string()),
        ("max_abs_gamma_fb_rad", m.max_abs_gamma_fb.to_string()),
        ("final_e_D_m", m.final_e_d.to_string()),
        ("final_theta_D_rad", m.final_theta_d.to_string()),
        ("final_s_D_m", m.final_s_d.to_string()),
        ("settling_threshold_m", SETTLING_THRESHOLD.to_string()),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}

pub fn metrics_to_json(m: &TrackingMetrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialise")
}

pub(crate) fn write_text(path: &FsPath, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
