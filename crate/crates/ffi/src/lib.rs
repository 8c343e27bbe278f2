//! C interface to `latsteer`.
//!
//! Every function returns a [`LatStatus`]; results come back through out
//! pointers. Paths, controllers, scenarios and results are opaque handles
//! owned by the caller and released with the matching `*_free`. After a
//! failure, [`lat_last_error`] describes it for the calling thread.
//!
//! Handles are not synchronised: do not use one handle from two threads at
//! the same time. Distinct handles may be used concurrently.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path as FsPath;

use latsteer::analysis;
use latsteer::config::parse_scenario_config;
use latsteer::controller::{self, ControlConfig, Gains, Variant};
use latsteer::geometry::{self, EarthState, Path, PathKind, PathSpec, PathState};
use latsteer::sim::{self, ScenarioConfig, ScenarioResult};
use latsteer::vehicle::VehicleParams;
use latsteer::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Outside the model's domain: untrackable curvature, singularity,
    /// failed projection or aborted integration.
    Domain = 3,
    Io = 4,
    Config = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatVariant {
    Full = 0,
    Naive = 1,
    Unwrapped = 2,
    Linear = 3,
}

impl From<LatVariant> for Variant {
    fn from(v: LatVariant) -> Self {
        match v {
            LatVariant::Full => Variant::Full,
            LatVariant::Naive => Variant::Naive,
            LatVariant::Unwrapped => Variant::Unwrapped,
            LatVariant::Linear => Variant::Linear,
        }
    }
}

/// Vehicle geometry and speed. Angles in radians, lengths in metres.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LatVehicle {
    pub wheelbase: f64,
    /// Distance from the rear axle to the sensor point, positive forward.
    pub sensor_offset: f64,
    pub max_steer: f64,
    pub speed: f64,
}

impl LatVehicle {
    fn params(&self) -> Result<VehicleParams, Error> {
        VehicleParams::new(
            self.wheelbase,
            self.sensor_offset,
            self.max_steer,
            self.speed,
        )
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatPathState {
    pub s: f64,
    pub e: f64,
    pub theta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatSteering {
    pub gamma_des: f64,
    pub gamma_ff: f64,
    pub gamma_fb: f64,
    pub applied: f64,
    pub theta0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatStability {
    /// 1 if the linearised loop is asymptotically stable.
    pub stable: i32,
    /// 1 if a Routh-Hurwitz quantity is within the boundary tolerance of zero.
    pub marginal: i32,
    /// 1 if the gains meet one of the sufficient conditions.
    pub sufficient: i32,
    pub eig_re: [f64; 2],
    pub eig_im: [f64; 2],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatSample {
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
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LatMetrics {
    /// Negative when the deviation never settles.
    pub settling_time: f64,
    pub steady_e_d: f64,
    pub steady_theta_d: f64,
    pub steady_gamma_fb: f64,
    pub sway_amplitude: f64,
    pub overshoot: f64,
    pub saturation_fraction: f64,
    pub max_abs_gamma_fb: f64,
    pub sign_changes: usize,
}

pub struct LatPath(Path);
pub struct LatController {
    cfg: ControlConfig,
    params: VehicleParams,
}
pub struct LatScenario(ScenarioConfig);
pub struct LatResult(ScenarioResult);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LatStatus {
    match e {
        Error::Config(_) => LatStatus::Config,
        Error::InvalidParameter { .. } | Error::InvalidPath(_) => LatStatus::InvalidArgument,
        Error::Io { .. } | Error::Csv { .. } => LatStatus::Io,
        _ => LatStatus::Domain,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), LatStatusError>) -> LatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LatStatus::Ok
        }
        Ok(Err(LatStatusError(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LatStatus::Panic
        }
    }
}

struct LatStatusError(LatStatus, String);

impl From<Error> for LatStatusError {
    fn from(e: Error) -> Self {
        LatStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> LatStatusError {
    LatStatusError(LatStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, LatStatusError> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LatStatusError> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, LatStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| LatStatusError(LatStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn new_path(kind: PathKind, out_path: *mut *mut LatPath) -> LatStatus {
    guard(|| {
        let slot = out(out_path, "out_path")?;
        let path = geometry::build_path(PathSpec::new(kind))?;
        *slot = Box::into_raw(Box::new(LatPath(path)));
        Ok(())
    })
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn lat_path_straight(out_path: *mut *mut LatPath) -> LatStatus {
    new_path(PathKind::Straight, out_path)
}

#[no_mangle]
pub unsafe extern "C" fn lat_path_circular(radius: f64, out_path: *mut *mut LatPath) -> LatStatus {
    new_path(PathKind::Circular { radius }, out_path)
}

/// Road whose curvature rises and falls as a raised cosine, `periods` times.
#[no_mangle]
pub unsafe extern "C" fn lat_path_cosine(
    kappa_max: f64,
    period: f64,
    periods: u32,
    out_path: *mut *mut LatPath,
) -> LatStatus {
    new_path(
        PathKind::Cosine {
            kappa_max,
            period,
            periods,
        },
        out_path,
    )
}

/// Path from a curvature table; `s` must be strictly increasing.
#[no_mangle]
pub unsafe extern "C" fn lat_path_sampled(
    s: *const f64,
    kappa: *const f64,
    len: usize,
    out_path: *mut *mut LatPath,
) -> LatStatus {
    if s.is_null() || kappa.is_null() {
        return guard(|| Err(null("table")));
    }
    let table: Vec<(f64, f64)> = (0..len).map(|i| (*s.add(i), *kappa.add(i))).collect();
    new_path(PathKind::Sampled { table }, out_path)
}

#[no_mangle]
pub unsafe extern "C" fn lat_path_free(path: *mut LatPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Curvature and its arc-length derivative at `s`.
#[no_mangle]
pub unsafe extern "C" fn lat_path_curvature(
    path: *const LatPath,
    s: f64,
    kappa: *mut f64,
    kappa_rate: *mut f64,
) -> LatStatus {
    guard(|| {
        let (k, dk) = deref(path, "path")?.0.curvature_at(s)?;
        *out(kappa, "kappa")? = k;
        if let Some(r) = kappa_rate.as_mut() {
            *r = dk;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_path_pose(
    path: *const LatPath,
    s: f64,
    pose: *mut LatPose,
) -> LatStatus {
    guard(|| {
        let p = deref(path, "path")?.0.pose_at(s)?;
        *out(pose, "pose")? = LatPose {
            x: p.x,
            y: p.y,
            heading: p.heading,
        };
        Ok(())
    })
}

/// Path-frame coordinates of an earth-frame sensor pose, searching near `s_hint`.
#[no_mangle]
pub unsafe extern "C" fn lat_path_project(
    path: *const LatPath,
    pose: LatPose,
    s_hint: f64,
    state: *mut LatPathState,
) -> LatStatus {
    guard(|| {
        let es = EarthState {
            x: pose.x,
            y: pose.y,
            psi: pose.heading,
        };
        let ps = geometry::project_to_earth_errors(&deref(path, "path")?.0, &es, s_hint)?;
        *out(state, "state")? = LatPathState {
            s: ps.s,
            e: ps.e,
            theta: ps.theta,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_controller_new(
    vehicle: LatVehicle,
    k1: f64,
    k2: f64,
    max_lateral_accel: f64,
    variant: LatVariant,
    out_ctl: *mut *mut LatController,
) -> LatStatus {
    guard(|| {
        let slot = out(out_ctl, "out_ctl")?;
        let params = vehicle.params()?;
        let cfg = ControlConfig::new(
            Gains::new(k1, k2),
            max_lateral_accel,
            variant.into(),
            &params,
        )?;
        *slot = Box::into_raw(Box::new(LatController { cfg, params }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_controller_free(ctl: *mut LatController) {
    if !ctl.is_null() {
        drop(Box::from_raw(ctl));
    }
}

/// Bound applied to the feedback term by the wrapper (rad).
#[no_mangle]
pub unsafe extern "C" fn lat_controller_feedback_bound(
    ctl: *const LatController,
    bound: *mut f64,
) -> LatStatus {
    guard(|| {
        *out(bound, "bound")? = deref(ctl, "ctl")?.cfg.g_sat();
        Ok(())
    })
}

/// Steering command for the sensor-point state at path curvature `kappa`.
#[no_mangle]
pub unsafe extern "C" fn lat_control(
    ctl: *const LatController,
    state: LatPathState,
    kappa: f64,
    steering: *mut LatSteering,
) -> LatStatus {
    guard(|| {
        let c = deref(ctl, "ctl")?;
        let ps = PathState {
            s: state.s,
            e: state.e,
            theta: state.theta,
        };
        let d = controller::control(&ps, kappa, &c.cfg, &c.params)?;
        *out(steering, "steering")? = LatSteering {
            gamma_des: d.gamma_des,
            gamma_ff: d.gamma_ff,
            gamma_fb: d.gamma_fb,
            applied: d.applied,
            theta0: d.theta0,
        };
        Ok(())
    })
}

/// Local stability of the closed loop linearised on a circle of curvature `kappa0`.
#[no_mangle]
pub unsafe extern "C" fn lat_stability(
    vehicle: LatVehicle,
    kappa0: f64,
    k1: f64,
    k2: f64,
    result: *mut LatStability,
) -> LatStatus {
    guard(|| {
        let p = vehicle.params()?;
        let v = analysis::is_stable(kappa0, Gains::new(k1, k2), &p)?;
        *out(result, "result")? = LatStability {
            stable: v.necessary_sufficient as i32,
            marginal: v.marginal as i32,
            sufficient: v.sufficient.is_some() as i32,
            eig_re: [v.eigenvalues[0].re, v.eigenvalues[1].re],
            eig_im: [v.eigenvalues[0].im, v.eigenvalues[1].im],
        };
        Ok(())
    })
}

/// Lateral deviation amplitude per unit curvature amplitude at `omega` (m^2).
#[no_mangle]
pub unsafe extern "C" fn lat_amplification(
    vehicle: LatVehicle,
    kappa0: f64,
    k1: f64,
    k2: f64,
    omega: f64,
    m: *mut f64,
) -> LatStatus {
    guard(|| {
        let p = vehicle.params()?;
        *out(m, "m")? = analysis::amplification(omega, kappa0, Gains::new(k1, k2), &p)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_peak_amplification(
    vehicle: LatVehicle,
    kappa0: f64,
    k1: f64,
    k2: f64,
    m_max: *mut f64,
    omega_m: *mut f64,
) -> LatStatus {
    guard(|| {
        let p = vehicle.params()?;
        let peak = analysis::peak_amplification(kappa0, Gains::new(k1, k2), &p)?;
        *out(m_max, "m_max")? = peak.m_max;
        *out(omega_m, "omega_m")? = peak.omega_m;
        Ok(())
    })
}

/// Parses a scenario from TOML text. Relative file references resolve
/// against `base_dir`, which may be null.
#[no_mangle]
pub unsafe extern "C" fn lat_scenario_from_toml(
    text: *const c_char,
    base_dir: *const c_char,
    out_scn: *mut *mut LatScenario,
) -> LatStatus {
    guard(|| {
        let slot = out(out_scn, "out_scn")?;
        let text = c_str(text, "text")?;
        let base = if base_dir.is_null() {
            None
        } else {
            Some(FsPath::new(c_str(base_dir, "base_dir")?))
        };
        let file = parse_scenario_config(text, base)?;
        *slot = Box::into_raw(Box::new(LatScenario(file.scenario)));
        Ok(())
    })
}

/// Changes the integration step of a parsed scenario.
#[no_mangle]
pub unsafe extern "C" fn lat_scenario_set_dt(scn: *mut LatScenario, dt: f64) -> LatStatus {
    guard(|| {
        let s = out(scn, "scn")?;
        let mut next = s.0.clone();
        next.dt = dt;
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_scenario_free(scn: *mut LatScenario) {
    if !scn.is_null() {
        drop(Box::from_raw(scn));
    }
}

#[no_mangle]
pub unsafe extern "C" fn lat_scenario_run(
    scn: *const LatScenario,
    out_res: *mut *mut LatResult,
) -> LatStatus {
    guard(|| {
        let slot = out(out_res, "out_res")?;
        let r = sim::run_scenario(&deref(scn, "scn")?.0)?;
        *slot = Box::into_raw(Box::new(LatResult(r)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_result_free(res: *mut LatResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Number of trajectory samples, including the initial state.
#[no_mangle]
pub unsafe extern "C" fn lat_result_len(res: *const LatResult, len: *mut usize) -> LatStatus {
    guard(|| {
        *out(len, "len")? = deref(res, "res")?.0.trajectory.samples.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_result_sample(
    res: *const LatResult,
    index: usize,
    sample: *mut LatSample,
) -> LatStatus {
    guard(|| {
        let samples = &deref(res, "res")?.0.trajectory.samples;
        let s = samples.get(index).ok_or_else(|| {
            LatStatusError(
                LatStatus::InvalidArgument,
                format!("index {index} out of range (len {})", samples.len()),
            )
        })?;
        *out(sample, "sample")? = LatSample {
            t: s.t,
            s_d: s.s_d,
            e_d: s.e_d,
            theta_d: s.theta_d,
            theta_0: s.theta_0,
            theta_hat: s.theta_hat,
            gamma_des: s.gamma_des,
            gamma_ff: s.gamma_ff,
            gamma_fb: s.gamma_fb,
            x_a: s.x_a,
            y_a: s.y_a,
            psi: s.psi,
            kappa_d: s.kappa_d,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_result_metrics(
    res: *const LatResult,
    metrics: *mut LatMetrics,
) -> LatStatus {
    guard(|| {
        let m = &deref(res, "res")?.0.metrics;
        *out(metrics, "metrics")? = LatMetrics {
            settling_time: m.settling_time.unwrap_or(-1.0),
            steady_e_d: m.steady_e_d,
            steady_theta_d: m.steady_theta_d,
            steady_gamma_fb: m.steady_gamma_fb,
            sway_amplitude: m.sway_amplitude,
            overshoot: m.overshoot,
            saturation_fraction: m.saturation_fraction,
            max_abs_gamma_fb: m.max_abs_gamma_fb,
            sign_changes: m.sign_changes,
        };
        Ok(())
    })
}

/// Largest earth/path disagreement in metres, or a negative value when the
/// scenario ran in a single frame.
#[no_mangle]
pub unsafe extern "C" fn lat_result_cross_check(
    res: *const LatResult,
    max_position_error: *mut f64,
) -> LatStatus {
    guard(|| {
        let r = deref(res, "res")?;
        *out(max_position_error, "max_position_error")? =
            r.0.cross_check.map_or(-1.0, |c| c.max_position_error);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn lat_result_write_csv(
    res: *const LatResult,
    path: *const c_char,
) -> LatStatus {
    guard(|| {
        let r = deref(res, "res")?;
        sim::write_trajectory_csv(FsPath::new(c_str(path, "path")?), &r.0.trajectory)?;
        Ok(())
    })
}
