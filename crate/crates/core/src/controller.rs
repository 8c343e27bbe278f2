//! Sensor-offset-aware nonlinear steering law and the degraded variants it
//! is compared against.
//!
//! The steering command is `gamma_des = gamma_ff + gamma_fb`:
//!
//! * `full`: `gamma_ff = atan(l k / sqrt(1 - (d k)^2))`,
//!   `gamma_fb = g(k1 (theta - theta0 + atan(k2 e)))` with
//!   `theta0 = -asin(d k)`.
//! * `naive`: the rear-axle law, `gamma_ff = atan(l k)`,
//!   `gamma_fb = g(k1 (theta + atan(k2 e)))`.
//! * `unwrapped`: as `naive` without the wrapper `g`.
//! * `linear`: `gamma_fb = k1 theta + k1 k2 e`.
//!
//! `k1` is dimensionless (it multiplies an angle) and `k2` is in 1/m.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PathState;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Naive,
    Unwrapped,
    Linear,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::Naive,
        Variant::Unwrapped,
        Variant::Linear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Naive => "naive",
            Variant::Unwrapped => "unwrapped",
            Variant::Linear => "linear",
        }
    }

    /// Whether the feedback term passes through the wrapper function.
    pub fn is_wrapped(self) -> bool {
        matches!(self, Variant::Full | Variant::Naive)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "naive" => Ok(Variant::Naive),
            "unwrapped" => Ok(Variant::Unwrapped),
            "linear" => Ok(Variant::Linear),
            other => Err(format!("unknown controller variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub k1: f64,
    pub k2: f64,
}

impl Gains {
    pub fn new(k1: f64, k2: f64) -> Self {
        Gains { k1, k2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub gains: Gains,
    /// Lateral acceleration limit at the rear axle (m/s^2).
    pub max_lateral_accel: f64,
    pub variant: Variant,
    /// Wrapper bound, derived from the vehicle and `max_lateral_accel`.
    g_sat: f64,
}

impl ControlConfig {
    pub fn new(
        gains: Gains,
        max_lateral_accel: f64,
        variant: Variant,
        p: &VehicleParams,
    ) -> Result<Self> {
        if !(gains.k1.is_finite() && gains.k2.is_finite()) {
            return Err(Error::param("gains", "k1 and k2 must be finite"));
        }
        if !(max_lateral_accel > 0.0 && max_lateral_accel.is_finite()) {
            return Err(Error::param(
                "max_lateral_accel",
                format!("must be > 0, got {max_lateral_accel}"),
            ));
        }
        p.validate()?;
        Ok(ControlConfig {
            gains,
            max_lateral_accel,
            variant,
            g_sat: max_allowable_steer(p, max_lateral_accel),
        })
    }

    pub fn g_sat(&self) -> f64 {
        self.g_sat
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }
}

/// Everything the controller decided at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SteeringDecision {
    /// `gamma_ff + gamma_fb`, before the physical clamp.
    pub gamma_des: f64,
    pub gamma_ff: f64,
    pub gamma_fb: f64,
    /// Steering angle actually applied, `gamma_des` clamped to the physical limit.
    pub applied: f64,
    /// Desired yaw-angle error `theta0` (zero for the variants that ignore it).
    pub theta0: f64,
    /// Desired yaw-angle error implied by the feedback term.
    pub theta_des: f64,
    /// Feedback value before the wrapper (equal to `gamma_fb` for unwrapped variants).
    pub feedback_argument: f64,
}

impl SteeringDecision {
    pub fn clamped(&self) -> bool {
        self.applied != self.gamma_des
    }
}

/// Odd, bounded, unit-slope saturation `(2 g/pi) atan(pi x / (2 g))`.
pub fn wrapper(x: f64, g_sat: f64) -> f64 {
    2.0 * g_sat / PI * (PI * x / (2.0 * g_sat)).atan()
}

/// `min(gamma_max, atan(a_max l / V^2))`.
pub fn max_allowable_steer(p: &VehicleParams, max_lateral_accel: f64) -> f64 {
    let accel_bound = (max_lateral_accel * p.wheelbase / (p.speed * p.speed)).atan();
    p.max_steer.min(accel_bound)
}

fn offset_curvature(kappa: f64, d: f64) -> Result<f64> {
    let dk = d * kappa;
    if !(dk.abs() < 1.0) {
        return Err(Error::Untrackable(dk.abs()));
    }
    Ok(dk)
}

pub fn feedforward(kappa: f64, p: &VehicleParams, variant: Variant) -> Result<f64> {
    match variant {
        Variant::Full => {
            let dk = offset_curvature(kappa, p.sensor_offset)?;
            Ok((p.wheelbase * kappa / (1.0 - dk * dk).sqrt()).atan())
        }
        Variant::Naive | Variant::Unwrapped | Variant::Linear => Ok((p.wheelbase * kappa).atan()),
    }
}

/// Feedforward error made by ignoring the sensor offset.
pub fn feedforward_error(kappa: f64, p: &VehicleParams) -> Result<f64> {
    Ok(feedforward(kappa, p, Variant::Full)? - feedforward(kappa, p, Variant::Naive)?)
}

/// `theta0 = -asin(d kappa)`.
pub fn desired_yaw_error(kappa: f64, d: f64) -> Result<f64> {
    // + 0.0 keeps straight segments at +0 rather than -0
    Ok(-offset_curvature(kappa, d)?.asin() + 0.0)
}

/// Heading (relative to the path tangent) the feedback term steers towards.
pub fn desired_heading(e: f64, k2: f64, variant: Variant) -> f64 {
    match variant {
        Variant::Linear => -k2 * e,
        _ => -(k2 * e).atan(),
    }
}

fn feedback_parts(
    e: f64,
    theta: f64,
    kappa: f64,
    cfg: &ControlConfig,
    p: &VehicleParams,
) -> Result<(f64, f64, f64)> {
    let Gains { k1, k2 } = cfg.gains;
    Ok(match cfg.variant {
        Variant::Full => {
            let theta0 = desired_yaw_error(kappa, p.sensor_offset)?;
            let arg = k1 * (theta - theta0 + (k2 * e).atan());
            (arg, wrapper(arg, cfg.g_sat), theta0)
        }
        Variant::Naive => {
            let arg = k1 * (theta + (k2 * e).atan());
            (arg, wrapper(arg, cfg.g_sat), 0.0)
        }
        Variant::Unwrapped => {
            let arg = k1 * (theta + (k2 * e).atan());
            (arg, arg, 0.0)
        }
        Variant::Linear => {
            let arg = k1 * theta + k1 * k2 * e;
            (arg, arg, 0.0)
        }
    })
}

pub fn feedback(
    e: f64,
    theta: f64,
    kappa: f64,
    cfg: &ControlConfig,
    p: &VehicleParams,
) -> Result<f64> {
    Ok(feedback_parts(e, theta, kappa, cfg, p)?.1)
}

/// Full steering decision for the current path-frame state.
///
/// The sum is clamped to the physical limit `max_steer`; callers check
/// [`SteeringDecision::clamped`] and report it. Only the feedback term is
/// bounded by the wrapper.
pub fn control(
    ps: &PathState,
    kappa: f64,
    cfg: &ControlConfig,
    p: &VehicleParams,
) -> Result<SteeringDecision> {
    let gamma_ff = feedforward(kappa, p, cfg.variant)?;
    let (feedback_argument, gamma_fb, theta0) = feedback_parts(ps.e, ps.theta, kappa, cfg, p)?;
    let gamma_des = gamma_ff + gamma_fb;
    if !gamma_des.is_finite() {
        return Err(Error::Domain(format!(
            "non-finite steering command at {ps:?}"
        )));
    }
    let limit = p.max_steer.min(FRAC_PI_2 - 1e-9);
    let applied = gamma_des.clamp(-limit, limit);
    Ok(SteeringDecision {
        gamma_des,
        gamma_ff,
        gamma_fb,
        applied,
        theta0,
        theta_des: theta0 + desired_heading(ps.e, cfg.gains.k2, cfg.variant),
        feedback_argument,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wrap_angle_error;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table1(variant: Variant) -> (ControlConfig, VehicleParams) {
        let p = VehicleParams::reference();
        (
            ControlConfig::new(Gains::new(-0.8, 0.02), 4.0, variant, &p).unwrap(),
            p,
        )
    }

    #[test]
    fn wrapper_properties() {
        let g = 0.0256944;
        assert_eq!(wrapper(0.0, g), 0.0);
        assert!(wrapper(1e6, g).abs() > 0.999 * g);
        assert!(wrapper(1e6, g) <= g);
        let h = 1e-7;
        let slope = (wrapper(h, g) - wrapper(-h, g)) / (2.0 * h);
        assert!((slope - 1.0).abs() < 1e-6, "{slope}");
    }

    #[test]
    fn max_steer_examples() {
        let p = VehicleParams::reference();
        assert_abs_diff_eq!(
            max_allowable_steer(&p, 4.0),
            0.025694344043585785,
            epsilon = 1e-15
        );
        let slow = VehicleParams { speed: 5.0, ..p };
        assert_abs_diff_eq!(
            max_allowable_steer(&slow, 4.0),
            0.39012410748281677,
            epsilon = 1e-14
        );
        let crawl = VehicleParams { speed: 1e-3, ..p };
        assert_eq!(max_allowable_steer(&crawl, 4.0), p.max_steer);
    }

    #[test]
    fn feedforward_examples() {
        let p = VehicleParams::reference();
        for v in Variant::ALL {
            assert_eq!(feedforward(0.0, &p, v).unwrap(), 0.0);
        }
        let ff = feedforward(0.005, &p, Variant::Full).unwrap();
        assert_abs_diff_eq!(ff, 0.01284993523746015, epsilon = 1e-15);
        // concentric-circle construction: tan(gamma) = l / sqrt(rho^2 - d^2)
        assert_abs_diff_eq!(
            ff.tan(),
            2.57 / (200.0f64.powi(2) - 4.0).sqrt(),
            epsilon = 1e-15
        );
        for v in Variant::ALL {
            assert_eq!(
                feedforward(-0.01, &p, v).unwrap(),
                -feedforward(0.01, &p, v).unwrap()
            );
        }
        assert!(matches!(
            feedforward(0.5, &p, Variant::Full),
            Err(Error::Untrackable(_))
        ));
        assert!(feedforward(0.5, &p, Variant::Naive).is_ok());
    }

    #[test]
    fn feedforward_error_examples() {
        let p = VehicleParams::reference();
        assert_eq!(feedforward_error(0.0, &p).unwrap(), 0.0);
        let e2 = feedforward_error(0.05, &p).unwrap();
        assert_abs_diff_eq!(e2, 6.367913435330221e-4, epsilon = 1e-15);
        let e4 = feedforward_error(
            0.05,
            &VehicleParams {
                sensor_offset: 4.0,
                ..p
            },
        )
        .unwrap();
        assert!(e4 > e2);
    }

    #[test]
    fn desired_yaw_error_examples() {
        assert_eq!(desired_yaw_error(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(desired_yaw_error(0.3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            desired_yaw_error(0.005, 2.0).unwrap(),
            -0.010000166674167114,
            epsilon = 1e-17
        );
        assert!(desired_yaw_error(0.5, 2.0).is_err());
    }

    #[test]
    fn desired_heading_examples() {
        assert_eq!(desired_heading(0.0, 0.02, Variant::Full), 0.0);
        assert_abs_diff_eq!(
            desired_heading(1e12, 0.02, Variant::Full),
            -FRAC_PI_2,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            desired_heading(-1e12, 0.02, Variant::Naive),
            FRAC_PI_2,
            epsilon = 1e-9
        );
        // the linear law asks for a heading parallel to the path at e = pi / k2
        let h = desired_heading(PI / 0.02, 0.02, Variant::Linear);
        assert_eq!(wrap_angle_error(h, 0.0), -PI);
    }

    #[test]
    fn feedback_examples() {
        let (cfg, p) = table1(Variant::Full);
        let theta0 = desired_yaw_error(0.005, p.sensor_offset).unwrap();
        assert_eq!(feedback(0.0, theta0, 0.005, &cfg, &p).unwrap(), 0.0);

        // first-order agreement with the linearised law
        let (e, dth) = (1e-4, 1e-4);
        let full = feedback(e, theta0 + dth, 0.005, &cfg, &p).unwrap();
        let lin = -0.8 * dth + -0.8 * 0.02 * e;
        assert!((full - lin).abs() < 1e-6);

        // large initial deviation: the wrapper is close to its bound
        let fb = feedback(-10.0, 0.0, 0.0, &cfg, &p).unwrap();
        assert_abs_diff_eq!(fb, 0.024005996439577642, epsilon = 1e-15);
        assert!(fb < cfg.g_sat());
    }

    #[test]
    fn unwrapped_and_linear_are_unbounded() {
        let p = VehicleParams::reference();
        let gains = Gains::new(-0.8, 0.02);
        let un = ControlConfig::new(gains, 4.0, Variant::Unwrapped, &p).unwrap();
        let li = ControlConfig::new(gains, 4.0, Variant::Linear, &p).unwrap();
        assert_abs_diff_eq!(
            feedback(-10.0, 0.0, 0.0, &un, &p).unwrap(),
            -0.8 * (-0.2f64).atan(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            feedback(-10.0, 0.0, 0.0, &li, &p).unwrap(),
            0.16,
            epsilon = 1e-15
        );
    }

    #[test]
    fn control_on_circular_equilibrium() {
        let (cfg, p) = table1(Variant::Full);
        let k = 0.005;
        let theta0 = desired_yaw_error(k, p.sensor_offset).unwrap();
        let dec = control(
            &PathState {
                s: 0.0,
                e: 0.0,
                theta: theta0,
            },
            k,
            &cfg,
            &p,
        )
        .unwrap();
        assert_eq!(dec.gamma_fb, 0.0);
        assert_eq!(dec.gamma_des, dec.gamma_ff);
        assert_eq!(dec.theta0, theta0);
        assert!(!dec.clamped());
    }

    #[test]
    fn naive_on_path_has_zero_feedback_but_nonzero_theta_hat() {
        let (cfg, p) = table1(Variant::Naive);
        let dec = control(&PathState::default(), 0.005, &cfg, &p).unwrap();
        assert_eq!(dec.gamma_fb, 0.0);
        // the vehicle sits at theta = 0 while the required yaw error is nonzero
        assert!(desired_yaw_error(0.005, p.sensor_offset).unwrap().abs() > 1e-3);
    }

    #[test]
    fn linear_variant_is_clamped_to_physical_limit() {
        let p = VehicleParams::reference();
        let cfg = ControlConfig::new(Gains::new(-5.0, 1.0), 4.0, Variant::Linear, &p).unwrap();
        let dec = control(
            &PathState {
                s: 0.0,
                e: -10.0,
                theta: 0.0,
            },
            0.0,
            &cfg,
            &p,
        )
        .unwrap();
        assert!(dec.clamped());
        assert_eq!(dec.applied, p.max_steer);
    }

    #[test]
    fn variant_strings() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
        }
        assert!("pid".parse::<Variant>().is_err());
    }

    proptest! {
        #[test]
        fn straight_path_full_equals_naive(e in -50.0..50.0f64, theta in -3.1..3.1f64) {
            let (full, p) = table1(Variant::Full);
            let naive = full.with_variant(Variant::Naive);
            let ps = PathState { s: 0.0, e, theta };
            prop_assert_eq!(control(&ps, 0.0, &full, &p).unwrap(), control(&ps, 0.0, &naive, &p).unwrap());
        }

        #[test]
        fn zero_offset_full_equals_naive(e in -50.0..50.0f64, theta in -3.1..3.1f64, kappa in -0.3..0.3f64) {
            let p = VehicleParams { sensor_offset: 0.0, ..VehicleParams::reference() };
            let full = ControlConfig::new(Gains::new(-0.8, 0.02), 4.0, Variant::Full, &p).unwrap();
            let naive = full.with_variant(Variant::Naive);
            let ps = PathState { s: 0.0, e, theta };
            prop_assert_eq!(control(&ps, kappa, &full, &p).unwrap(), control(&ps, kappa, &naive, &p).unwrap());
        }

        #[test]
        fn wrapped_feedback_is_bounded(
            e in -1e4..1e4f64, theta in -3.2..3.2f64, kappa in -0.2..0.2f64,
            k1 in -10.0..10.0f64, k2 in -5.0..5.0f64,
        ) {
            let p = VehicleParams::reference();
            for v in [Variant::Full, Variant::Naive] {
                let cfg = ControlConfig::new(Gains::new(k1, k2), 4.0, v, &p).unwrap();
                let dec = control(&PathState { s: 0.0, e, theta }, kappa, &cfg, &p).unwrap();
                prop_assert!(dec.gamma_fb.abs() <= cfg.g_sat());
                let ff_max = feedforward(0.2, &p, v).unwrap();
                prop_assert!(dec.gamma_des.abs() <= ff_max + cfg.g_sat() + 1e-15);
                // implied rear-axle lateral acceleration of the feedback part
                let a = p.speed.powi(2) * dec.gamma_fb.abs().tan() / p.wheelbase;
                prop_assert!(a < p.speed.powi(2) * cfg.g_sat().tan() / p.wheelbase);
                prop_assert!(a <= cfg.max_lateral_accel + 1e-12);
            }
        }

        #[test]
        fn full_feedback_is_odd(e in -100.0..100.0f64, dth in -1.0..1.0f64, kappa in -0.2..0.2f64) {
            let (cfg, p) = table1(Variant::Full);
            let t0 = desired_yaw_error(kappa, p.sensor_offset).unwrap();
            let a = feedback(e, t0 + dth, kappa, &cfg, &p).unwrap();
            let t0m = desired_yaw_error(-kappa, p.sensor_offset).unwrap();
            let b = feedback(-e, t0m - dth, -kappa, &cfg, &p).unwrap();
            prop_assert!((a + b).abs() < 1e-15);
        }

        #[test]
        fn wrapper_incremental_gain_decreases(x in 0.0..2.0f64, width in 1e-3..0.5f64, shift in 1e-3..2.0f64) {
            let g = 0.0256944;
            let gain = |lo: f64| (wrapper(lo + width, g) - wrapper(lo, g)) / width;
            prop_assert!(gain(x + shift) <= gain(x) + 1e-12);
            prop_assert!(gain(-x - shift - width) <= gain(-x - width) + 1e-12);
        }
    }
}
