//! Kinematic bicycle model of a point A on the longitudinal symmetry axis,
//! a distance `d` ahead of the rear axle centre, with skate-like wheels,
//! constant speed and assigned steering angle.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EarthState, PathState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// Wheelbase `l` (m).
    pub wheelbase: f64,
    /// Signed distance `d` (m) from the rear axle centre to the sensor
    /// point A along the symmetry axis.
    pub sensor_offset: f64,
    /// Physical steering limit (rad), in `(0, pi/2)`.
    pub max_steer: f64,
    /// Constant forward speed `V` (m/s).
    pub speed: f64,
}

impl VehicleParams {
    pub fn new(wheelbase: f64, sensor_offset: f64, max_steer: f64, speed: f64) -> Result<Self> {
        let p = VehicleParams {
            wheelbase,
            sensor_offset,
            max_steer,
            speed,
        };
        p.validate()?;
        Ok(p)
    }

    /// The passenger-car parameters used throughout the examples:
    /// `l = 2.57 m`, `d = 2 m`, 30 degree steering limit, 20 m/s.
    pub fn reference() -> Self {
        VehicleParams {
            wheelbase: 2.57,
            sensor_offset: 2.0,
            max_steer: 30f64.to_radians(),
            speed: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wheelbase > 0.0 && self.wheelbase.is_finite()) {
            return Err(Error::param(
                "wheelbase",
                format!("must be > 0, got {}", self.wheelbase),
            ));
        }
        if !self.sensor_offset.is_finite() {
            return Err(Error::param("sensor_offset", "must be finite"));
        }
        if !(self.max_steer > 0.0 && self.max_steer < FRAC_PI_2) {
            return Err(Error::param(
                "max_steer",
                format!("must lie in (0, pi/2), got {}", self.max_steer),
            ));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::param(
                "speed",
                format!("forward speed must be > 0, got {}", self.speed),
            ));
        }
        Ok(())
    }
}

/// Path-frame state with the yaw error measured from the desired yaw error:
/// `theta_hat = theta_D - theta_0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HatPathState {
    pub s: f64,
    pub e: f64,
    pub theta_hat: f64,
}

fn tan_steer(gamma: f64) -> Result<f64> {
    if !(gamma.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "steering angle {gamma} rad outside (-pi/2, pi/2)"
        )));
    }
    Ok(gamma.tan())
}

fn along_factor(e: f64, kappa: f64, s: f64) -> Result<f64> {
    let c = 1.0 - e * kappa;
    if c == 0.0 {
        return Err(Error::Singularity { s, value: c });
    }
    Ok(c)
}

/// Earth-frame velocity of A and yaw rate.
pub fn earth_derivatives(es: &EarthState, gamma: f64, p: &VehicleParams) -> Result<[f64; 3]> {
    let tg = tan_steer(gamma)?;
    let (sin_psi, cos_psi) = es.psi.sin_cos();
    let v = p.speed;
    let lat = p.sensor_offset / p.wheelbase * tg;
    Ok([
        v * (cos_psi - lat * sin_psi),
        v * (sin_psi + lat * cos_psi),
        v / p.wheelbase * tg,
    ])
}

/// Path-frame dynamics `(s_D', e_D', theta_D')` for curvature `kappa` at D.
pub fn path_derivatives(
    ps: &PathState,
    gamma: f64,
    p: &VehicleParams,
    kappa: f64,
) -> Result<[f64; 3]> {
    let tg = tan_steer(gamma)?;
    let c = along_factor(ps.e, kappa, ps.s)?;
    let v = p.speed;
    let lat = p.sensor_offset / p.wheelbase * tg;
    let (sin_t, cos_t) = ps.theta.sin_cos();
    let along = cos_t - lat * sin_t;
    let s_dot = v / c * along;
    Ok([
        s_dot,
        v * (sin_t + lat * cos_t),
        v / p.wheelbase * tg - kappa * s_dot,
    ])
}

/// Path-frame dynamics in `(s_D, e_D, theta_hat)` coordinates. `kappa_rate`
/// is the time derivative of the curvature seen at D.
pub fn hat_path_derivatives(
    hs: &HatPathState,
    gamma: f64,
    p: &VehicleParams,
    kappa: f64,
    kappa_rate: f64,
) -> Result<[f64; 3]> {
    let dk = p.sensor_offset * kappa;
    if !(dk.abs() < 1.0) {
        return Err(Error::Untrackable(dk.abs()));
    }
    let root = (1.0 - dk * dk).sqrt();
    let theta0 = -dk.asin();
    let ps = PathState {
        s: hs.s,
        e: hs.e,
        theta: hs.theta_hat + theta0,
    };
    let [s_dot, e_dot, theta_dot] = path_derivatives(&ps, gamma, p, kappa)?;
    Ok([
        s_dot,
        e_dot,
        theta_dot + p.sensor_offset * kappa_rate / root,
    ])
}

/// Lateral acceleration of the rear axle centre, `V^2 tan(gamma) / l`.
pub fn rear_axle_lateral_accel(speed: f64, gamma: f64, wheelbase: f64) -> Result<f64> {
    Ok(speed * speed * tan_steer(gamma)? / wheelbase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn straight_rolling() {
        let p = VehicleParams::reference();
        let d = earth_derivatives(&EarthState::default(), 0.0, &p).unwrap();
        assert_eq!(d, [20.0, 0.0, 0.0]);
    }

    #[test]
    fn rear_axle_point_moves_along_heading() {
        let p = VehicleParams {
            sensor_offset: 0.0,
            ..VehicleParams::reference()
        };
        for gamma in [-0.4, 0.0, 0.3] {
            let es = EarthState {
                x: 1.0,
                y: 2.0,
                psi: 0.7,
            };
            let d = earth_derivatives(&es, gamma, &p).unwrap();
            assert_abs_diff_eq!(d[0], 20.0 * 0.7f64.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(d[1], 20.0 * 0.7f64.sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn earth_derivatives_reference_values() {
        // extended-precision values
        let p = VehicleParams::reference();
        let d = earth_derivatives(&EarthState::default(), 0.1, &p).unwrap();
        assert_abs_diff_eq!(d[0], 20.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 1.56162913751674, epsilon = 1e-13);
        assert_abs_diff_eq!(d[2], 0.78081456875837, epsilon = 1e-13);
    }

    #[test]
    fn steering_beyond_right_angle_is_rejected() {
        let p = VehicleParams::reference();
        assert!(matches!(
            earth_derivatives(&EarthState::default(), FRAC_PI_2, &p),
            Err(Error::Domain(_))
        ));
        assert!(rear_axle_lateral_accel(20.0, -2.0, 2.57).is_err());
    }

    #[test]
    fn path_derivatives_examples() {
        let p = VehicleParams::reference();
        let d = path_derivatives(&PathState::default(), 0.0, &p, 0.0).unwrap();
        assert_eq!(d, [20.0, 0.0, 0.0]);

        let d = path_derivatives(
            &PathState {
                s: 0.0,
                e: -10.0,
                theta: 0.0,
            },
            0.02,
            &p,
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(d[0], 20.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d[1], 0.3113255578739677, epsilon = 1e-13);
        assert_abs_diff_eq!(d[2], 0.15566277893698384, epsilon = 1e-13);

        // rear axle on a circle with the exact steering angle
        let p0 = VehicleParams {
            sensor_offset: 0.0,
            ..p
        };
        let kappa = 0.005;
        let gamma = (p0.wheelbase * kappa).atan();
        let d = path_derivatives(&PathState::default(), gamma, &p0, kappa).unwrap();
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn curvature_centre_is_a_singularity() {
        let p = VehicleParams::reference();
        let err = path_derivatives(
            &PathState {
                s: 3.0,
                e: 200.0,
                theta: 0.0,
            },
            0.0,
            &p,
            0.005,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
    }

    #[test]
    fn hat_dynamics_examples() {
        let p = VehicleParams::reference();
        // d = 0 and constant curvature: identical to the plain dynamics
        let p0 = VehicleParams {
            sensor_offset: 0.0,
            ..p
        };
        let hs = HatPathState {
            s: 1.0,
            e: 0.4,
            theta_hat: -0.2,
        };
        let a = hat_path_derivatives(&hs, 0.03, &p0, 0.01, 0.0).unwrap();
        let b = path_derivatives(
            &PathState {
                s: 1.0,
                e: 0.4,
                theta: -0.2,
            },
            0.03,
            &p0,
            0.01,
        )
        .unwrap();
        assert_eq!(a, b);

        // equilibrium on a circle under the sensor-aware feedforward angle
        let k0 = 0.005;
        let lam1 = (1.0 - (p.sensor_offset * k0).powi(2)).sqrt();
        let gamma = (p.wheelbase * k0 / lam1).atan();
        let d = hat_path_derivatives(&HatPathState::default(), gamma, &p, k0, 0.0).unwrap();
        assert_abs_diff_eq!(d[0], p.speed / lam1, epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[2], 0.0, epsilon = 1e-15);

        assert!(matches!(
            hat_path_derivatives(&HatPathState::default(), 0.0, &p, 0.6, 0.0),
            Err(Error::Untrackable(_))
        ));
    }

    #[test]
    fn lateral_accel_examples() {
        assert_eq!(rear_axle_lateral_accel(20.0, 0.0, 2.57).unwrap(), 0.0);
        // inverse of the steering bound for a 4 m/s^2 limit
        let gamma = (4.0 * 2.57 / 400.0f64).atan();
        assert_abs_diff_eq!(
            rear_axle_lateral_accel(20.0, gamma, 2.57).unwrap(),
            4.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(gamma, 0.025694344043585785, epsilon = 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(VehicleParams::new(0.0, 1.0, 0.5, 10.0).is_err());
        assert!(VehicleParams::new(2.0, 1.0, 1.6, 10.0).is_err());
        assert!(VehicleParams::new(2.0, 1.0, 0.5, 0.0).is_err());
        assert!(VehicleParams::new(2.0, -1.0, 0.5, 10.0).is_ok());
    }

    proptest! {
        #[test]
        fn hat_change_of_variables(
            s in 0.0..100.0f64, e in -5.0..5.0f64, theta in -3.0..3.0f64,
            gamma in -0.5..0.5f64, kappa in -0.2..0.2f64, kappa_rate in -0.05..0.05f64,
        ) {
            // theta_hat = theta - theta0(kappa(t)) differentiated by the chain rule
            let p = VehicleParams::reference();
            let dk = p.sensor_offset * kappa;
            let theta0 = -dk.asin();
            let theta0_rate = -p.sensor_offset * kappa_rate / (1.0 - dk * dk).sqrt();
            let plain = path_derivatives(&PathState { s, e, theta }, gamma, &p, kappa).unwrap();
            let hat = hat_path_derivatives(&HatPathState { s, e, theta_hat: theta - theta0 }, gamma, &p, kappa, kappa_rate).unwrap();
            prop_assert!((hat[0] - plain[0]).abs() < 1e-10);
            prop_assert!((hat[1] - plain[1]).abs() < 1e-10);
            prop_assert!((hat[2] - (plain[2] - theta0_rate)).abs() < 1e-10);
        }
    }
}
