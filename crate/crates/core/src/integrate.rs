//! Classical fixed-step fourth-order Runge-Kutta.
//!
//! Shared by the closed-loop simulator and by pose reconstruction of paths
//! whose heading has to be integrated from curvature.

use crate::error::{Error, Result};

/// One RK4 step of `x' = field(x)` from time `t` with step `dt`.
///
/// The field is evaluated four times. A non-finite derivative or result
/// aborts with [`Error::Integration`].
pub fn rk4_step<const N: usize, F>(mut field: F, t: f64, x: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    if !(dt > 0.0) {
        return Err(Error::param(
            "dt",
            format!("step must be positive, got {dt}"),
        ));
    }
    let k1 = checked(field(x)?, t)?;
    let k2 = checked(field(&axpy(x, 0.5 * dt, &k1))?, t)?;
    let k3 = checked(field(&axpy(x, 0.5 * dt, &k2))?, t)?;
    let k4 = checked(field(&axpy(x, dt, &k3))?, t)?;

    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    checked(out, t)
}

/// RK4 step with the steering input held constant across all four stages
/// (zero-order hold).
pub fn step_rk4_held<const N: usize, F>(
    field: F,
    t: f64,
    x: &[f64; N],
    steer: f64,
    dt: f64,
) -> Result<[f64; N]>
where
    F: Fn(&[f64; N], f64) -> Result<[f64; N]>,
{
    rk4_step(|y| field(y, steer), t, x, dt)
}

fn axpy<const N: usize>(x: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *x;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

fn checked<const N: usize>(v: [f64; N], t: f64) -> Result<[f64; N]> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Integration {
            t,
            reason: format!("non-finite derivative or state {v:?}"),
        })
    }
}
