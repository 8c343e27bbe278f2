//! Linearisation of the closed loop around the constant-curvature equilibrium
//! (`e = 0`, `theta = theta0`), stability predicates, and the
//! curvature-to-deviation frequency response.
//!
//! The reduced linear system has state `(e, theta_hat)` and input
//! `u = dkappa/dt`:
//!
//! ```text
//! x' = A x + B u,   y = C x = e
//! ```
//!
//! The transfer function is `G(s) = C (sI - A)^-1 B s`, so `M(w) = |G(jw)|`
//! is the deviation per unit curvature amplitude. Its unit is metres per
//! (1/m), i.e. m^2.

use nalgebra::{Complex, Matrix2, RowVector2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::controller::Gains;
use crate::error::{Error, Result};
use crate::vehicle::VehicleParams;

/// Width of the band around the stability boundary labelled marginal.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lambdas {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
}

pub fn lambdas(kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<Lambdas> {
    let (l, d, v) = (p.wheelbase, p.sensor_offset, p.speed);
    let dk = d * kappa0;
    if !(dk.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "|d kappa0| = {} must be < 1",
            dk.abs()
        )));
    }
    let Gains { k1, k2 } = gains;
    let k0sq = kappa0 * kappa0;
    let l1 = (1.0 - dk * dk).sqrt();
    let l2 = 1.0 + (l * l - d * d) * k0sq;
    let l3 = l1 * l2 * k1 * k2 - d * k0sq * l2 * k1 - l * k0sq;
    let damp = l2 * k1 * (l1 + d * k2);
    let l4 = v * v / (l * l * l1 * l1) * (2.0 * l * l3 + damp * damp);
    Ok(Lambdas { l1, l2, l3, l4 })
}

/// Largest curvature the vehicle can follow at steady state with the sensor
/// point on the path: `tan(gmax) / sqrt(l^2 + d^2 tan^2(gmax))`.
pub fn kappa_bar(p: &VehicleParams) -> f64 {
    let t = p.max_steer.tan();
    t / (p.wheelbase.powi(2) + (p.sensor_offset * t).powi(2)).sqrt()
}

/// Lower bound of `lambda1` over `|kappa0| <= kappa_bar`.
pub fn lambda1_lower(p: &VehicleParams) -> f64 {
    let t = p.max_steer.tan();
    p.wheelbase / (p.wheelbase.powi(2) + (p.sensor_offset * t).powi(2)).sqrt()
}

/// Gain `k1` that cancels the curvature-to-deviation path entirely.
pub fn optimal_k1(kappa0: f64, p: &VehicleParams) -> Result<f64> {
    let lam = lambdas(kappa0, Gains::new(0.0, 0.0), p)?;
    if p.sensor_offset == 0.0 {
        return Err(Error::Domain(
            "zero sensor offset: every k1 gives zero amplification".into(),
        ));
    }
    Ok(-p.wheelbase / (p.sensor_offset * lam.l2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    pub c: RowVector2<f64>,
    pub kappa0: f64,
    pub gains: Gains,
    pub params: VehicleParams,
    pub lambdas: Lambdas,
}

pub fn linearize(kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<LinearModel> {
    let lam = lambdas(kappa0, gains, p)?;
    let (l, d, v) = (p.wheelbase, p.sensor_offset, p.speed);
    let Gains { k1, k2 } = gains;
    let Lambdas { l1, l2, .. } = lam;
    let a = Matrix2::new(
        v * d / l * l2 / l1 * k1 * k2,
        v / l1 * (1.0 + d / l * l2 * k1),
        v / l * (l2 * k1 * k2 - l / l1 * kappa0 * kappa0),
        v * l2 / l * k1,
    );
    Ok(LinearModel {
        a,
        b: Vector2::new(0.0, d / l1),
        c: RowVector2::new(1.0, 0.0),
        kappa0,
        gains,
        params: *p,
        lambdas: lam,
    })
}

impl LinearModel {
    /// Coefficients `(c1, c0)` of the monic characteristic polynomial
    /// `s^2 + c1 s + c0`, from the closed-form lambda expressions.
    pub fn characteristic(&self) -> (f64, f64) {
        let p = &self.params;
        let (l, d, v) = (p.wheelbase, p.sensor_offset, p.speed);
        let Lambdas { l1, l2, l3, .. } = self.lambdas;
        let c1 = -(v * self.gains.k1 * l2 / (l * l1)) * (l1 + d * self.gains.k2);
        let c0 = -v * v * l3 / (l * l1 * l1);
        (c1, c0)
    }

    /// Roots of the characteristic polynomial, ordered by real part, then
    /// imaginary part.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let (c1, c0) = self.characteristic();
        quadratic_roots(c1, c0)
    }

    /// Eigenvalues of `A` from a general-purpose eigensolver.
    pub fn numeric_eigenvalues(&self) -> [Complex64; 2] {
        let ev = self.a.complex_eigenvalues();
        sorted([
            Complex64::new(ev[0].re, ev[0].im),
            Complex64::new(ev[1].re, ev[1].im),
        ])
    }

    /// `G(jw)` evaluated through the resolvent `(jwI - A)^-1`.
    pub fn resolvent_response(&self, omega: f64) -> Option<Complex64> {
        let jw = Complex::new(0.0, omega);
        let a = self.a.map(|x| Complex::new(x, 0.0));
        let m = Matrix2::from_diagonal_element(jw) - a;
        let inv = m.try_inverse()?;
        let b = self.b.map(|x| Complex::new(x, 0.0));
        let c = self.c.map(|x| Complex::new(x, 0.0));
        Some((c * inv * b)[(0, 0)] * jw)
    }
}

fn sorted(mut r: [Complex64; 2]) -> [Complex64; 2] {
    if (r[1].re, r[1].im) < (r[0].re, r[0].im) {
        r.swap(0, 1);
    }
    r
}

/// Roots of `s^2 + b s + c` without cancellation.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            // b = 0 and c = 0
            return [Complex64::new(0.0, 0.0); 2];
        }
        sorted([Complex64::new(q, 0.0), Complex64::new(c / q, 0.0)])
    } else {
        let im = 0.5 * (-disc).sqrt();
        sorted([Complex64::new(-0.5 * b, -im), Complex64::new(-0.5 * b, im)])
    }
}

/// Which of the gain conditions guaranteeing stability for every admissible
/// constant curvature holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SufficientCondition {
    /// `k1 < 0` and `k2` above the curvature-independent threshold.
    NegativeK1,
    /// `k1 > 0` and `k2 < -1/d`.
    PositiveK1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityVerdict {
    /// `k1 (lambda1 + d k2) < 0` and `lambda3 < 0`.
    pub necessary_sufficient: bool,
    /// Either quantity lies within [`BOUNDARY_TOLERANCE`] of zero.
    pub marginal: bool,
    pub sufficient: Option<SufficientCondition>,
    #[serde(skip)]
    pub eigenvalues: [Complex64; 2],
}

/// `k2` threshold of the negative-`k1` sufficient condition:
/// `(d/l) tan^2(gmax) / sqrt(l^2 + d^2 tan^2(gmax))`.
pub fn sufficient_k2_threshold(p: &VehicleParams) -> f64 {
    let t = p.max_steer.tan();
    p.sensor_offset / p.wheelbase * t * t
        / (p.wheelbase.powi(2) + (p.sensor_offset * t).powi(2)).sqrt()
}

pub fn sufficient_condition(gains: Gains, p: &VehicleParams) -> Option<SufficientCondition> {
    let Gains { k1, k2 } = gains;
    if k1 < 0.0 && k2 > sufficient_k2_threshold(p) {
        Some(SufficientCondition::NegativeK1)
    } else if k1 > 0.0 && p.sensor_offset > 0.0 && k2 < -1.0 / p.sensor_offset {
        Some(SufficientCondition::PositiveK1)
    } else {
        None
    }
}

pub fn is_stable(kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<StabilityVerdict> {
    let model = linearize(kappa0, gains, p)?;
    let lam = model.lambdas;
    let damping = gains.k1 * (lam.l1 + p.sensor_offset * gains.k2);
    Ok(StabilityVerdict {
        necessary_sufficient: damping < 0.0 && lam.l3 < 0.0,
        marginal: damping.abs() < BOUNDARY_TOLERANCE || lam.l3.abs() < BOUNDARY_TOLERANCE,
        sufficient: sufficient_condition(gains, p),
        eigenvalues: model.eigenvalues(),
    })
}

/// Closed-form amplification ratio `M(w)`.
pub fn amplification(omega: f64, kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<f64> {
    let Lambdas { l1, l2, l3, l4 } = lambdas(kappa0, gains, p)?;
    let (l, d, v) = (p.wheelbase, p.sensor_offset, p.speed);
    let gain = 1.0 + d / l * l2 * gains.k1;
    let w2 = omega * omega;
    let l1_4 = l1.powi(4);
    let num = v * v * d * d / l1_4 * gain * gain * w2;
    let den = w2 * w2 + l4 * w2 + v.powi(4) * l3 * l3 / (l * l * l1_4);
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Maximum of `M(w)` (m^2); infinite when the closed-form denominator vanishes.
    pub m_max: f64,
    /// Frequency of the maximum (rad/s).
    pub omega_m: f64,
}

/// Closed-form peak `(M_max, w_m)` of the amplification ratio.
///
/// The numerator factor `l + d lambda2 k1` is treated as zero when it is
/// within rounding of zero, so the cancelling gain from [`optimal_k1`] gives
/// exactly zero.
pub fn peak_amplification(kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<Peak> {
    let Lambdas { l1, l2, l3, .. } = lambdas(kappa0, gains, p)?;
    let (l, d, v) = (p.wheelbase, p.sensor_offset, p.speed);
    let Gains { k1, k2 } = gains;
    let omega_m = v / l1 * (l3.abs() / l).sqrt();
    let dl2k1 = d * l2 * k1;
    let mut gain = (l + dl2k1).abs();
    if gain <= 4.0 * f64::EPSILON * l.max(dl2k1.abs()) {
        gain = 0.0;
    }
    let damp = l2 * k1 * (l1 + d * k2);
    let den = (2.0 * l * (l3 + l3.abs()) + damp * damp).sqrt();
    let num = d / l1 * gain;
    let m_max = if num == 0.0 {
        0.0
    } else if den == 0.0 {
        log::warn!(
            "peak amplification unbounded at kappa0 = {kappa0}, k1 = {k1}, k2 = {k2}: zero damping"
        );
        f64::INFINITY
    } else {
        num / den
    };
    Ok(Peak { m_max, omega_m })
}

/// Peak of `M(w)` located numerically: a log-spaced grid followed by
/// golden-section refinement in `log w` around the best grid point.
pub fn numeric_peak(
    kappa0: f64,
    gains: Gains,
    p: &VehicleParams,
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Peak> {
    let grid = log_space(lo, hi, points.max(3));
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &w) in grid.iter().enumerate() {
        let m = amplification(w, kappa0, gains, p)?;
        if m > best.1 {
            best = (i, m);
        }
    }
    let (i, _) = best;
    let mut a = grid[i.saturating_sub(1)].ln();
    let mut b = grid[(i + 1).min(grid.len() - 1)].ln();
    let f = |x: f64| amplification(x.exp(), kappa0, gains, p);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok(Peak {
        m_max: f(x)?,
        omega_m: x.exp(),
    })
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqResponse {
    pub kappa0: f64,
    pub gains: Gains,
    /// `(w, M(w))`, ascending in `w`.
    pub samples: Vec<(f64, f64)>,
    pub peak: Peak,
    pub stable: bool,
}

/// Default verification grid: 400 log-spaced frequencies on `[1e-3, 1e3]`
/// rad/s with `w_m` inserted.
pub fn freq_response(kappa0: f64, gains: Gains, p: &VehicleParams) -> Result<FreqResponse> {
    freq_response_on(kappa0, gains, p, &log_space(1e-3, 1e3, 400))
}

pub fn freq_response_on(
    kappa0: f64,
    gains: Gains,
    p: &VehicleParams,
    omegas: &[f64],
) -> Result<FreqResponse> {
    let verdict = is_stable(kappa0, gains, p)?;
    if !verdict.necessary_sufficient {
        log::warn!(
            "frequency response requested for an unstable loop (k1 = {}, k2 = {})",
            gains.k1,
            gains.k2
        );
    }
    let peak = peak_amplification(kappa0, gains, p)?;
    let mut ws: Vec<f64> = omegas
        .iter()
        .copied()
        .filter(|w| w.is_finite() && *w >= 0.0)
        .collect();
    if peak.omega_m.is_finite() && peak.omega_m > 0.0 {
        ws.push(peak.omega_m);
    }
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let samples = ws
        .into_iter()
        .map(|w| Ok((w, amplification(w, kappa0, gains, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FreqResponse {
        kappa0,
        gains,
        samples,
        peak,
        stable: verdict.necessary_sufficient,
    })
}

/// One cell of a gain-plane scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub k1: f64,
    pub k2: f64,
    pub kappa0: f64,
    pub stable: bool,
    pub marginal: bool,
    /// NaN for cells that are not stable.
    pub m_max: f64,
    pub omega_m: f64,
    pub error: Option<String>,
}

fn scan_cell(k1: f64, k2: f64, kappa0: f64, p: &VehicleParams) -> ScanCell {
    let gains = Gains::new(k1, k2);
    let eval = || -> Result<(StabilityVerdict, Peak)> {
        Ok((
            is_stable(kappa0, gains, p)?,
            peak_amplification(kappa0, gains, p)?,
        ))
    };
    match eval() {
        Ok((v, peak)) => {
            let stable = v.necessary_sufficient && !v.marginal;
            ScanCell {
                k1,
                k2,
                kappa0,
                stable: v.necessary_sufficient,
                marginal: v.marginal,
                m_max: if stable { peak.m_max } else { f64::NAN },
                omega_m: if stable { peak.omega_m } else { f64::NAN },
                error: None,
            }
        }
        Err(e) => ScanCell {
            k1,
            k2,
            kappa0,
            stable: false,
            marginal: false,
            m_max: f64::NAN,
            omega_m: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Stability verdict and peak amplification over a `resolution x resolution`
/// grid of `(k1, k2)` for each curvature. Cells are ordered by curvature,
/// then `k1`, then `k2`; the result does not depend on thread scheduling.
pub fn stability_region_scan(
    k1_range: (f64, f64),
    k2_range: (f64, f64),
    kappas: &[f64],
    p: &VehicleParams,
    resolution: usize,
) -> Result<Vec<ScanCell>> {
    if resolution < 2 {
        return Err(Error::param("resolution", "at least 2 points per axis"));
    }
    for (name, (lo, hi)) in [("k1_range", k1_range), ("k2_range", k2_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param(
                name,
                format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
    }
    let k1s = lin_space(k1_range.0, k1_range.1, resolution);
    let k2s = lin_space(k2_range.0, k2_range.1, resolution);
    let mut jobs = Vec::with_capacity(kappas.len() * resolution * resolution);
    for &kap in kappas {
        for &k1 in &k1s {
            jobs.extend(k2s.iter().map(|&k2| (k1, k2, kap)));
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(k1, k2, kap)| scan_cell(k1, k2, kap, p))
        .collect())
}
