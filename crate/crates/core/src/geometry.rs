//! Arc-length parameterised reference paths and path-frame / earth-frame
//! conversions.
//!
//! A [`Path`] answers three questions for any arc length `s`: the curvature
//! `kappa_D(s)`, its derivative `dkappa_D/ds`, and the pose
//! `(x_D, y_D, psi_D)` of the path point. Lateral deviation is positive when
//! the vehicle point lies to the left of the path tangent.

use std::f64::consts::{PI, TAU};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::rk4_step;

/// Grid spacing (m) for paths whose pose is reconstructed by integration.
pub const POSE_GRID_STEP: f64 = 0.01;

const PROJECTION_MAX_ITER: usize = 50;
const PROJECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Tangent direction, radians from the earth x axis.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Straight,
    /// Left-turning circle of the given radius (m).
    Circular {
        radius: f64,
    },
    /// `kappa(s) = kappa_max/2 * (1 - cos(2 pi s / period))` for
    /// `s` in `[0, periods * period]`, held at its end value beyond.
    Cosine {
        kappa_max: f64,
        period: f64,
        periods: u32,
    },
    /// Curvature table `(s, kappa)`, strictly increasing in `s`, interpolated
    /// with a monotone cubic. The anchor pose sits at the first table entry.
    Sampled {
        table: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub kind: PathKind,
    pub anchor: Pose,
}

impl PathSpec {
    pub fn new(kind: PathKind) -> Self {
        PathSpec {
            kind,
            anchor: Pose::default(),
        }
    }

    pub fn with_anchor(mut self, anchor: Pose) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.anchor;
        if !(a.x.is_finite() && a.y.is_finite() && a.heading.is_finite()) {
            return Err(Error::InvalidPath("anchor pose must be finite".into()));
        }
        match &self.kind {
            PathKind::Straight => Ok(()),
            PathKind::Circular { radius } => {
                if *radius > 0.0 && radius.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPath(format!(
                        "circular radius must be > 0, got {radius}"
                    )))
                }
            }
            PathKind::Cosine {
                kappa_max,
                period,
                periods,
            } => {
                if !(*period > 0.0 && period.is_finite()) {
                    return Err(Error::InvalidPath(format!(
                        "cosine period must be > 0, got {period}"
                    )));
                }
                if !(*kappa_max >= 0.0 && kappa_max.is_finite()) {
                    return Err(Error::InvalidPath(format!(
                        "cosine kappa_max must be >= 0, got {kappa_max}"
                    )));
                }
                if *periods == 0 {
                    return Err(Error::InvalidPath(
                        "cosine path needs at least one period".into(),
                    ));
                }
                Ok(())
            }
            PathKind::Sampled { table } => {
                if table.len() < 2 {
                    return Err(Error::InvalidPath(
                        "sampled table needs at least two rows".into(),
                    ));
                }
                if table.iter().any(|(s, k)| !s.is_finite() || !k.is_finite()) {
                    return Err(Error::InvalidPath(
                        "sampled table contains non-finite values".into(),
                    ));
                }
                if let Some(w) = table.windows(2).find(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidPath(format!(
                        "sampled table not strictly increasing in s at s = {}",
                        w[1].0
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Reads a two-column `(s_meters, kappa_per_meter)` CSV with a header row.
pub fn read_curvature_table(path: &FsPath) -> Result<Vec<(f64, f64)>> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    if headers.len() != 2 {
        return Err(csv_err(format!(
            "expected header with 2 columns (s_meters, kappa_per_meter), got {}",
            headers.len()
        )));
    }
    let mut table = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| csv_err(format!("row {}: missing column {}", row + 2, i + 1)))?
                .parse::<f64>()
                .map_err(|e| csv_err(format!("row {}: {e}", row + 2)))
        };
        table.push((field(0)?, field(1)?));
    }
    Ok(table)
}

/// Position of point A and vehicle yaw in the earth frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EarthState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Path-frame coordinates of point A: arc length of the closest path point
/// D, lateral deviation and yaw-angle error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PathState {
    pub s: f64,
    pub e: f64,
    pub theta: f64,
}

#[derive(Debug, Clone)]
enum Profile {
    Zero,
    Constant(f64),
    Cosine {
        half_kappa: f64,
        wavenumber: f64,
        end: f64,
    },
    Sampled(MonotoneCubic),
}

impl Profile {
    fn eval(&self, s: f64) -> Result<(f64, f64)> {
        Ok(match self {
            Profile::Zero => (0.0, 0.0),
            Profile::Constant(k) => (*k, 0.0),
            Profile::Cosine {
                half_kappa,
                wavenumber,
                end,
            } => {
                let s = s.clamp(0.0, *end);
                let inside = s > 0.0 && s < *end;
                let phase = wavenumber * s;
                let kappa = half_kappa * (1.0 - phase.cos());
                let slope = if inside {
                    half_kappa * wavenumber * phase.sin()
                } else {
                    0.0
                };
                (kappa, slope)
            }
            Profile::Sampled(m) => m.eval(s)?,
        })
    }
}

/// An immutable, evaluable reference path.
#[derive(Debug, Clone)]
pub struct Path {
    spec: PathSpec,
    profile: Profile,
    poses: Option<PoseTable>,
}

/// Builds a [`Path`] from its specification.
pub fn build_path(spec: PathSpec) -> Result<Path> {
    Path::new(spec)
}

impl Path {
    pub fn new(spec: PathSpec) -> Result<Self> {
        spec.validate()?;
        let profile = match &spec.kind {
            PathKind::Straight => Profile::Zero,
            PathKind::Circular { radius } => Profile::Constant(1.0 / radius),
            PathKind::Cosine {
                kappa_max,
                period,
                periods,
            } => Profile::Cosine {
                half_kappa: 0.5 * kappa_max,
                wavenumber: TAU / period,
                end: *periods as f64 * period,
            },
            PathKind::Sampled { table } => Profile::Sampled(MonotoneCubic::new(table)),
        };
        let poses = match &spec.kind {
            PathKind::Cosine {
                period, periods, ..
            } => Some(PoseTable::integrate(
                &profile,
                spec.anchor,
                0.0,
                *periods as f64 * period,
            )?),
            PathKind::Sampled { table } => {
                let (s0, s1) = (table[0].0, table[table.len() - 1].0);
                Some(PoseTable::integrate(&profile, spec.anchor, s0, s1)?)
            }
            _ => None,
        };
        Ok(Path {
            spec,
            profile,
            poses,
        })
    }

    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    /// Curvature and its arc-length derivative at `s`.
    pub fn curvature_at(&self, s: f64) -> Result<(f64, f64)> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("arc length must be finite, got {s}")));
        }
        self.profile.eval(s)
    }

    pub fn pose_at(&self, s: f64) -> Result<Pose> {
        if !s.is_finite() {
            return Err(Error::Domain(format!("arc length must be finite, got {s}")));
        }
        let a = self.spec.anchor;
        match (&self.profile, &self.poses) {
            (Profile::Zero, _) => Ok(advance_arc(a, 0.0, s)),
            (Profile::Constant(k), _) => Ok(advance_arc(a, *k, s)),
            (profile, Some(table)) => {
                if s < table.start {
                    match profile {
                        // cosine curvature is zero at s = 0: extend straight backwards
                        Profile::Cosine { .. } => Ok(advance_arc(a, 0.0, s)),
                        _ => Err(Error::Domain(format!(
                            "s = {s} before sampled path start {}",
                            table.start
                        ))),
                    }
                } else if s > table.end() {
                    match profile {
                        Profile::Cosine { .. } => {
                            let (k_end, _) = profile.eval(table.end())?;
                            Ok(advance_arc(table.last_pose(), k_end, s - table.end()))
                        }
                        _ => Err(Error::Domain(format!(
                            "s = {s} past sampled path end {}",
                            table.end()
                        ))),
                    }
                } else {
                    Ok(table.eval(s))
                }
            }
            _ => unreachable!("pose table exists for integrated path kinds"),
        }
    }

    /// Largest |kappa| anywhere on the path.
    pub fn max_abs_curvature(&self) -> f64 {
        match &self.spec.kind {
            PathKind::Straight => 0.0,
            PathKind::Circular { radius } => 1.0 / radius,
            PathKind::Cosine { kappa_max, .. } => *kappa_max,
            // the monotone interpolant never leaves the range of its data
            PathKind::Sampled { table } => table.iter().map(|(_, k)| k.abs()).fold(0.0, f64::max),
        }
    }

    /// `(period, count)` for periodic curvature profiles.
    pub fn curvature_period(&self) -> Option<(f64, u32)> {
        match self.spec.kind {
            PathKind::Cosine {
                period, periods, ..
            } => Some((period, periods)),
            _ => None,
        }
    }
}

/// Pose reached after travelling `ds` along a constant-curvature arc.
fn advance_arc(p: Pose, kappa: f64, ds: f64) -> Pose {
    let turn = kappa * ds;
    // chord length, evaluated without cancellation for small turns
    let chord = if turn.abs() < 1e-8 {
        ds
    } else {
        2.0 * (0.5 * turn).sin() / kappa
    };
    let mid = p.heading + 0.5 * turn;
    Pose {
        x: p.x + chord * mid.cos(),
        y: p.y + chord * mid.sin(),
        heading: p.heading + turn,
    }
}

/// Poses on a uniform arc-length grid, integrated with RK4 and read back
/// with cubic Hermite interpolation (derivatives are known exactly).
#[derive(Debug, Clone)]
struct PoseTable {
    start: f64,
    step: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    heading: Vec<f64>,
    kappa: Vec<f64>,
}

impl PoseTable {
    fn integrate(profile: &Profile, anchor: Pose, start: f64, end: f64) -> Result<Self> {
        let length = end - start;
        let cells = ((length / POSE_GRID_STEP).ceil() as usize).max(1);
        let step = length / cells as f64;
        let n = cells + 1;
        let mut table = PoseTable {
            start,
            step,
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            heading: Vec::with_capacity(n),
            kappa: Vec::with_capacity(n),
        };
        // state: (x, y, psi, s); s is carried so the field stays autonomous
        let mut state = [anchor.x, anchor.y, anchor.heading, start];
        for i in 0..n {
            table.x.push(state[0]);
            table.y.push(state[1]);
            table.heading.push(state[2]);
            table.kappa.push(profile.eval(start + i as f64 * step)?.0);
            if i + 1 < n {
                state = rk4_step(
                    |z| {
                        let (k, _) = profile.eval(z[3])?;
                        Ok([z[2].cos(), z[2].sin(), k, 1.0])
                    },
                    0.0,
                    &state,
                    step,
                )?;
                // pin the carried arc length to the grid
                state[3] = start + (i + 1) as f64 * step;
            }
        }
        Ok(table)
    }

    fn end(&self) -> f64 {
        self.start + self.step * (self.x.len() - 1) as f64
    }

    fn last_pose(&self) -> Pose {
        let i = self.x.len() - 1;
        Pose {
            x: self.x[i],
            y: self.y[i],
            heading: self.heading[i],
        }
    }

    fn eval(&self, s: f64) -> Pose {
        let u = (s - self.start) / self.step;
        let i = (u.floor() as usize).min(self.x.len() - 2);
        let t = u - i as f64;
        let h = self.step;
        let (h00, h10, h01, h11) = hermite_basis(t);
        let interp =
            |v: &[f64], m0: f64, m1: f64| h00 * v[i] + h10 * h * m0 + h01 * v[i + 1] + h11 * h * m1;
        let heading = interp(&self.heading, self.kappa[i], self.kappa[i + 1]);
        let (p0, p1) = (self.heading[i], self.heading[i + 1]);
        Pose {
            x: interp(&self.x, p0.cos(), p1.cos()),
            y: interp(&self.y, p0.sin(), p1.sin()),
            heading,
        }
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

fn hermite_basis_derivative(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    (
        6.0 * t2 - 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 2.0 * t,
    )
}

/// Shape-preserving piecewise cubic (Fritsch-Carlson slopes with the
/// weighted harmonic mean of neighbouring secants).
#[derive(Debug, Clone)]
struct MonotoneCubic {
    s: Vec<f64>,
    v: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    fn new(table: &[(f64, f64)]) -> Self {
        let s: Vec<f64> = table.iter().map(|p| p.0).collect();
        let v: Vec<f64> = table.iter().map(|p| p.1).collect();
        let n = s.len();
        let h: Vec<f64> = s.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (v[i + 1] - v[i]) / h[i]).collect();
        let mut slope = vec![0.0; n];
        if n == 2 {
            slope[0] = delta[0];
            slope[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    slope[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            slope[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slope[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        MonotoneCubic { s, v, slope }
    }

    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        let n = self.s.len();
        let (lo, hi) = (self.s[0], self.s[n - 1]);
        // absorb rounding in grid arithmetic at the table ends
        let slack = 1e-9 * (hi - lo).max(1.0);
        if x < lo - slack || x > hi + slack {
            return Err(Error::Domain(format!(
                "s = {x} outside sampled curvature table [{lo}, {hi}]"
            )));
        }
        let x = x.clamp(lo, hi);
        let i = match self.s.partition_point(|&si| si <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = self.s[i + 1] - self.s[i];
        let t = (x - self.s[i]) / h;
        let (h00, h10, h01, h11) = hermite_basis(t);
        let (d00, d10, d01, d11) = hermite_basis_derivative(t);
        let (v0, v1, m0, m1) = (self.v[i], self.v[i + 1], self.slope[i], self.slope[i + 1]);
        let value = h00 * v0 + h10 * h * m0 + h01 * v1 + h11 * h * m1;
        let deriv = (d00 * v0 + d10 * h * m0 + d01 * v1 + d11 * h * m1) / h;
        Ok((value, deriv))
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Wraps `psi - psi_d` into `[-pi, pi)`. Half-integer multiples of `2 pi`
/// round to even, and `+pi` maps to `-pi`.
pub fn wrap_angle_error(psi: f64, psi_d: f64) -> f64 {
    let diff = psi - psi_d;
    let mut theta = diff - TAU * (diff / TAU).round_ties_even();
    if theta >= PI {
        theta -= TAU;
    } else if theta < -PI {
        theta += TAU;
    }
    theta
}

/// Signed lateral offset `(t x r) . k` of the point `r` (relative to the
/// path point) with respect to the unit tangent `t`.
pub fn signed_offset_cross(tangent: [f64; 2], r: [f64; 2]) -> f64 {
    tangent[0] * r[1] - tangent[1] * r[0]
}

/// Lateral deviation from earth coordinates of A and the path point D.
pub fn lateral_deviation(a: (f64, f64), d: &Pose) -> f64 {
    -(a.0 - d.x) * d.heading.sin() + (a.1 - d.y) * d.heading.cos()
}

/// Maps a path-frame state back to earth coordinates.
pub fn path_to_earth(path: &Path, ps: &PathState) -> Result<EarthState> {
    let d = path.pose_at(ps.s)?;
    let (sin_d, cos_d) = d.heading.sin_cos();
    Ok(EarthState {
        x: d.x - ps.e * sin_d,
        y: d.y + ps.e * cos_d,
        psi: d.heading + ps.theta,
    })
}

/// Finds the closest path point to A by Newton iteration on the
/// orthogonality condition `(A - D(s)) . t_D(s) = 0`, seeded at `s_hint`.
pub fn project_to_earth_errors(path: &Path, es: &EarthState, s_hint: f64) -> Result<PathState> {
    let mut s = s_hint;
    for _ in 0..PROJECTION_MAX_ITER {
        let d = path.pose_at(s)?;
        let (kappa, _) = path.curvature_at(s)?;
        let (sin_d, cos_d) = d.heading.sin_cos();
        let (rx, ry) = (es.x - d.x, es.y - d.y);
        let along = rx * cos_d + ry * sin_d;
        let e = -rx * sin_d + ry * cos_d;
        let denom = 1.0 - kappa * e;
        if denom.abs() < 1e-12 {
            return Err(Error::Domain(format!(
                "projection at curvature centre (s = {s}, e = {e}, kappa = {kappa})"
            )));
        }
        let ds = along / denom;
        s += ds;
        if !s.is_finite() {
            return Err(Error::Projection(format!(
                "iterate diverged from hint {s_hint}"
            )));
        }
        if ds.abs() < PROJECTION_TOL {
            let d = path.pose_at(s)?;
            let (kappa, _) = path.curvature_at(s)?;
            let e = lateral_deviation((es.x, es.y), &d);
            if (e * kappa).abs() >= 1.0 {
                return Err(Error::Domain(format!(
                    "ambiguous projection: |e*kappa| = {} >= 1",
                    (e * kappa).abs()
                )));
            }
            return Ok(PathState {
                s,
                e,
                theta: wrap_angle_error(es.psi, d.heading),
            });
        }
    }
    Err(Error::Projection(format!(
        "no convergence within {PROJECTION_MAX_ITER} iterations from hint {s_hint}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cosine_table1() -> Path {
        build_path(PathSpec::new(PathKind::Cosine {
            kappa_max: 0.004 * PI,
            period: 250.0,
            periods: 4,
        }))
        .unwrap()
    }

    fn circle(radius: f64) -> Path {
        build_path(PathSpec::new(PathKind::Circular { radius })).unwrap()
    }

    fn straight() -> Path {
        build_path(PathSpec::new(PathKind::Straight)).unwrap()
    }

    #[test]
    fn straight_has_zero_curvature() {
        let p = straight();
        for s in [0.0, 1.0, 1e4] {
            assert_eq!(p.curvature_at(s).unwrap(), (0.0, 0.0));
        }
    }

    #[test]
    fn circular_curvature_is_inverse_radius() {
        let p = circle(200.0);
        for s in [0.0, 17.0, 900.0] {
            assert_eq!(p.curvature_at(s).unwrap(), (0.005, 0.0));
        }
    }

    #[test]
    fn cosine_curvature_samples() {
        let p = cosine_table1();
        assert_eq!(p.curvature_at(0.0).unwrap(), (0.0, 0.0));
        let (k, _) = p.curvature_at(125.0).unwrap();
        assert_abs_diff_eq!(k, 0.004 * PI, epsilon = 1e-15);
        // extended-precision reference values of the profile and its derivative
        let (k, dk) = p.curvature_at(62.5).unwrap();
        assert_abs_diff_eq!(k, 0.006283185307179586, epsilon = 1e-15);
        assert_abs_diff_eq!(dk, 1.5791367041742973e-4, epsilon = 1e-17);
    }

    #[test]
    fn cosine_is_held_past_its_end() {
        let p = cosine_table1();
        let (k, dk) = p.curvature_at(1200.0).unwrap();
        assert_abs_diff_eq!(k, 0.0, epsilon = 1e-15);
        assert_eq!(dk, 0.0);
        // pose continues straight along the end tangent
        let end = p.pose_at(1000.0).unwrap();
        let beyond = p.pose_at(1100.0).unwrap();
        assert_abs_diff_eq!(beyond.heading, end.heading, epsilon = 1e-12);
        assert_abs_diff_eq!(beyond.x - end.x, 100.0 * end.heading.cos(), epsilon = 1e-9);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        for kind in [
            PathKind::Circular { radius: 0.0 },
            PathKind::Circular { radius: -5.0 },
            PathKind::Cosine {
                kappa_max: 0.01,
                period: 0.0,
                periods: 1,
            },
            PathKind::Cosine {
                kappa_max: -0.01,
                period: 10.0,
                periods: 1,
            },
            PathKind::Sampled {
                table: vec![(0.0, 0.0), (1.0, 0.1), (1.0, 0.2)],
            },
            PathKind::Sampled {
                table: vec![(0.0, 0.0)],
            },
        ] {
            assert!(matches!(
                build_path(PathSpec::new(kind)),
                Err(Error::InvalidPath(_))
            ));
        }
    }

    #[test]
    fn sampled_outside_table_is_domain_error() {
        let p = build_path(PathSpec::new(PathKind::Sampled {
            table: vec![(0.0, 0.0), (10.0, 0.01), (20.0, 0.0)],
        }))
        .unwrap();
        assert!(matches!(p.curvature_at(-0.1), Err(Error::Domain(_))));
        assert!(matches!(p.curvature_at(20.5), Err(Error::Domain(_))));
        assert!(matches!(p.pose_at(25.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sampled_interpolant_is_monotone_and_differentiable() {
        let table: Vec<(f64, f64)> = vec![
            (0.0, 0.0),
            (10.0, 0.002),
            (20.0, 0.01),
            (30.0, 0.011),
            (40.0, 0.011),
        ];
        let p = build_path(PathSpec::new(PathKind::Sampled {
            table: table.clone(),
        }))
        .unwrap();
        for &(s, k) in &table {
            assert_abs_diff_eq!(p.curvature_at(s).unwrap().0, k, epsilon = 1e-15);
        }
        let mut prev = -1.0;
        let mut s = 0.0;
        while s <= 40.0 {
            let (k, dk) = p.curvature_at(s).unwrap();
            assert!(k >= prev - 1e-15, "not monotone at {s}");
            assert!(dk >= -1e-15);
            // derivative agrees with a central difference
            if s > 1e-3 && s < 40.0 - 1e-3 {
                let fd = (p.curvature_at(s + 1e-6).unwrap().0
                    - p.curvature_at(s - 1e-6).unwrap().0)
                    / 2e-6;
                assert_abs_diff_eq!(fd, dk, epsilon = 1e-8);
            }
            prev = k;
            s += 0.37;
        }
        // flat final segment stays flat
        assert_abs_diff_eq!(p.curvature_at(35.0).unwrap().0, 0.011, epsilon = 1e-15);
    }

    #[test]
    fn path_to_earth_examples() {
        let p = straight();
        let es = path_to_earth(
            &p,
            &PathState {
                s: 5.0,
                e: -10.0,
                theta: 0.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(es.x, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.y, -10.0, epsilon = 1e-15);
        assert_eq!(es.psi, 0.0);

        let c = circle(200.0);
        let es = path_to_earth(
            &c,
            &PathState {
                s: 0.0,
                e: -10.0,
                theta: 0.1,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(es.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.y, -10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(es.psi, 0.1, epsilon = 1e-15);

        let d = c.pose_at(123.0).unwrap();
        let es = path_to_earth(
            &c,
            &PathState {
                s: 123.0,
                e: 0.0,
                theta: 0.0,
            },
        )
        .unwrap();
        assert_eq!((es.x, es.y, es.psi), (d.x, d.y, d.heading));
    }

    #[test]
    fn circle_pose_lies_on_circle() {
        let c = circle(200.0);
        for s in [0.0, 50.0, 314.0, 1000.0] {
            let p = c.pose_at(s).unwrap();
            assert_abs_diff_eq!(p.x.hypot(p.y - 200.0), 200.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.heading, s / 200.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_examples() {
        let p = straight();
        let ps = project_to_earth_errors(
            &p,
            &EarthState {
                x: 5.0,
                y: -10.0,
                psi: 0.0,
            },
            0.0,
        )
        .unwrap();
        assert_abs_diff_eq!(ps.s, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ps.e, -10.0, epsilon = 1e-12);
        assert_eq!(ps.theta, 0.0);

        let c = cosine_table1();
        let d = c.pose_at(333.3).unwrap();
        let ps = project_to_earth_errors(
            &c,
            &EarthState {
                x: d.x,
                y: d.y,
                psi: d.heading,
            },
            330.0,
        )
        .unwrap();
        assert_abs_diff_eq!(ps.s, 333.3, epsilon = 1e-9);
        assert_abs_diff_eq!(ps.e, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(ps.theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_at_circle_centre_is_rejected() {
        let c = circle(10.0);
        let err = project_to_earth_errors(
            &c,
            &EarthState {
                x: 0.0,
                y: 10.0,
                psi: 0.0,
            },
            1.0,
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::Domain(_) | Error::Projection(_)),
            "{err}"
        );
    }

    #[test]
    fn wrap_examples() {
        assert_abs_diff_eq!(wrap_angle_error(0.1, 0.0), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle_error(TAU + 0.1, 0.0), 0.1, epsilon = 1e-14);
        assert_eq!(wrap_angle_error(PI, 0.0), -PI);
        assert_eq!(wrap_angle_error(-PI, 0.0), -PI);
        assert_eq!(wrap_angle_error(3.0 * PI, 0.0), -PI);
    }

    #[test]
    fn heading_integrates_curvature() {
        // closed-form integral of the cosine profile
        let p = cosine_table1();
        let (km, st) = (0.004 * PI, 250.0);
        for s in [0.0, 10.0, 62.5, 125.0, 480.2, 999.99, 1000.0] {
            let exact = 0.5 * km * (s - st / TAU * (TAU * s / st).sin());
            assert_abs_diff_eq!(p.pose_at(s).unwrap().heading, exact, epsilon = 1e-11);
        }
        // sampled: trapezoid-free check against a fine Simpson rule on the interpolant
        let table: Vec<(f64, f64)> = (0..=20)
            .map(|i| (i as f64 * 5.0, 0.01 * (i as f64 * 0.3).sin()))
            .collect();
        let sp = build_path(PathSpec::new(PathKind::Sampled { table })).unwrap();
        let n = 20_000;
        let h = 100.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * sp.curvature_at(i as f64 * h).unwrap().0;
        }
        acc *= h / 3.0;
        assert_abs_diff_eq!(sp.pose_at(100.0).unwrap().heading, acc, epsilon = 1e-9);
    }

    #[test]
    fn positions_follow_heading() {
        // finite-difference velocity of (x_D, y_D) is the unit tangent
        let p = cosine_table1();
        for s in [3.3, 77.7, 512.0, 998.0] {
            let (a, b) = (p.pose_at(s - 1e-4).unwrap(), p.pose_at(s + 1e-4).unwrap());
            let h = p.pose_at(s).unwrap().heading;
            assert_abs_diff_eq!((b.x - a.x) / 2e-4, h.cos(), epsilon = 1e-7);
            assert_abs_diff_eq!((b.y - a.y) / 2e-4, h.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn reads_curvature_csv() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("k.csv");
        std::fs::write(&f, "s_meters,kappa_per_meter\n0,0\n10,0.01\n20,0.0\n").unwrap();
        let table = read_curvature_table(&f).unwrap();
        assert_eq!(table, vec![(0.0, 0.0), (10.0, 0.01), (20.0, 0.0)]);

        std::fs::write(&f, "0,0\n10,x\n").unwrap();
        assert!(matches!(read_curvature_table(&f), Err(Error::Csv { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn cross_product_matches_closed_form(
            dx in -1e3..1e3f64, dy in -1e3..1e3f64, heading in -10.0..10.0f64,
            ax in -1e3..1e3f64, ay in -1e3..1e3f64,
        ) {
            let d = Pose { x: dx, y: dy, heading };
            let cross = signed_offset_cross([heading.cos(), heading.sin()], [ax - dx, ay - dy]);
            prop_assert!((cross - lateral_deviation((ax, ay), &d)).abs() < 1e-12 * (1.0 + cross.abs()));
        }

        #[test]
        fn round_trip_circle(s in 0.0..1200.0f64, e in -50.0..50.0f64, theta in -3.0..3.0f64, jitter in -1.0..1.0f64) {
            let c = circle(200.0);
            let ps = PathState { s, e, theta };
            let es = path_to_earth(&c, &ps).unwrap();
            let back = project_to_earth_errors(&c, &es, s + jitter).unwrap();
            prop_assert!((back.s - s).abs() < 1e-9);
            prop_assert!((back.e - e).abs() < 1e-9);
            prop_assert!((back.theta - theta).abs() < 1e-9);
        }

        #[test]
        fn round_trip_cosine(s in 0.0..1100.0f64, e in -20.0..20.0f64, theta in -3.0..3.0f64, jitter in -1.0..1.0f64) {
            let p = cosine_table1();
            let ps = PathState { s, e, theta };
            let es = path_to_earth(&p, &ps).unwrap();
            let back = project_to_earth_errors(&p, &es, s + jitter).unwrap();
            prop_assert!((back.s - s).abs() < 1e-9);
            prop_assert!((back.e - e).abs() < 1e-9);
            prop_assert!((back.theta - theta).abs() < 1e-9);
        }

        #[test]
        fn wrap_range_and_periodicity(psi in -50.0..50.0f64, psi_d in -50.0..50.0f64, n in -5i32..5) {
            let a = wrap_angle_error(psi, psi_d);
            prop_assert!((-PI..PI).contains(&a));
            let b = wrap_angle_error(psi + TAU * n as f64, psi_d);
            prop_assert!((-PI..PI).contains(&b));
            // equal modulo the branch cut
            let diff = (a - b).abs();
            prop_assert!(diff < 1e-9 || (diff - TAU).abs() < 1e-9);
            if a.abs() < PI - 1e-6 {
                prop_assert!(diff < 1e-9);
            }
        }
    }
}
