//! Transport maps along `xi` (`psi_s`) and along `v` (`phi_s`), the
//! Fredholm scalar `(phi_s^* alpha)(xi)` and conjugate points.
//!
//! Both flows are exact. `psi_s` moves along the straight Reeb line at fixed
//! height; `phi_s` solves `d/ds theta(z(s)) = 1`, so `z(s) = theta^-1(theta(z) + s)`.
//! [`integrate_flow`] is a classical RK4 integrator kept as an independent
//! oracle for both.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::contact::{dot, max_abs_diff, ContactFamily, Vec3, CLOSED_FORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::manifold::{circle_distance, normalize, TorusPoint};

/// Conjugate-point scans use this many brackets per window.
pub const CONJUGATE_SCAN_RESOLUTION: usize = 1024;
/// Bisection stops once the bracket on `s` is this narrow.
pub const CONJUGATE_BISECTION_TOLERANCE: f64 = 1e-13;

/// Reeb flow in the universal cover, starting from the raw point `start`.
pub fn psi_lift(f: &ContactFamily, start: &Vec3, s: f64) -> Vec3 {
    let xi = f.reeb_raw(start[2]);
    [start[0] + s * xi[0], start[1] + s * xi[1], start[2]]
}

pub fn psi(f: &ContactFamily, q: &TorusPoint, s: f64) -> Result<TorusPoint> {
    normalize(psi_lift(f, &q.coords(), s), &f.gluing())
}

/// Flow of `v` in the universal cover; only the height moves.
pub fn phi_lift(f: &ContactFamily, start: &Vec3, s: f64) -> Result<Vec3> {
    if !s.is_finite() {
        return Err(Error::Range(s));
    }
    let z = match f.linear_slope() {
        Some(n) => start[2] + s / n,
        None => f.theta_inverse(f.theta(start[2]) + s)?,
    };
    Ok([start[0], start[1], z])
}

pub fn phi(f: &ContactFamily, q: &TorusPoint, s: f64) -> Result<TorusPoint> {
    normalize(phi_lift(f, &q.coords(), s)?, &f.gluing())
}

/// Classical fourth-order Runge-Kutta flow of `field` for time `s`.
pub fn integrate_flow<F>(field: F, start: &Vec3, s: f64, steps: usize) -> Vec3
where
    F: Fn(&Vec3) -> Vec3,
{
    let steps = steps.max(1);
    let h = s / steps as f64;
    let mut p = *start;
    let shifted = |p: &Vec3, k: &Vec3, t: f64| [p[0] + t * k[0], p[1] + t * k[1], p[2] + t * k[2]];
    for _ in 0..steps {
        let k1 = field(&p);
        let k2 = field(&shifted(&p, &k1, 0.5 * h));
        let k3 = field(&shifted(&p, &k2, 0.5 * h));
        let k4 = field(&shifted(&p, &k3, h));
        for i in 0..3 {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

/// `(phi_s^* alpha)` at the base point `q`, as a covector.
///
/// `phi_s` fixes `(x, y)` and its differential scales `d/dz` by
/// `theta'(z) / theta'(z_s)`; `alpha` has no `dz` component, so the pullback
/// is `alpha` evaluated at the transported height.
pub fn pullback_alpha_along_v(f: &ContactFamily, q: &Vec3, s: f64) -> Result<Vec3> {
    let moved = phi_lift(f, q, s)?;
    let a = f.alpha_raw(moved[2]);
    let stretch = f.theta_prime(q[2]) / f.theta_prime(moved[2]);
    Ok([a[0], a[1], a[2] * stretch])
}

/// `(phi_s^* alpha)(xi)` at `q`; equals `cos(s)` for the exact flow.
pub fn fredholm_quantity(f: &ContactFamily, q: &Vec3, s: f64) -> Result<f64> {
    let pulled = pullback_alpha_along_v(f, q, s)?;
    Ok(dot(&pulled, &f.reeb_raw(q[2])))
}

/// `|(phi_s^* alpha) - alpha|` componentwise at `q`.
pub fn conjugacy_residual(f: &ContactFamily, q: &Vec3, s: f64) -> Result<f64> {
    let pulled = pullback_alpha_along_v(f, q, s)?;
    Ok(max_abs_diff(&pulled, &f.alpha_raw(q[2])))
}

/// Two points on one `v`-orbit are conjugate when `s != 0` and the transport
/// carries `alpha` onto itself.
pub fn is_conjugate_jump(f: &ContactFamily, q: &Vec3, s: f64) -> Result<bool> {
    Ok(s != 0.0 && conjugacy_residual(f, q, s)? < CLOSED_FORM_TOLERANCE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmReport {
    pub base: TorusPoint,
    pub s_max: f64,
    pub samples: usize,
    pub supremum: f64,
    /// Flow parameters where the supremum is attained, ascending.
    pub argmax: Vec<f64>,
    /// True when the supremum reaches 1 at some `s != 0`, i.e. the hypothesis
    /// `(phi_s^* alpha)(xi) < 1` for all `s != 0` fails.
    pub violated: bool,
}

fn golden_max<F: Fn(f64) -> f64>(g: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        if ga >= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - ratio * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + ratio * (hi - lo);
            gb = g(b);
        }
    }
    if ga >= gb {
        (a, ga)
    } else {
        (b, gb)
    }
}

/// Samples `(phi_s^* alpha)(xi)` on `(0, s_max]` and refines every interior
/// local maximum with a golden-section search.
pub fn fredholm_scan(
    f: &ContactFamily,
    q: &TorusPoint,
    s_max: f64,
    samples: usize,
) -> Result<FredholmReport> {
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!("s_max must be positive, got {s_max}")));
    }
    if samples < 2 {
        return Err(Error::InsufficientResolution {
            min: 2,
            got: samples,
        });
    }
    let base = q.coords();
    let g = |s: f64| fredholm_quantity(f, &base, s);
    let grid: Vec<f64> = (1..=samples)
        .map(|i| s_max * i as f64 / samples as f64)
        .collect();
    let values = grid.iter().map(|&s| g(s)).collect::<Result<Vec<f64>>>()?;

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..samples {
        let left_ok = i == 0 || values[i] >= values[i - 1];
        let right_ok = i + 1 == samples || values[i] >= values[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if i == 0 || i + 1 == samples {
            // never refine towards s = 0, and stay inside the window
            candidates.push((grid[i], values[i]));
        } else {
            let refine = |s: f64| g(s).unwrap_or(f64::NEG_INFINITY);
            let (s, v) = golden_max(refine, grid[i - 1], grid[i + 1]);
            candidates.push(if v >= values[i] { (s, v) } else { (grid[i], values[i]) });
        }
    }
    let supremum = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut argmax: Vec<f64> = candidates
        .iter()
        .filter(|c| c.1 >= supremum - CLOSED_FORM_TOLERANCE)
        .map(|c| c.0)
        .collect();
    argmax.sort_by(f64::total_cmp);
    argmax.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(FredholmReport {
        base: *q,
        s_max,
        samples,
        supremum,
        argmax,
        violated: supremum >= 1.0 - CLOSED_FORM_TOLERANCE,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePoint {
    /// Flow parameter of `v`.
    pub s: f64,
    pub image: TorusPoint,
    /// Height displacement `z_s - z` in the cover.
    pub z_shift: f64,
    /// `theta(z_s) - theta(z) = 2pi * winding`.
    pub winding: i64,
    pub same_fiber: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePointList {
    pub base: TorusPoint,
    pub window: f64,
    pub points: Vec<ConjugatePoint>,
}

/// All conjugate points of `q` with flow parameter in `(0, window]`.
///
/// The map `s -> theta(z_s) - theta(z)` is increasing; it is scanned at
/// `window / 1024` to bracket each crossing of `2pi k`, which is then refined
/// by bisection.
pub fn conjugate_points(f: &ContactFamily, q: &TorusPoint, window: f64) -> Result<ConjugatePointList> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
    }
    let base = q.coords();
    let theta0 = f.theta(base[2]);
    let advance = |s: f64| -> Result<f64> { Ok(f.theta(phi_lift(f, &base, s)?[2]) - theta0) };

    let grid: Vec<f64> = (0..=CONJUGATE_SCAN_RESOLUTION)
        .map(|i| window * i as f64 / CONJUGATE_SCAN_RESOLUTION as f64)
        .collect();
    let values = grid.iter().map(|&s| advance(s)).collect::<Result<Vec<f64>>>()?;
    let top = values[CONJUGATE_SCAN_RESOLUTION];

    let mut points = Vec::new();
    let mut k: i64 = 1;
    loop {
        let target = TAU * k as f64;
        if top < target - CLOSED_FORM_TOLERANCE {
            break;
        }
        let s = if top <= target {
            // the window ends on the conjugate point itself
            window
        } else {
            let i = values.partition_point(|&v| v < target);
            let (mut lo, mut hi) = (grid[i - 1], grid[i]);
            for _ in 0..200 {
                if hi - lo <= CONJUGATE_BISECTION_TOLERANCE * hi.max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if advance(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let lifted = phi_lift(f, &base, s)?;
        points.push(ConjugatePoint {
            s,
            image: normalize(lifted, &f.gluing())?,
            z_shift: lifted[2] - base[2],
            winding: k,
            same_fiber: circle_distance(lifted[2], base[2]) < CLOSED_FORM_TOLERANCE,
            residual: conjugacy_residual(f, &base, s)?,
        });
        k += 1;
    }
    Ok(ConjugatePointList {
        base: *q,
        window,
        points,
    })
}

/// Conjugate points over one full turn of the fiber, i.e. a window of
/// `theta(z + 2pi) - theta(z)`.
pub fn conjugate_points_per_fiber(f: &ContactFamily, q: &TorusPoint) -> Result<ConjugatePointList> {
    conjugate_points(f, q, f.fiber_advance())
}
