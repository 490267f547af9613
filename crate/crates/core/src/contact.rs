//! The two families of contact forms and their adapted frames.
//!
//! Both families have the shape `alpha = cos(theta(z)) dx + sin(theta(z)) dy`
//! with `theta(z) = n z` for [`ContactFamily::Linear`] and `theta = h` for
//! [`ContactFamily::Giroux`]. Every frame field depends on `z` alone, so all
//! evaluations are done on raw heights in the universal cover and the fiber
//! periodicity is carried by `h(z + 2pi) = h(z) + offset`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{GluingMatrix, TorusPoint};

pub type Vec3 = [f64; 3];

/// Default central-difference step for Lie brackets and exterior derivatives.
pub const FD_STEP: f64 = 1e-5;
/// Coarse step of the extrapolated differences used in nested brackets.
pub const NESTED_FD_STEP: f64 = 2e-3;
/// Tolerance for identities evaluated from closed forms.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-9;
/// Tolerance for identities evaluated with finite differences.
pub const FD_TOLERANCE: f64 = 1e-6;
/// Smallest admissible `h'` before `v = h'^-1 d/dz` is considered degenerate.
pub const MIN_DERIVATIVE: f64 = 1e-12;

const PINCHING_TOLERANCE: f64 = 1e-9;

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn max_abs_diff(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn axpy(q: &Vec3, t: f64, dir: &Vec3) -> Vec3 {
    [q[0] + t * dir[0], q[1] + t * dir[1], q[2] + t * dir[2]]
}

/// Strictly increasing piecewise-cubic `h` on `[0, 2pi]`, extended to `R` by
/// `h(z + 2pi) = h(z) + offset`.
///
/// Knot slopes are the Fritsch-Butland weighted harmonic means of the
/// neighbouring secants, with the first and last knot sharing one slope
/// computed across the period, so the extension is `C^1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledMonotone {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    offset: f64,
}

impl SampledMonotone {
    pub fn new(pairs: &[(f64, f64)], offset: f64) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidFamily(m));
        if pairs.len() < 2 {
            return invalid("sampled h needs at least two knots".into());
        }
        if pairs.iter().any(|(z, h)| !z.is_finite() || !h.is_finite()) || !offset.is_finite() {
            return invalid("sampled h contains non-finite values".into());
        }
        let first = pairs[0];
        let last = pairs[pairs.len() - 1];
        if first.0.abs() > 1e-9 || (last.0 - TAU).abs() > 1e-9 {
            return invalid(format!(
                "knots must span [0, 2pi], got [{}, {}]",
                first.0, last.0
            ));
        }
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return invalid(format!(
                    "table is not strictly increasing at z = {}",
                    w[1].0
                ));
            }
        }
        let span = last.1 - first.1;
        if (span - offset).abs() > 1e-9 * offset.abs().max(1.0) {
            return invalid(format!(
                "offset {offset} disagrees with h(2pi) - h(0) = {span}"
            ));
        }
        let mut knots: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let k = knots.len();
        knots[0] = 0.0;
        knots[k - 1] = TAU;

        let widths: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let secants: Vec<f64> = values
            .windows(2)
            .zip(&widths)
            .map(|(v, w)| (v[1] - v[0]) / w)
            .collect();
        let blend = |h_prev: f64, d_prev: f64, h_next: f64, d_next: f64| {
            let w1 = 2.0 * h_next + h_prev;
            let w2 = h_next + 2.0 * h_prev;
            (w1 + w2) / (w1 / d_prev + w2 / d_next)
        };
        let mut slopes = vec![0.0; k];
        for i in 1..k - 1 {
            slopes[i] = blend(widths[i - 1], secants[i - 1], widths[i], secants[i]);
        }
        let wrap = blend(widths[k - 2], secants[k - 2], widths[0], secants[0]);
        slopes[0] = wrap;
        slopes[k - 1] = wrap;

        let table = SampledMonotone {
            knots,
            values,
            slopes,
            offset,
        };
        // the cubic pieces must keep h' strictly positive between knots
        for i in 0..k - 1 {
            for j in 0..=16 {
                let z = table.knots[i] + widths[i] * j as f64 / 16.0;
                let d = table.derivative_in_period(z);
                if !(d > MIN_DERIVATIVE) {
                    return invalid(format!("interpolated h' = {d:.3e} at z = {z}"));
                }
            }
        }
        Ok(table)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.values.iter().copied())
    }

    fn interval(&self, z: f64) -> usize {
        let i = self.knots.partition_point(|&k| k <= z);
        i.clamp(1, self.knots.len() - 1) - 1
    }

    fn hermite(&self, z: f64) -> (f64, f64) {
        let i = self.interval(z);
        let w = self.knots[i + 1] - self.knots[i];
        let t = (z - self.knots[i]) / w;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * w, self.slopes[i + 1] * w);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / w;
        (value, deriv)
    }

    fn derivative_in_period(&self, z: f64) -> f64 {
        self.hermite(z).1
    }

    fn split(z: f64) -> (f64, f64) {
        let j = (z / TAU).floor();
        let r = z - j * TAU;
        if r >= TAU {
            (j + 1.0, 0.0)
        } else if r < 0.0 {
            (j - 1.0, (r + TAU).min(TAU))
        } else {
            (j, r)
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        let (j, r) = Self::split(z);
        self.hermite(r).0 + j * self.offset
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let (_, r) = Self::split(z);
        self.hermite(r).1
    }

    pub fn inverse(&self, target: f64) -> Result<f64> {
        if !target.is_finite() {
            return Err(Error::Range(target));
        }
        let h0 = self.values[0];
        let j = ((target - h0) / self.offset).floor();
        if j.abs() > 1e12 {
            return Err(Error::Range(target));
        }
        let local = (target - j * self.offset).clamp(h0, h0 + self.offset);
        let i = self
            .values
            .partition_point(|&v| v <= local)
            .clamp(1, self.values.len() - 1)
            - 1;
        let (mut lo, mut hi) = (self.knots[i], self.knots[i + 1]);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.hermite(mid).0 < local {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = 0.5 * (lo + hi) + j * TAU;
        if !z.is_finite() {
            return Err(Error::Range(target));
        }
        Ok(z)
    }
}

/// The increasing function `h` of a Giroux family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneFunction {
    /// `h(z) = slope * z + amplitude * sin(frequency * z)`.
    Parametric {
        slope: u32,
        amplitude: f64,
        frequency: u32,
    },
    Sampled(SampledMonotone),
}

impl MonotoneFunction {
    pub fn parametric(slope: u32, amplitude: f64, frequency: u32) -> Result<Self> {
        if slope == 0 || frequency == 0 {
            return Err(Error::InvalidFamily(
                "slope and frequency must be positive".into(),
            ));
        }
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidFamily(format!(
                "amplitude must be a finite non-negative number, got {amplitude}"
            )));
        }
        if amplitude * frequency as f64 >= slope as f64 {
            return Err(Error::InvalidFamily(format!(
                "h is not strictly increasing: amplitude*frequency = {} >= slope {slope}",
                amplitude * frequency as f64
            )));
        }
        Ok(MonotoneFunction::Parametric {
            slope,
            amplitude,
            frequency,
        })
    }

    pub fn value(&self, z: f64) -> f64 {
        match self {
            MonotoneFunction::Parametric {
                slope,
                amplitude,
                frequency,
            } => *slope as f64 * z + amplitude * (*frequency as f64 * z).sin(),
            MonotoneFunction::Sampled(s) => s.value(z),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            MonotoneFunction::Parametric {
                slope,
                amplitude,
                frequency,
            } => {
                let k = *frequency as f64;
                *slope as f64 + amplitude * k * (k * z).cos()
            }
            MonotoneFunction::Sampled(s) => s.derivative(z),
        }
    }

    /// `h(z + 2pi) - h(z)`, which is constant for both representations.
    pub fn period_offset(&self) -> f64 {
        match self {
            MonotoneFunction::Parametric { slope, .. } => TAU * *slope as f64,
            MonotoneFunction::Sampled(s) => s.offset(),
        }
    }

    /// Solves `h(z) = target` (Newton with a bisection fallback for the
    /// closed form, bisection on the cubic pieces for tables).
    pub fn inverse(&self, target: f64) -> Result<f64> {
        match self {
            MonotoneFunction::Parametric {
                slope,
                amplitude,
                frequency,
            } => {
                if !target.is_finite() {
                    return Err(Error::Range(target));
                }
                let n = *slope as f64;
                if *amplitude == 0.0 {
                    return Ok(target / n);
                }
                // |h(z) - n z| <= amplitude brackets the root
                let mut lo = (target - amplitude) / n;
                let mut hi = (target + amplitude) / n;
                let k = *frequency as f64;
                let mut z = target / n;
                for _ in 0..100 {
                    let f = n * z + amplitude * (k * z).sin() - target;
                    if f == 0.0 {
                        return Ok(z);
                    }
                    if f < 0.0 {
                        lo = z;
                    } else {
                        hi = z;
                    }
                    let d = n + amplitude * k * (k * z).cos();
                    let mut next = z - f / d;
                    if !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
                        return Ok(next);
                    }
                    z = next;
                }
                Ok(z)
            }
            MonotoneFunction::Sampled(s) => s.inverse(target),
        }
    }
}

/// A contact form `cos(theta(z)) dx + sin(theta(z)) dy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ContactFamily {
    /// `alpha_n` on `T^3`, `theta(z) = n z`.
    Linear { n: u32 },
    /// `alpha_h` on the bundle `Y_A`, with `2pi n <= h(z + 2pi) - h(z) <= 2pi (n + 1)`.
    Giroux {
        h: MonotoneFunction,
        n: u32,
        gluing: GluingMatrix,
    },
}

impl ContactFamily {
    pub fn linear(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidFamily("n must be at least 1".into()));
        }
        Ok(ContactFamily::Linear { n })
    }

    pub fn giroux(h: MonotoneFunction, n: u32, gluing: GluingMatrix) -> Result<Self> {
        let family = ContactFamily::Giroux { h, n, gluing };
        family.validate()?;
        Ok(family)
    }

    /// Checks `n >= 1`, monotonicity of `h` and the pinching inequality.
    pub fn validate(&self) -> Result<()> {
        match self {
            ContactFamily::Linear { n } => {
                if *n == 0 {
                    return Err(Error::InvalidFamily("n must be at least 1".into()));
                }
            }
            ContactFamily::Giroux { h, n, .. } => {
                if *n == 0 {
                    return Err(Error::InvalidFamily("n must be at least 1".into()));
                }
                if let MonotoneFunction::Parametric {
                    slope,
                    amplitude,
                    frequency,
                } = h
                {
                    MonotoneFunction::parametric(*slope, *amplitude, *frequency)?;
                }
                let advance = h.period_offset();
                let lower = TAU * *n as f64;
                let upper = TAU * (*n as f64 + 1.0);
                if advance < lower - PINCHING_TOLERANCE || advance > upper + PINCHING_TOLERANCE {
                    return Err(Error::InvalidFamily(format!(
                        "pinching fails: h(z+2pi) - h(z) = {advance} not in [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// The integer `n` of the structure.
    pub fn order(&self) -> u32 {
        match self {
            ContactFamily::Linear { n } | ContactFamily::Giroux { n, .. } => *n,
        }
    }

    pub fn gluing(&self) -> GluingMatrix {
        match self {
            ContactFamily::Linear { .. } => GluingMatrix::IDENTITY,
            ContactFamily::Giroux { gluing, .. } => *gluing,
        }
    }

    pub fn theta(&self, z: f64) -> f64 {
        match self {
            ContactFamily::Linear { n } => *n as f64 * z,
            ContactFamily::Giroux { h, .. } => h.value(z),
        }
    }

    pub fn theta_prime(&self, z: f64) -> f64 {
        match self {
            ContactFamily::Linear { n } => *n as f64,
            ContactFamily::Giroux { h, .. } => h.derivative(z),
        }
    }

    pub fn theta_inverse(&self, target: f64) -> Result<f64> {
        match self {
            ContactFamily::Linear { n } => Ok(target / *n as f64),
            ContactFamily::Giroux { h, .. } => h.inverse(target),
        }
    }

    /// `theta(z + 2pi) - theta(z)`: the flow time of `v` around one fiber.
    pub fn fiber_advance(&self) -> f64 {
        match self {
            ContactFamily::Linear { n } => TAU * *n as f64,
            ContactFamily::Giroux { h, .. } => h.period_offset(),
        }
    }

    /// True when `h(z + 2pi) - h(z) = 2pi (n + 1)`, the boundary case of the
    /// pinching inequality where a conjugate point lies in the same fiber.
    pub fn is_pinching_equality(&self) -> bool {
        (self.fiber_advance() - TAU * (self.order() as f64 + 1.0)).abs() <= PINCHING_TOLERANCE
    }

    /// Closed-form flow of `v` for `h(z) = n z`, used by `Linear` and by
    /// Giroux families with a purely linear `h` so the two agree bit for bit.
    pub(crate) fn linear_slope(&self) -> Option<f64> {
        match self {
            ContactFamily::Linear { n } => Some(*n as f64),
            ContactFamily::Giroux {
                h: MonotoneFunction::Parametric {
                    slope, amplitude, ..
                },
                ..
            } if *amplitude == 0.0 => Some(*slope as f64),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ContactFamily::Linear { n } => format!("linear:{n}"),
            ContactFamily::Giroux { h, n, gluing } => {
                let hs = match h {
                    MonotoneFunction::Parametric {
                        slope,
                        amplitude,
                        frequency,
                    } => format!("h(z)={slope}z+{amplitude}sin({frequency}z)"),
                    MonotoneFunction::Sampled(s) => {
                        format!("sampled h ({} knots, offset {})", s.knots.len(), s.offset)
                    }
                };
                if gluing.is_identity() {
                    format!("giroux:{hs},n={n}")
                } else {
                    format!("giroux:{hs},n={n},A={gluing}")
                }
            }
        }
    }

    // Fields on the universal cover; only the height matters.

    pub(crate) fn alpha_raw(&self, z: f64) -> Vec3 {
        let t = self.theta(z);
        [t.cos(), t.sin(), 0.0]
    }

    pub(crate) fn reeb_raw(&self, z: f64) -> Vec3 {
        self.alpha_raw(z)
    }

    pub(crate) fn beta_raw(&self, z: f64) -> Vec3 {
        let t = self.theta(z);
        [-t.sin(), t.cos(), 0.0]
    }

    pub(crate) fn v_raw(&self, z: f64) -> Result<Vec3> {
        let d = self.theta_prime(z);
        if !(d > MIN_DERIVATIVE) {
            return Err(Error::DegenerateDerivative { z, value: d });
        }
        Ok([0.0, 0.0, 1.0 / d])
    }

    /// `[xi, v] = sin(theta) dx - cos(theta) dy`.
    pub(crate) fn bracket_raw(&self, z: f64) -> Vec3 {
        let t = self.theta(z);
        [t.sin(), -t.cos(), 0.0]
    }
}

pub fn alpha_at(f: &ContactFamily, q: &TorusPoint) -> Vec3 {
    f.alpha_raw(q.z())
}

pub fn reeb_at(f: &ContactFamily, q: &TorusPoint) -> Vec3 {
    f.reeb_raw(q.z())
}

pub fn v_at(f: &ContactFamily, q: &TorusPoint) -> Result<Vec3> {
    f.v_raw(q.z())
}

pub fn beta_at(f: &ContactFamily, q: &TorusPoint) -> Vec3 {
    f.beta_raw(q.z())
}

/// Central-difference Lie bracket `[a, b] = (Db) a - (Da) b` of two vector
/// fields on the cover, with directional derivatives taken along the other
/// field. Truncation error is `O(step^2)`.
pub fn lie_bracket_fd<A, B>(a: A, b: B, q: &Vec3, step: f64) -> Vec3
where
    A: Fn(&Vec3) -> Vec3,
    B: Fn(&Vec3) -> Vec3,
{
    let aq = a(q);
    let bq = b(q);
    let db_along_a = sub(&b(&axpy(q, step, &aq)), &b(&axpy(q, -step, &aq)));
    let da_along_b = sub(&a(&axpy(q, step, &bq)), &a(&axpy(q, -step, &bq)));
    let scale = 0.5 / step;
    [
        (db_along_a[0] - da_along_b[0]) * scale,
        (db_along_a[1] - da_along_b[1]) * scale,
        (db_along_a[2] - da_along_b[2]) * scale,
    ]
}

/// Richardson extrapolation of [`lie_bracket_fd`] at `step` and `step / 2`,
/// cancelling the `O(step^2)` term. Used for the outer level of nested
/// brackets, where the inner field is already a difference quotient and a
/// small outer step would amplify its round-off.
pub fn lie_bracket_richardson<A, B>(a: A, b: B, q: &Vec3, step: f64) -> Vec3
where
    A: Fn(&Vec3) -> Vec3,
    B: Fn(&Vec3) -> Vec3,
{
    let coarse = lie_bracket_fd(&a, &b, q, step);
    let fine = lie_bracket_fd(&a, &b, q, 0.5 * step);
    [
        (4.0 * fine[0] - coarse[0]) / 3.0,
        (4.0 * fine[1] - coarse[1]) / 3.0,
        (4.0 * fine[2] - coarse[2]) / 3.0,
    ]
}

/// `d(gamma)(X, Y)` for a covector field, from central differences of its
/// components.
pub fn exterior_derivative_fd<G>(gamma: G, q: &Vec3, x: &Vec3, y: &Vec3, step: f64) -> f64
where
    G: Fn(&Vec3) -> Vec3,
{
    // jac[i][j] = d_i gamma_j
    let mut jac = [[0.0; 3]; 3];
    for (i, row) in jac.iter_mut().enumerate() {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let diff = sub(&gamma(&axpy(q, step, &e)), &gamma(&axpy(q, -step, &e)));
        for j in 0..3 {
            row[j] = diff[j] / (2.0 * step);
        }
    }
    let mut total = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            total += (jac[i][j] - jac[j][i]) * x[i] * y[j];
        }
    }
    total
}

/// The full adapted frame at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    pub point: TorusPoint,
    pub alpha: Vec3,
    pub beta: Vec3,
    pub xi: Vec3,
    pub v: Vec3,
    pub bracket_xi_v: Vec3,
    pub w: Vec3,
    /// From `[xi, [xi, v]] = -tau v`, evaluated by finite differences.
    pub tau: f64,
    /// `dalpha(v, [v, [xi, v]])`, evaluated by finite differences.
    pub mu_bar: f64,
}

struct FdQuantities {
    tau: f64,
    tau_residual: f64,
    mu_bar: f64,
    pairing: f64,
    reeb_kernel: f64,
    beta_consistency: f64,
}

fn fd_quantities(f: &ContactFamily, q: &Vec3) -> Result<FdQuantities> {
    let alpha = |p: &Vec3| f.alpha_raw(p[2]);
    let xi = |p: &Vec3| f.reeb_raw(p[2]);
    // the degenerate case is reported by the caller before we get here
    let v = |p: &Vec3| f.v_raw(p[2]).unwrap_or([0.0; 3]);
    let vq = f.v_raw(q[2])?;
    let b1 = lie_bracket_fd(xi, v, q, FD_STEP);
    // inner level of the nested brackets, extrapolated so that the outer
    // difference sees a smooth field
    let bracket = |p: &Vec3| lie_bracket_richardson(xi, v, p, NESTED_FD_STEP);

    let xi_xi_v = lie_bracket_richardson(xi, bracket, q, NESTED_FD_STEP);
    let tau = -dot(&xi_xi_v, &vq) / dot(&vq, &vq);
    let tau_residual = max_abs_diff(&xi_xi_v, &[-tau * vq[0], -tau * vq[1], -tau * vq[2]]);

    let v_v_xi_v = lie_bracket_richardson(v, bracket, q, NESTED_FD_STEP);
    let mu_bar = exterior_derivative_fd(alpha, q, &vq, &v_v_xi_v, FD_STEP);
    let pairing = exterior_derivative_fd(alpha, q, &vq, &b1, FD_STEP);

    let xq = xi(q);
    let mut reeb_kernel: f64 = 0.0;
    let mut beta_consistency: f64 = 0.0;
    let beta = f.beta_raw(q[2]);
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        reeb_kernel = reeb_kernel.max(exterior_derivative_fd(alpha, q, &xq, &e, FD_STEP).abs());
        let fd_beta = exterior_derivative_fd(alpha, q, &vq, &e, FD_STEP);
        beta_consistency = beta_consistency.max((fd_beta - beta[axis]).abs());
    }
    Ok(FdQuantities {
        tau,
        tau_residual,
        mu_bar,
        pairing,
        reeb_kernel,
        beta_consistency,
    })
}

/// Evaluates every frame field at `q`; `tau` and `mu_bar` come from nested
/// finite-difference brackets, the rest from closed forms.
pub fn frame_at(f: &ContactFamily, q: &TorusPoint) -> Result<FrameSample> {
    let z = q.z();
    let fd = fd_quantities(f, &q.coords())?;
    let xi = f.reeb_raw(z);
    let bracket = f.bracket_raw(z);
    let w = [
        fd.mu_bar * xi[0] - bracket[0],
        fd.mu_bar * xi[1] - bracket[1],
        fd.mu_bar * xi[2] - bracket[2],
    ];
    Ok(FrameSample {
        point: *q,
        alpha: f.alpha_raw(z),
        beta: f.beta_raw(z),
        xi,
        v: f.v_raw(z)?,
        bracket_xi_v: bracket,
        w,
        tau: fd.tau,
        mu_bar: fd.mu_bar,
    })
}

/// Maximum residuals of the structural identities over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub grid: usize,
    /// `|alpha(xi) - 1|` and `|beta(xi)|`.
    pub reeb_normalization: f64,
    /// `|dalpha(xi, .)|` (fd).
    pub reeb_in_kernel_of_dalpha: f64,
    /// `|alpha(v)|`.
    pub v_in_kernel: f64,
    /// Coefficient of `alpha ^ dalpha` minus that of `beta ^ dbeta`.
    pub volume_equality: f64,
    /// The common coefficient of the volume forms at the last grid point.
    pub volume_coefficient: f64,
    /// `|beta(w) - 1|`.
    pub dual_normalization: f64,
    /// `|beta - dalpha(v, .)|` with `dalpha` from finite differences.
    pub beta_consistency: f64,
    /// `|dalpha(v, [xi, v]) + 1|` (fd).
    pub pairing: f64,
    pub tau_max: f64,
    pub mu_bar_max: f64,
    pub pinching_equality: bool,
    pub closed_form_tolerance: f64,
    pub fd_tolerance: f64,
    pub passed: bool,
}

impl StructureReport {
    pub fn closed_form_residuals(&self) -> [(&'static str, f64); 4] {
        [
            ("reeb_normalization", self.reeb_normalization),
            ("v_in_kernel", self.v_in_kernel),
            ("volume_equality", self.volume_equality),
            ("dual_normalization", self.dual_normalization),
        ]
    }

    pub fn fd_residuals(&self) -> [(&'static str, f64); 5] {
        [
            ("reeb_in_kernel_of_dalpha", self.reeb_in_kernel_of_dalpha),
            ("beta_consistency", self.beta_consistency),
            ("pairing", self.pairing),
            ("tau_max", self.tau_max),
            ("mu_bar_max", self.mu_bar_max),
        ]
    }
}

/// Checks hypotheses (i) and (ii) of the variational setting together with
/// `tau = mu_bar = 0` on a `grid^3` lattice of the fundamental domain.
pub fn verify_structure(f: &ContactFamily, grid_per_axis: usize) -> Result<StructureReport> {
    f.validate()?;
    if grid_per_axis < 2 {
        return Err(Error::InsufficientResolution {
            min: 2,
            got: grid_per_axis,
        });
    }
    let mut r = StructureReport {
        grid: grid_per_axis,
        reeb_normalization: 0.0,
        reeb_in_kernel_of_dalpha: 0.0,
        v_in_kernel: 0.0,
        volume_equality: 0.0,
        volume_coefficient: 0.0,
        dual_normalization: 0.0,
        beta_consistency: 0.0,
        pairing: 0.0,
        tau_max: 0.0,
        mu_bar_max: 0.0,
        pinching_equality: f.is_pinching_equality(),
        closed_form_tolerance: CLOSED_FORM_TOLERANCE,
        fd_tolerance: FD_TOLERANCE,
        passed: false,
    };
    let step = TAU / grid_per_axis as f64;
    for k in 0..grid_per_axis {
        let z = k as f64 * step;
        let alpha = f.alpha_raw(z);
        let beta = f.beta_raw(z);
        let xi = f.reeb_raw(z);
        let v = f.v_raw(z)?;
        let bracket = f.bracket_raw(z);
        let d = f.theta_prime(z);
        let t = f.theta(z);
        let curl_alpha = [-d * t.cos(), -d * t.sin(), 0.0];
        let curl_beta = [d * t.sin(), -d * t.cos(), 0.0];
        let vol_alpha = dot(&alpha, &curl_alpha);
        let vol_beta = dot(&beta, &curl_beta);
        // mu_bar vanishes identically, so w = -[xi, v]
        let w = [-bracket[0], -bracket[1], -bracket[2]];

        let closed = [
            (dot(&alpha, &xi) - 1.0).abs().max(dot(&beta, &xi).abs()),
            dot(&alpha, &v).abs(),
            (vol_alpha - vol_beta).abs(),
            (dot(&beta, &w) - 1.0).abs(),
        ];
        r.reeb_normalization = r.reeb_normalization.max(closed[0]);
        r.v_in_kernel = r.v_in_kernel.max(closed[1]);
        r.volume_equality = r.volume_equality.max(closed[2]);
        r.dual_normalization = r.dual_normalization.max(closed[3]);
        r.volume_coefficient = vol_alpha;

        // the frame is independent of (x, y); sampling them still exercises
        // the evaluators on the whole lattice
        for i in 0..grid_per_axis {
            for j in 0..grid_per_axis {
                let q = [i as f64 * step, j as f64 * step, z];
                let fd = fd_quantities(f, &q)?;
                r.reeb_in_kernel_of_dalpha = r.reeb_in_kernel_of_dalpha.max(fd.reeb_kernel);
                r.beta_consistency = r.beta_consistency.max(fd.beta_consistency);
                r.pairing = r.pairing.max((fd.pairing + 1.0).abs());
                r.tau_max = r.tau_max.max(fd.tau.abs().max(fd.tau_residual));
                r.mu_bar_max = r.mu_bar_max.max(fd.mu_bar.abs());
            }
        }
    }
    r.passed = r
        .closed_form_residuals()
        .iter()
        .all(|(_, v)| *v < CLOSED_FORM_TOLERANCE)
        && r.fd_residuals().iter().all(|(_, v)| *v < FD_TOLERANCE);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub max_residual: f64,
    pub samples: usize,
}

/// Samples the pullback of `alpha` by the deck transformation
/// `(x, y, z) -> (A^-1 (x, y), z + 2pi)` that generates the gluing used by
/// [`crate::manifold::normalize`], and compares it with `alpha`.
pub fn check_invariance(f: &ContactFamily) -> InvarianceReport {
    const SAMPLES: usize = 256;
    let inv = f.gluing().inverse();
    let mut worst: f64 = 0.0;
    for k in 0..SAMPLES {
        let z = TAU * k as f64 / SAMPLES as f64;
        let moved = f.alpha_raw(z + TAU);
        let (px, py) = inv.apply_transpose(moved[0], moved[1]);
        let here = f.alpha_raw(z);
        worst = worst.max((px - here[0]).abs()).max((py - here[1]).abs());
    }
    InvarianceReport {
        invariant: worst < CLOSED_FORM_TOLERANCE,
        max_residual: worst,
        samples: SAMPLES,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn giroux(slope: u32, amp: f64, freq: u32, n: u32) -> ContactFamily {
        ContactFamily::giroux(
            MonotoneFunction::parametric(slope, amp, freq).unwrap(),
            n,
            GluingMatrix::IDENTITY,
        )
        .unwrap()
    }

    fn at(z: f64) -> TorusPoint {
        TorusPoint::new(0.3, 1.1, z).unwrap()
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        max_abs_diff(&a, &b) < tol
    }

    #[test]
    fn alpha_values() {
        let l1 = ContactFamily::linear(1).unwrap();
        assert_eq!(alpha_at(&l1, &at(0.0)), [1.0, 0.0, 0.0]);
        let l2 = ContactFamily::linear(2).unwrap();
        assert!(close(alpha_at(&l2, &at(FRAC_PI_4)), [0.0, 1.0, 0.0], 1e-15));
        let g = giroux(1, 0.0, 1, 1);
        assert!(close(alpha_at(&g, &at(PI)), [-1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn reeb_values() {
        let l1 = ContactFamily::linear(1).unwrap();
        assert_eq!(reeb_at(&l1, &at(0.0)), [1.0, 0.0, 0.0]);
        let l3 = ContactFamily::linear(3).unwrap();
        assert!(close(reeb_at(&l3, &at(FRAC_PI_3)), [-1.0, 0.0, 0.0], 1e-15));
        let g = giroux(2, 0.3, 1, 2);
        assert_eq!(reeb_at(&g, &at(0.0)), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn v_values() {
        let l2 = ContactFamily::linear(2).unwrap();
        assert_eq!(v_at(&l2, &at(1.7)).unwrap(), [0.0, 0.0, 0.5]);
        let g = giroux(2, 0.3, 1, 2);
        let v = v_at(&g, &at(0.0)).unwrap();
        assert!((v[2] - 1.0 / 2.3).abs() < 1e-15);
        let g1 = giroux(1, 0.0, 1, 1);
        assert_eq!(v_at(&g1, &at(2.0)).unwrap(), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn beta_values() {
        let l1 = ContactFamily::linear(1).unwrap();
        assert_eq!(beta_at(&l1, &at(0.0)), [-0.0, 1.0, 0.0]);
        assert!(close(beta_at(&l1, &at(FRAC_PI_2)), [-1.0, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn beta_matches_fd_dalpha_at_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for f in [
            ContactFamily::linear(1).unwrap(),
            ContactFamily::linear(5).unwrap(),
            giroux(2, 0.3, 1, 2),
        ] {
            let alpha = |p: &Vec3| f.alpha_raw(p[2]);
            for _ in 0..100 {
                let q = at(rng.gen_range(0.0..TAU));
                let v = v_at(&f, &q).unwrap();
                let beta = beta_at(&f, &q);
                for axis in 0..3 {
                    let mut e = [0.0; 3];
                    e[axis] = 1.0;
                    let fd = exterior_derivative_fd(alpha, &q.coords(), &v, &e, FD_STEP);
                    assert!((fd - beta[axis]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn bracket_oracle_examples() {
        let f = ContactFamily::linear(1).unwrap();
        let xi = |p: &Vec3| f.reeb_raw(p[2]);
        let v = |p: &Vec3| f.v_raw(p[2]).unwrap();
        let q = [0.0, 0.0, 0.0];
        assert!(close(lie_bracket_fd(xi, v, &q, FD_STEP), [0.0, -1.0, 0.0], 1e-6));
        assert_eq!(lie_bracket_fd(v, v, &q, FD_STEP), [0.0, 0.0, 0.0]);
        let inner = |p: &Vec3| lie_bracket_fd(xi, v, p, FD_STEP);
        let nested = lie_bracket_fd(xi, inner, &q, NESTED_FD_STEP);
        assert!(close(nested, [0.0; 3], 1e-6));
    }

    #[test]
    fn bracket_matches_closed_form() {
        let f = giroux(3, 0.7, 2, 3);
        let xi = |p: &Vec3| f.reeb_raw(p[2]);
        let v = |p: &Vec3| f.v_raw(p[2]).unwrap();
        for k in 0..32 {
            let q = [0.0, 0.0, TAU * k as f64 / 32.0];
            let fd = lie_bracket_fd(xi, v, &q, FD_STEP);
            assert!(close(fd, f.bracket_raw(q[2]), 1e-8), "{fd:?}");
        }
    }

    #[test]
    fn structure_linear_families() {
        for n in 1..=6 {
            let r = verify_structure(&ContactFamily::linear(n).unwrap(), 8).unwrap();
            assert!(r.passed, "n = {n}: {r:?}");
            assert!(r.tau_max < 1e-6);
            assert!(r.volume_equality < 1e-9);
            assert!((r.volume_coefficient + n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_giroux_family() {
        let r = verify_structure(&giroux(2, 0.3, 1, 2), 8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.mu_bar_max < 1e-6);
        assert!(!r.pinching_equality);
    }

    #[test]
    fn structure_needs_grid() {
        let f = ContactFamily::linear(1).unwrap();
        assert!(verify_structure(&f, 1).is_err());
    }

    #[test]
    fn frame_sample_identities() {
        let f = giroux(2, 0.3, 1, 2);
        let s = frame_at(&f, &at(1.3)).unwrap();
        assert!((dot(&s.alpha, &s.xi) - 1.0).abs() < 1e-12);
        assert!(dot(&s.beta, &s.xi).abs() < 1e-12);
        assert_eq!(dot(&s.alpha, &s.v), 0.0);
        assert!((dot(&s.beta, &s.w) - 1.0).abs() < 1e-6);
        assert!(s.tau.abs() < 1e-6 && s.mu_bar.abs() < 1e-6);
    }

    #[test]
    fn parametric_monotonicity_is_enforced() {
        assert!(MonotoneFunction::parametric(1, 1.0, 1).is_err());
        assert!(MonotoneFunction::parametric(2, 0.5, 3).is_ok());
        assert!(MonotoneFunction::parametric(2, -0.1, 1).is_err());
        assert!(ContactFamily::linear(0).is_err());
    }

    #[test]
    fn pinching_range() {
        let h = MonotoneFunction::parametric(3, 0.1, 1).unwrap();
        assert!(ContactFamily::giroux(h.clone(), 3, GluingMatrix::IDENTITY).is_ok());
        let eq = ContactFamily::giroux(h.clone(), 2, GluingMatrix::IDENTITY).unwrap();
        assert!(eq.is_pinching_equality());
        assert!(ContactFamily::giroux(h, 1, GluingMatrix::IDENTITY).is_err());
    }

    #[test]
    fn parametric_inverse_round_trips() {
        let h = MonotoneFunction::parametric(2, 0.3, 1).unwrap();
        for k in -20..20 {
            let target = 0.37 * k as f64;
            let z = h.inverse(target).unwrap();
            assert!((h.value(z) - target).abs() < 1e-13);
        }
    }

    fn sampled_linear(offset_scale: f64) -> SampledMonotone {
        let pairs: Vec<(f64, f64)> = (0..=64)
            .map(|i| {
                let z = TAU * i as f64 / 64.0;
                (z, offset_scale * z)
            })
            .collect();
        SampledMonotone::new(&pairs, offset_scale * TAU).unwrap()
    }

    #[test]
    fn sampled_reproduces_linear_data() {
        let s = sampled_linear(2.0);
        for i in 0..200 {
            let z = -10.0 + 0.1 * i as f64;
            assert!((s.value(z) - 2.0 * z).abs() < 1e-12);
            assert!((s.derivative(z) - 2.0).abs() < 1e-12);
            let back = s.inverse(2.0 * z).unwrap();
            assert!((back - z).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_tracks_smooth_function() {
        let h = |z: f64| 2.0 * z + 0.3 * z.sin();
        let pairs: Vec<(f64, f64)> = (0..=256)
            .map(|i| {
                let z = TAU * i as f64 / 256.0;
                (z, h(z))
            })
            .collect();
        let s = SampledMonotone::new(&pairs, 2.0 * TAU).unwrap();
        for i in 0..1000 {
            let z = 0.00731 * i as f64;
            assert!((s.value(z) - h(z)).abs() < 1e-5);
        }
    }

    #[test]
    fn sampled_rejects_bad_tables() {
        assert!(SampledMonotone::new(&[(0.0, 0.0)], 1.0).is_err());
        assert!(SampledMonotone::new(&[(0.0, 0.0), (3.0, 1.0)], 1.0).is_err());
        assert!(SampledMonotone::new(&[(0.0, 1.0), (TAU, 0.5)], -0.5).is_err());
        assert!(SampledMonotone::new(&[(0.0, 0.0), (TAU, TAU)], TAU + 0.5).is_err());
    }

    #[test]
    fn degenerate_derivative_is_an_error() {
        // a steep jump forces the interpolant to flatten elsewhere
        let pairs = [(0.0, 0.0), (1.0, 1e-14), (2.0, 2e-14), (TAU, TAU)];
        match SampledMonotone::new(&pairs, TAU) {
            Err(Error::InvalidFamily(_)) => {}
            Ok(s) => {
                let f = ContactFamily::giroux(
                    MonotoneFunction::Sampled(s),
                    1,
                    GluingMatrix::IDENTITY,
                )
                .unwrap();
                assert!(matches!(
                    v_at(&f, &at(1.5)),
                    Err(Error::DegenerateDerivative { .. })
                ));
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn invariance_of_identity_bundles() {
        let r = check_invariance(&giroux(3, 0.0, 1, 3));
        assert!(r.invariant && r.max_residual < 1e-12, "{r:?}");
        let g = check_invariance(&giroux(2, 0.3, 1, 2));
        assert!(g.invariant, "{g:?}");
        // a table whose period offset is 2pi + 0.5 cannot descend to T^3
        let off = ContactFamily::giroux(
            MonotoneFunction::Sampled(sampled_linear((TAU + 0.5) / TAU)),
            1,
            GluingMatrix::IDENTITY,
        )
        .unwrap();
        let r = check_invariance(&off);
        assert!(!r.invariant && r.max_residual > 0.1);
    }

    #[test]
    fn quarter_turn_bundle_needs_quarter_offset() {
        // A = rotation by -pi/2: alpha descends iff h advances by 2pi n + pi/2
        let rot = GluingMatrix::new(0, 1, -1, 0).unwrap();
        let table = sampled_linear((TAU + FRAC_PI_2) / TAU);
        let f = ContactFamily::giroux(MonotoneFunction::Sampled(table.clone()), 1, rot).unwrap();
        assert!(check_invariance(&f).invariant);
        let wrong = ContactFamily::giroux(
            MonotoneFunction::Sampled(table),
            1,
            rot.inverse(),
        )
        .unwrap();
        assert!(!check_invariance(&wrong).invariant);
    }

    #[test]
    fn giroux_without_amplitude_matches_linear_exactly() {
        for n in 1..=5 {
            let lin = ContactFamily::linear(n).unwrap();
            let gir = giroux(n, 0.0, 3, n);
            for i in 0..50 {
                let q = at(0.1257 * i as f64);
                assert_eq!(alpha_at(&lin, &q), alpha_at(&gir, &q));
                assert_eq!(reeb_at(&lin, &q), reeb_at(&gir, &q));
                assert_eq!(beta_at(&lin, &q), beta_at(&gir, &q));
                assert_eq!(v_at(&lin, &q).unwrap(), v_at(&gir, &q).unwrap());
            }
        }
    }
}
