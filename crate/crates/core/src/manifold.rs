//! Points, gluing and winding bookkeeping on `T^3` and on the torus bundles
//! `Y_A`, where the fiber over `z + 2pi` is glued to the fiber over `z`
//! by `(x, y, z + 2pi) ~ (A(x, y), z)`.
//!
//! Raw coordinates live in the universal cover `R^3`. A [`TorusPoint`] is the
//! canonical representative with every coordinate in `[0, 2pi)`.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing two normalized points.
pub const POINT_TOLERANCE: f64 = 1e-9;

/// Largest number of fiber crossings [`normalize`] will unwind.
const MAX_FIBER_CROSSINGS: f64 = (1u64 << 20) as f64;

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles measured on the circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// A point of `T^3` (or of a fundamental domain of `Y_A`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    x: f64,
    y: f64,
    z: f64,
}

impl TorusPoint {
    /// Normalizes with the identity gluing.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        normalize([x, y, z], &GluingMatrix::IDENTITY)
    }

    pub fn origin() -> Self {
        TorusPoint {
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Largest per-axis circle distance.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        circle_distance(self.x, other.x)
            .max(circle_distance(self.y, other.y))
            .max(circle_distance(self.z, other.z))
    }

    pub fn approx_eq(&self, other: &TorusPoint) -> bool {
        self.distance(other) < POINT_TOLERANCE
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.z)
    }
}

/// Integer 2x2 matrix of determinant one, acting on the `(x, y)` fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GluingMatrix {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl GluingMatrix {
    pub const IDENTITY: GluingMatrix = GluingMatrix {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };

    /// Row-major entries `[[a, b], [c, d]]`.
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a
            .checked_mul(d)
            .zip(b.checked_mul(c))
            .and_then(|(ad, bc)| ad.checked_sub(bc));
        match det {
            Some(1) => Ok(GluingMatrix { a, b, c, d }),
            Some(det) => Err(Error::InvalidGluing(format!(
                "[[{a}, {b}], [{c}, {d}]] has determinant {det}"
            ))),
            None => Err(Error::InvalidGluing("determinant overflows".into())),
        }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn inverse(&self) -> Self {
        GluingMatrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a as f64 * x + self.b as f64 * y,
            self.c as f64 * x + self.d as f64 * y,
        )
    }

    /// Applies the transpose, which is how the deck transformation acts on
    /// the covector `(alpha_x, alpha_y)`.
    pub fn apply_transpose(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a as f64 * x + self.c as f64 * y,
            self.b as f64 * x + self.d as f64 * y,
        )
    }
}

impl Default for GluingMatrix {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl fmt::Display for GluingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// A class `m x + l y` in the fundamental group of the fiber torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HomotopyClass2 {
    pub m: i64,
    pub l: i64,
}

impl HomotopyClass2 {
    pub fn new(m: i64, l: i64) -> Self {
        HomotopyClass2 { m, l }
    }

    pub fn is_zero(&self) -> bool {
        self.m == 0 && self.l == 0
    }

    /// Euclidean length `sqrt(m^2 + l^2)` of the class.
    pub fn length(&self) -> f64 {
        (self.m as f64).hypot(self.l as f64)
    }

    /// Direction angle `atan2(l, m)` on the branch `[0, 2pi)`.
    pub fn direction(&self) -> Result<f64> {
        if self.is_zero() {
            return Err(Error::UndefinedDirection);
        }
        Ok(wrap_angle((self.l as f64).atan2(self.m as f64)))
    }

    pub fn with_fiber(&self, p: i64) -> HomotopyClass3 {
        HomotopyClass3::new(self.m, self.l, p)
    }
}

impl fmt::Display for HomotopyClass2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.l)
    }
}

/// A class of `pi_1(T^3) = Z^3`; `p` counts windings around the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HomotopyClass3 {
    pub m: i64,
    pub l: i64,
    pub p: i64,
}

impl HomotopyClass3 {
    pub fn new(m: i64, l: i64, p: i64) -> Self {
        HomotopyClass3 { m, l, p }
    }

    pub fn planar(&self) -> HomotopyClass2 {
        HomotopyClass2::new(self.m, self.l)
    }
}

impl Add for HomotopyClass3 {
    type Output = HomotopyClass3;

    fn add(self, rhs: Self) -> Self {
        HomotopyClass3::new(self.m + rhs.m, self.l + rhs.l, self.p + rhs.p)
    }
}

impl fmt::Display for HomotopyClass3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.m, self.l, self.p)
    }
}

/// Brings a raw coordinate triple into the fundamental domain.
///
/// Every upward crossing of `z = 2pi` applies the gluing to `(x, y)` and every
/// downward crossing applies its inverse. Since `A` is integral, reducing
/// `(x, y)` modulo `2pi` between crossings does not change the result.
pub fn normalize(point: [f64; 3], gluing: &GluingMatrix) -> Result<TorusPoint> {
    if point.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidCoordinate(format!("{point:?}")));
    }
    let [mut x, mut y, z] = point;
    let mut crossings = (z / TAU).floor();
    if crossings.abs() > MAX_FIBER_CROSSINGS {
        return Err(Error::InvalidCoordinate(format!(
            "z = {z} crosses the fiber too many times"
        )));
    }
    // keep the crossing count consistent with the reduced height when the
    // division rounds across a multiple of 2pi
    let mut zr = z - crossings * TAU;
    if zr < 0.0 {
        crossings -= 1.0;
        zr += TAU;
    }
    if zr >= TAU {
        crossings += 1.0;
        zr = (zr - TAU).max(0.0);
    }
    if !gluing.is_identity() && crossings != 0.0 {
        let step = if crossings > 0.0 {
            *gluing
        } else {
            gluing.inverse()
        };
        for _ in 0..crossings.abs() as u64 {
            let (nx, ny) = step.apply(wrap_angle(x), wrap_angle(y));
            x = nx;
            y = ny;
        }
    }
    Ok(TorusPoint {
        x: wrap_angle(x),
        y: wrap_angle(y),
        z: zr,
    })
}

/// Projection of a class of `pi_1(T^3)` onto its fiber component.
pub fn p3_projection(class: &HomotopyClass3) -> i64 {
    class.p
}

fn check_closed(vertices: &[[f64; 3]], gluing: &GluingMatrix) -> Result<()> {
    let (first, last) = match (vertices.first(), vertices.last()) {
        (Some(f), Some(l)) if vertices.len() >= 2 => (*f, *l),
        _ => return Err(Error::NotALoop(f64::INFINITY)),
    };
    let gap = normalize(first, gluing)?.distance(&normalize(last, gluing)?);
    if gap >= POINT_TOLERANCE {
        return Err(Error::NotALoop(gap));
    }
    Ok(())
}

fn lift_count(displacement: f64) -> i64 {
    (displacement / TAU).round() as i64
}

/// Net signed number of `2pi` lifts in `z` along a closed polyline.
///
/// Vertices are raw coordinates in the universal cover; consecutive vertices
/// are joined by straight segments, so the winding is the accumulated
/// displacement. This is well defined for any gluing.
pub fn fiber_winding(vertices: &[[f64; 3]], gluing: &GluingMatrix) -> Result<i64> {
    check_closed(vertices, gluing)?;
    let dz: f64 = vertices.windows(2).map(|w| w[1][2] - w[0][2]).sum();
    Ok(lift_count(dz))
}

/// Integer winding of a closed polyline in `pi_1(T^3) = Z^3`.
pub fn class_of_polyline(vertices: &[[f64; 3]], gluing: &GluingMatrix) -> Result<HomotopyClass3> {
    check_closed(vertices, gluing)?;
    if !gluing.is_identity() {
        return Err(Error::UnsupportedGluing(gluing.to_string()));
    }
    let mut total = [0.0f64; 3];
    for w in vertices.windows(2) {
        for (axis, t) in total.iter_mut().enumerate() {
            *t += w[1][axis] - w[0][axis];
        }
    }
    Ok(HomotopyClass3::new(
        lift_count(total[0]),
        lift_count(total[1]),
        lift_count(total[2]),
    ))
}
