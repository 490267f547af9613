//! Periodic Reeb orbits per homotopy class, their actions, the second
//! variation and the min/max generators of each critical circle.
//!
//! The Reeb field is horizontal and constant on each torus fiber, so the
//! closed orbits in class `g = (m, l)` are the straight geodesics of
//! direction `(m, l)` sitting at the heights where `theta(z) = atan2(l, m)`
//! modulo `2pi`. Each height carries a whole circle of them.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::contact::{frame_at, ContactFamily};
use crate::error::{Error, Result};
use crate::manifold::{circle_distance, HomotopyClass2, TorusPoint};

/// Closed orbits whose height residual exceeds this are rejected.
pub const ROOT_TOLERANCE: f64 = 1e-10;
/// Simpson panels used by [`action_of`].
pub const ACTION_PANELS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitCircle {
    pub family: ContactFamily,
    pub class: HomotopyClass2,
    /// `atan2(l, m)` in `[0, 2pi)`.
    pub direction: f64,
    pub z_root: f64,
    pub action: f64,
    /// Position among the circles of the class, ordered by height.
    pub index: usize,
}

impl OrbitCircle {
    /// Start of the representative geodesic, at `x = y = 0`.
    pub fn base_point(&self) -> [f64; 3] {
        [0.0, 0.0, self.z_root]
    }

    /// The geodesic at time `t` in `[0, 1]`, lifted to the cover.
    pub fn point_at(&self, t: f64) -> [f64; 3] {
        [
            TAU * self.class.m as f64 * t,
            TAU * self.class.l as f64 * t,
            self.z_root,
        ]
    }

    /// Closed polyline through `segments + 1` points of the geodesic.
    pub fn polyline(&self, segments: usize) -> Vec<[f64; 3]> {
        let segments = segments.max(1);
        (0..=segments)
            .map(|i| self.point_at(i as f64 / segments as f64))
            .collect()
    }

    /// `|theta(z_root) - direction|` on the circle.
    pub fn root_residual(&self) -> f64 {
        circle_distance(self.family.theta(self.z_root), self.direction)
    }
}

/// All heights `z` in `[0, 2pi)` with `theta(z) = theta_g (mod 2pi)`, ascending.
fn roots(f: &ContactFamily, theta_g: f64) -> Result<Vec<f64>> {
    if let ContactFamily::Linear { n } = f {
        let count = *n as usize;
        let n = *n as f64;
        return Ok((0..count)
            .map(|j| (theta_g + TAU * j as f64) / n)
            .collect());
    }
    let start = f.theta(0.0);
    let end = start + f.fiber_advance();
    let mut k = ((start - theta_g) / TAU).ceil() as i64;
    let mut out = Vec::new();
    loop {
        let target = theta_g + TAU * k as f64;
        if target >= end {
            break;
        }
        if target >= start {
            let z = f.theta_inverse(target)?;
            if (0.0..TAU).contains(&z) {
                out.push(z);
            }
        }
        k += 1;
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Every critical circle of the action in class `g`.
pub fn enumerate_orbits(f: &ContactFamily, g: HomotopyClass2) -> Result<Vec<OrbitCircle>> {
    let direction = g.direction()?;
    let action = TAU * g.length();
    let heights = roots(f, direction)?;
    let mut out = Vec::with_capacity(heights.len());
    for (index, z_root) in heights.into_iter().enumerate() {
        let circle = OrbitCircle {
            family: f.clone(),
            class: g,
            direction,
            z_root,
            action,
            index,
        };
        let residual = circle.root_residual();
        if residual > ROOT_TOLERANCE {
            return Err(Error::InvalidFamily(format!(
                "orbit root at z = {z_root} misses the direction by {residual:.3e}"
            )));
        }
        out.push(circle);
    }
    Ok(out)
}

/// `J(x) = \int_0^1 alpha(x'(t)) dt` along the representative geodesic,
/// by composite Simpson quadrature.
pub fn action_of(c: &OrbitCircle) -> f64 {
    let velocity = [TAU * c.class.m as f64, TAU * c.class.l as f64, 0.0];
    let integrand = |t: f64| {
        let q = c.point_at(t);
        let a = c.family.alpha_raw(q[2]);
        a[0] * velocity[0] + a[1] * velocity[1] + a[2] * velocity[2]
    };
    let panels = 2 * ACTION_PANELS;
    let h = 1.0 / panels as f64;
    let mut sum = integrand(0.0) + integrand(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(i as f64 * h);
    }
    sum * h / 3.0
}

/// A normal variation `eta`, sampled at `t = i / N` for `i = 0..N`;
/// periodicity `eta(1) = eta(0)` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaVariation {
    values: Vec<f64>,
}

impl EtaVariation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite sample {v}")));
        }
        Ok(EtaVariation { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(samples: usize, eta: F) -> Result<Self> {
        Self::new((0..samples).map(|i| eta(i as f64 / samples as f64)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    pub fn is_mean_zero(&self, tol: f64) -> bool {
        self.mean().abs() <= tol
    }

    pub fn mean_adjusted(&self) -> Self {
        let m = self.mean();
        EtaVariation {
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }
}

/// `\int_0^1 (eta'^2 - a^2 tau eta^2)` on the periodic grid, with forward
/// differences for `eta'`. Both families have `tau = 0`.
pub fn second_variation(c: &OrbitCircle, eta: &EtaVariation) -> Result<f64> {
    let n = eta.len();
    if n < 4 {
        return Err(Error::InsufficientResolution { min: 4, got: n });
    }
    let tau = frame_at(&c.family, &TorusPoint::new(0.0, 0.0, c.z_root)?)?.tau;
    let v = eta.values();
    let nf = n as f64;
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for i in 0..n {
        let d = v[(i + 1) % n] - v[i];
        kinetic += d * d;
        potential += v[i] * v[i];
    }
    Ok(nf * kinetic - c.action * c.action * tau * potential / nf)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Min,
    Max,
}

impl Role {
    pub fn morse_index(self) -> usize {
        match self {
            Role::Min => 0,
            Role::Max => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GeneratorId {
    pub class: HomotopyClass2,
    pub circle: usize,
    pub role: Role,
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let role = match self.role {
            Role::Min => "min",
            Role::Max => "max",
        };
        write!(f, "({},{})#{}:{}", self.class.m, self.class.l, self.circle, role)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GeneratorId,
    pub index: usize,
    pub z_root: f64,
    pub action: f64,
}

/// The minimum and maximum left on a critical circle after a small
/// symmetry-breaking perturbation.
pub fn break_symmetry(c: &OrbitCircle) -> (Generator, Generator) {
    let make = |role: Role| Generator {
        id: GeneratorId {
            class: c.class,
            circle: c.index,
            role,
        },
        index: role.morse_index(),
        z_root: c.z_root,
        action: c.action,
    };
    (make(Role::Min), make(Role::Max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{reeb_at, MonotoneFunction};
    use crate::manifold::{class_of_polyline, wrap_angle, GluingMatrix};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn giroux(slope: u32, amp: f64, n: u32) -> ContactFamily {
        ContactFamily::giroux(
            MonotoneFunction::parametric(slope, amp, 1).unwrap(),
            n,
            GluingMatrix::IDENTITY,
        )
        .unwrap()
    }

    #[test]
    fn linear_two_class_x() {
        let f = ContactFamily::linear(2).unwrap();
        let circles = enumerate_orbits(&f, HomotopyClass2::new(1, 0)).unwrap();
        let z: Vec<f64> = circles.iter().map(|c| c.z_root).collect();
        assert_eq!(z, vec![0.0, PI]);
        assert!(circles.iter().all(|c| c.action == TAU));
    }

    #[test]
    fn linear_one_class_y() {
        let f = ContactFamily::linear(1).unwrap();
        let circles = enumerate_orbits(&f, HomotopyClass2::new(0, 1)).unwrap();
        assert_eq!(circles.len(), 1);
        assert!((circles[0].z_root - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn giroux_diagonal_roots() {
        let f = giroux(2, 0.3, 2);
        let circles = enumerate_orbits(&f, HomotopyClass2::new(1, 1)).unwrap();
        assert_eq!(circles.len(), 2);
        for c in &circles {
            assert!(c.root_residual() < 1e-10);
            assert!((wrap_angle(f.theta(c.z_root)) - PI / 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_class_is_rejected() {
        let f = ContactFamily::linear(1).unwrap();
        assert_eq!(
            enumerate_orbits(&f, HomotopyClass2::new(0, 0)),
            Err(Error::UndefinedDirection)
        );
    }

    #[test]
    fn circle_count_is_n() {
        let classes = [(1, 0), (0, 1), (1, 1), (2, 3), (2, 0), (-3, 4), (0, -5)];
        for n in 1..=16 {
            let f = ContactFamily::linear(n).unwrap();
            for (m, l) in classes {
                let g = HomotopyClass2::new(m, l);
                let circles = enumerate_orbits(&f, g).unwrap();
                assert_eq!(circles.len(), n as usize);
                for w in circles.windows(2) {
                    assert!(circle_distance(w[0].z_root, w[1].z_root) > 1e-6);
                }
                for c in &circles {
                    let xi = reeb_at(&f, &TorusPoint::new(0.0, 0.0, c.z_root).unwrap());
                    let len = g.length();
                    let cross = xi[0] * l as f64 - xi[1] * m as f64;
                    let along = xi[0] * m as f64 + xi[1] * l as f64;
                    assert!(cross.abs() < 1e-9 * len && (along - len).abs() < 1e-9 * len);
                }
            }
        }
    }

    #[test]
    fn equality_case_has_one_more_circle() {
        let f = giroux(3, 0.2, 2);
        let circles = enumerate_orbits(&f, HomotopyClass2::new(1, 0)).unwrap();
        assert_eq!(circles.len(), 3);
    }

    #[test]
    fn action_quadrature() {
        let cases = [(1, (1, 0), TAU), (1, (3, 4), 10.0 * PI), (2, (1, 1), TAU * 2f64.sqrt())];
        for (n, (m, l), expected) in cases {
            let f = ContactFamily::linear(n).unwrap();
            for c in enumerate_orbits(&f, HomotopyClass2::new(m, l)).unwrap() {
                assert!((action_of(&c) - expected).abs() < 1e-9);
                assert!((c.action - expected).abs() < 1e-9);
            }
        }
        let c = &enumerate_orbits(&giroux(2, 0.3, 2), HomotopyClass2::new(3, 4)).unwrap()[1];
        assert!((action_of(c) - 10.0 * PI).abs() < 1e-9);
    }

    fn circle() -> OrbitCircle {
        enumerate_orbits(&ContactFamily::linear(1).unwrap(), HomotopyClass2::new(1, 0))
            .unwrap()
            .remove(0)
    }

    #[test]
    fn second_variation_examples() {
        let c = circle();
        let one = EtaVariation::from_fn(64, |_| 1.0).unwrap();
        assert_eq!(second_variation(&c, &one).unwrap(), 0.0);
        let sine = EtaVariation::from_fn(2048, |t| (TAU * t).sin()).unwrap();
        assert!((second_variation(&c, &sine).unwrap() - 2.0 * PI * PI).abs() < 1e-4);
        let bump = EtaVariation::from_fn(2048, |t| t * (1.0 - t)).unwrap().mean_adjusted();
        assert!(bump.is_mean_zero(1e-12));
        assert!((second_variation(&c, &bump).unwrap() - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn second_variation_needs_four_samples() {
        let eta = EtaVariation::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(
            second_variation(&circle(), &eta),
            Err(Error::InsufficientResolution { min: 4, got: 3 })
        );
    }

    #[test]
    fn generators_per_circle() {
        let c = circle();
        let (lo, hi) = break_symmetry(&c);
        assert_eq!((lo.index, hi.index), (0, 1));
        assert_eq!((lo.id.circle, lo.id.role), (0, Role::Min));
        assert_eq!((hi.id.circle, hi.id.role), (0, Role::Max));
        assert_eq!(break_symmetry(&c), (lo, hi));

        let f = ContactFamily::linear(3).unwrap();
        let gens: Vec<Generator> = enumerate_orbits(&f, HomotopyClass2::new(0, 1))
            .unwrap()
            .iter()
            .flat_map(|c| {
                let (a, b) = break_symmetry(c);
                [a, b]
            })
            .collect();
        assert_eq!(gens.len(), 6);
        assert_eq!(gens.iter().filter(|g| g.index == 0).count(), 3);
    }

    #[test]
    fn orbits_have_no_fiber_winding() {
        let f = ContactFamily::linear(2).unwrap();
        for c in enumerate_orbits(&f, HomotopyClass2::new(2, -3)).unwrap() {
            let class = class_of_polyline(&c.polyline(16), &GluingMatrix::IDENTITY).unwrap();
            assert_eq!((class.m, class.l, class.p), (2, -3, 0));
        }
    }

    #[test]
    fn generator_id_display() {
        let (lo, _) = break_symmetry(&circle());
        assert_eq!(lo.id.to_string(), "(1,0)#0:min");
    }

    proptest! {
        #[test]
        fn second_variation_is_psd(values in proptest::collection::vec(-5.0..5.0f64, 4..64)) {
            let eta = EtaVariation::new(values).unwrap();
            prop_assert!(second_variation(&circle(), &eta).unwrap() >= 0.0);
        }

        #[test]
        fn second_variation_vanishes_on_constants(c in -10.0..10.0f64, n in 4usize..100) {
            let eta = EtaVariation::from_fn(n, |_| c).unwrap();
            prop_assert!(second_variation(&circle(), &eta).unwrap().abs() < 1e-6);
        }
    }
}
