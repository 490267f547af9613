//! Configurations at infinity: a base orbit broken by alternating
//! `xi`-pieces and `v`-jumps, the functional `J_inf = sum a_k`, their
//! classification and the `P3` obstruction to interacting with periodic
//! orbits.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::contact::{ContactFamily, CLOSED_FORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::flows::{conjugacy_residual, phi_lift, psi_lift};
use crate::manifold::{circle_distance, class_of_polyline, HomotopyClass2, HomotopyClass3};
use crate::orbits::{Generator, GeneratorId, OrbitCircle, Role};

/// A closed `v`-orbit attached at parameter `t` of the base orbit and run
/// `k` times (signed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VCycle {
    pub t: f64,
    pub k: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "piece", rename_all = "snake_case")]
pub enum Piece {
    /// Reeb segment of action `a >= 0`.
    Xi { a: f64 },
    /// Segment of the `v` flow with signed parameter `s`.
    V { s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityConfig {
    base: OrbitCircle,
    v_cycles: Vec<VCycle>,
    pieces: Vec<Piece>,
}

impl InfinityConfig {
    pub fn new(base: OrbitCircle, v_cycles: Vec<VCycle>, pieces: Vec<Piece>) -> Result<Self> {
        for c in &v_cycles {
            if c.k == 0 {
                return Err(Error::InvalidConfig("v-cycle with zero iteration count".into()));
            }
            if !(0.0..1.0).contains(&c.t) {
                return Err(Error::InvalidConfig(format!(
                    "attachment parameter {} outside [0, 1)",
                    c.t
                )));
            }
        }
        for (i, p) in pieces.iter().enumerate() {
            match p {
                Piece::Xi { a } if !(a.is_finite() && *a >= 0.0) => {
                    return Err(Error::InvalidConfig(format!("piece {i}: xi action {a}")));
                }
                Piece::V { s } if !s.is_finite() => {
                    return Err(Error::InvalidConfig(format!("piece {i}: v length {s}")));
                }
                _ => {}
            }
        }
        for (i, w) in pieces.windows(2).enumerate() {
            let same = matches!(
                (w[0], w[1]),
                (Piece::Xi { .. }, Piece::Xi { .. }) | (Piece::V { .. }, Piece::V { .. })
            );
            if same {
                return Err(Error::InvalidConfig(format!(
                    "pieces {i} and {} do not alternate",
                    i + 1
                )));
            }
        }
        Ok(InfinityConfig {
            base,
            v_cycles,
            pieces,
        })
    }

    /// Cuts the base orbit at each attachment parameter and inserts the full
    /// `v`-cycle there, `k` turns of the fiber.
    pub fn from_cycles(base: OrbitCircle, mut v_cycles: Vec<VCycle>) -> Result<Self> {
        v_cycles.sort_by(|a, b| a.t.total_cmp(&b.t));
        let turn = base.family.fiber_advance();
        let mut pieces = Vec::with_capacity(2 * v_cycles.len() + 1);
        let mut last = 0.0;
        for c in &v_cycles {
            pieces.push(Piece::Xi {
                a: base.action * (c.t - last).max(0.0),
            });
            pieces.push(Piece::V {
                s: c.k as f64 * turn,
            });
            last = c.t;
        }
        pieces.push(Piece::Xi {
            a: base.action * (1.0 - last).max(0.0),
        });
        Self::new(base, v_cycles, pieces)
    }

    pub fn base(&self) -> &OrbitCircle {
        &self.base
    }

    pub fn v_cycles(&self) -> &[VCycle] {
        &self.v_cycles
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn class(&self) -> HomotopyClass2 {
        self.base.class
    }

    fn family(&self) -> &ContactFamily {
        &self.base.family
    }

    /// Vertices visited by the pieces, in the universal cover, starting at
    /// the base point. `xi`-pieces are straight at constant height.
    pub fn realize(&self) -> Result<Vec<[f64; 3]>> {
        let f = self.family();
        let mut p = self.base.base_point();
        let mut out = vec![p];
        for piece in &self.pieces {
            p = match *piece {
                Piece::Xi { a } => psi_lift(f, &p, a),
                Piece::V { s } => phi_lift(f, &p, s)?,
            };
            out.push(p);
        }
        Ok(out)
    }

    /// Homotopy class of the realized loop; needs the loop to close.
    pub fn realized_class(&self) -> Result<HomotopyClass3> {
        class_of_polyline(&self.realize()?, &self.family().gluing())
    }
}

/// `J_inf = sum a_k` over the `xi`-pieces; `alpha(v) = 0` so the jumps add
/// nothing.
pub fn j_infinity(c: &InfinityConfig) -> f64 {
    c.pieces
        .iter()
        .map(|p| match p {
            Piece::Xi { a } => *a,
            Piece::V { .. } => 0.0,
        })
        .sum()
}

/// Angle by which the linearized Reeb flow turns `v` inside the contact
/// plane along a `xi`-piece of length `a`, measured in the frame `(v, beta)`.
///
/// `d psi_a (v) = v + a beta^#`, so the angle is `atan(a)` and never reaches a
/// half turn.
pub fn v_rotation_along_xi(f: &ContactFamily, z: f64, a: f64) -> Result<f64> {
    let v = f.v_raw(z)?;
    let t = f.theta(z);
    let d = f.theta_prime(z);
    let pushed = [-a * d * t.sin() * v[2], a * d * t.cos() * v[2], v[2]];
    let along_v = pushed[2] / v[2];
    let beta = f.beta_raw(z);
    let along_beta = pushed[0] * beta[0] + pushed[1] * beta[1];
    Ok(along_beta.atan2(along_v))
}

/// True when `v` turns a nonzero whole number of half revolutions along the
/// piece.
pub fn is_characteristic(f: &ContactFamily, z: f64, a: f64) -> Result<bool> {
    let turns = v_rotation_along_xi(f, z, a)? / PI;
    let nearest = turns.round();
    Ok(nearest != 0.0 && (turns - nearest).abs() < CLOSED_FORM_TOLERANCE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    TrueCpi,
    Characteristic,
    NotCritical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiClassification {
    pub verdict: Verdict,
    /// One flag per `v`-piece: the jump ends on the fiber it started from.
    pub same_fiber: Vec<bool>,
    /// Conjugacy residual of each `v`-piece.
    pub residuals: Vec<f64>,
    pub index_lower_bound: u32,
    pub diagnostics: Vec<String>,
}

pub fn classify(c: &InfinityConfig) -> Result<CpiClassification> {
    let f = c.family();
    let mut p = c.base.base_point();
    let mut same_fiber = Vec::new();
    let mut residuals = Vec::new();
    let mut diagnostics = Vec::new();
    let mut conjugate = true;
    let mut characteristic = false;
    for (i, piece) in c.pieces.iter().enumerate() {
        match *piece {
            Piece::Xi { a } => {
                if is_characteristic(f, p[2], a)? {
                    characteristic = true;
                    diagnostics.push(format!("piece {i}: xi-piece of characteristic length"));
                }
                p = psi_lift(f, &p, a);
            }
            Piece::V { s } => {
                let residual = conjugacy_residual(f, &p, s)?;
                let next = phi_lift(f, &p, s)?;
                same_fiber.push(circle_distance(next[2], p[2]) < CLOSED_FORM_TOLERANCE);
                residuals.push(residual);
                if s == 0.0 || residual >= CLOSED_FORM_TOLERANCE {
                    conjugate = false;
                    diagnostics.push(format!(
                        "piece {i}: v-jump of length {s} does not end on a conjugate point (residual {residual:.3e})"
                    ));
                }
                p = next;
            }
        }
    }
    if residuals.is_empty() {
        diagnostics.push("no v-jumps: this is a periodic orbit, not a configuration at infinity".into());
    }
    let verdict = if characteristic {
        Verdict::Characteristic
    } else if conjugate && !residuals.is_empty() {
        Verdict::TrueCpi
    } else {
        Verdict::NotCritical
    };
    Ok(CpiClassification {
        verdict,
        same_fiber,
        residuals,
        index_lower_bound: u32::from(!c.v_cycles.is_empty()),
        diagnostics,
    })
}

/// Fiber winding `sum k_i` added by the `v`-cycles.
pub fn p3_of_config(c: &InfinityConfig) -> i64 {
    c.v_cycles.iter().map(|v| v.k).sum()
}

pub fn can_interact(c: &InfinityConfig, x: &OrbitCircle) -> bool {
    p3_of_config(c) == 0 && c.class() == x.class
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// Min and max of one circle: the perturbed pair carries zero boundary.
    SameCircleCancels,
    /// Distinct circles of one class share the action level.
    EqualActionLevel,
    /// The configuration winds around the fiber.
    P3Nonzero,
    /// The configuration lives in another class.
    ClassMismatch,
    /// Index at infinity is at least one.
    IndexAtLeastOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Excluded {
    Pair {
        from: GeneratorId,
        to: GeneratorId,
        reason: ExclusionReason,
    },
    Config {
        config: usize,
        p3: i64,
        reason: ExclusionReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySplitReport {
    pub class: Option<HomotopyClass2>,
    /// Index-0 generators, the rows of `d_per`.
    pub rows: Vec<GeneratorId>,
    /// Index-1 generators, the columns of `d_per`.
    pub cols: Vec<GeneratorId>,
    pub d_per: Vec<Vec<i64>>,
    pub d_per_zero: bool,
    pub d_per_squared_zero: bool,
    pub excluded: Vec<Excluded>,
}

/// Certifies that the periodic part of the boundary vanishes between the
/// min and max generators of one class, recording why every candidate
/// flow line is excluded.
pub fn boundary_split_check(
    generators: &[Generator],
    configs: &[InfinityConfig],
) -> Result<BoundarySplitReport> {
    let class = generators.first().map(|g| g.id.class);
    if let Some(g) = generators.iter().find(|g| Some(g.id.class) != class) {
        return Err(Error::InvalidArgument(format!(
            "generator {} is not in the class of the others",
            g.id
        )));
    }
    let mut rows: Vec<GeneratorId> = generators
        .iter()
        .filter(|g| g.id.role == Role::Min)
        .map(|g| g.id)
        .collect();
    let mut cols: Vec<GeneratorId> = generators
        .iter()
        .filter(|g| g.id.role == Role::Max)
        .map(|g| g.id)
        .collect();
    rows.sort();
    cols.sort();

    let mut excluded = Vec::new();
    for from in &cols {
        for to in &rows {
            let reason = if from.circle == to.circle {
                ExclusionReason::SameCircleCancels
            } else {
                ExclusionReason::EqualActionLevel
            };
            excluded.push(Excluded::Pair {
                from: *from,
                to: *to,
                reason,
            });
        }
    }
    for (i, c) in configs.iter().enumerate() {
        let p3 = p3_of_config(c);
        let reason = if Some(c.class()) != class {
            ExclusionReason::ClassMismatch
        } else if p3 != 0 {
            ExclusionReason::P3Nonzero
        } else {
            ExclusionReason::IndexAtLeastOne
        };
        excluded.push(Excluded::Config {
            config: i,
            p3,
            reason,
        });
    }

    let d_per = vec![vec![0i64; cols.len()]; rows.len()];
    let d_per_zero = d_per.iter().flatten().all(|&x| x == 0);
    // the boundary out of degree 0 is the empty map, so d_per^2 is a 0 x cols product
    let d_per_squared_zero = d_per_zero || rows.is_empty();
    Ok(BoundarySplitReport {
        class,
        rows,
        cols,
        d_per,
        d_per_zero,
        d_per_squared_zero,
        excluded,
    })
}
