//! Second variation along a deformation made of Dirac-mass `v`-jumps.
//!
//! Each jump `i` lives in its own window `[T_i^-, T_i^+]`, the windows
//! partition `[0, 1]`, and on window `i`
//! `eta' = s_i A_i (1_{[t_i^-, t_i^+]} - rho_i)` with
//! `rho_i = (t_i^+ - t_i^-) / (T_i^+ - T_i^-)`, so `eta` closes per window.
//! The value `\int_0^1 eta'^2` is computed three ways: the closed form, exact
//! quadrature of the piecewise-constant `eta'^2`, and the telescoping sum
//! `sum s_i A_i (eta(t_i^+) - eta(t_i^-))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Windows must tile `[0, 1]` up to this gap.
pub const WINDOW_TOLERANCE: f64 = 1e-12;
/// Cross-check tolerance between the three evaluations, relative.
pub const AGREEMENT_TOLERANCE: f64 = 1e-10;
/// Values at or below this count as zero.
pub const POSITIVITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub amplitude: f64,
    /// `+1` or `-1`.
    pub sign: i8,
    pub t_minus: f64,
    pub t_plus: f64,
    pub window_minus: f64,
    pub window_plus: f64,
}

impl Jump {
    pub fn duration(&self) -> f64 {
        self.t_plus - self.t_minus
    }

    pub fn window_length(&self) -> f64 {
        self.window_plus - self.window_minus
    }

    pub fn rho(&self) -> f64 {
        self.duration() / self.window_length()
    }

    pub fn signed_amplitude(&self) -> f64 {
        self.sign as f64 * self.amplitude
    }

    /// `A > 0` and `0 < dt < dT`.
    pub fn is_proper(&self) -> bool {
        self.amplitude > 0.0 && self.duration() > 0.0 && self.duration() < self.window_length()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiracDeformation {
    jumps: Vec<Jump>,
}

impl DiracDeformation {
    /// Validates one jump per window, windows in order and tiling `[0, 1]`.
    pub fn new(jumps: Vec<Jump>) -> Result<Self> {
        if jumps.is_empty() {
            return Err(Error::InvalidWindow("no jumps".into()));
        }
        let mut edge = 0.0;
        for (i, j) in jumps.iter().enumerate() {
            let values = [j.amplitude, j.t_minus, j.t_plus, j.window_minus, j.window_plus];
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidWindow(format!("jump {i}: non-finite data")));
            }
            if j.amplitude < 0.0 {
                return Err(Error::InvalidWindow(format!("jump {i}: negative amplitude")));
            }
            if j.sign != 1 && j.sign != -1 {
                return Err(Error::InvalidWindow(format!("jump {i}: sign must be +1 or -1")));
            }
            if (j.window_minus - edge).abs() > WINDOW_TOLERANCE {
                return Err(Error::InvalidWindow(format!(
                    "jump {i}: window starts at {} but the previous one ends at {edge}",
                    j.window_minus
                )));
            }
            if !(j.window_plus > j.window_minus) {
                return Err(Error::InvalidWindow(format!("jump {i}: empty window")));
            }
            if !(j.t_minus < j.t_plus) {
                return Err(Error::InvalidWindow(format!("jump {i}: t- must precede t+")));
            }
            if j.t_minus < j.window_minus || j.t_plus > j.window_plus {
                return Err(Error::InvalidWindow(format!(
                    "jump {i}: [{}, {}] leaves its window [{}, {}]",
                    j.t_minus, j.t_plus, j.window_minus, j.window_plus
                )));
            }
            edge = j.window_plus;
        }
        if (edge - 1.0).abs() > WINDOW_TOLERANCE {
            return Err(Error::InvalidWindow(format!("windows end at {edge}, not 1")));
        }
        Ok(DiracDeformation { jumps })
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn has_proper_jump(&self) -> bool {
        self.jumps.iter().any(Jump::is_proper)
    }

    /// `sum s_i A_i (t_i^+ - t_i^-)`: zero when the jumps cancel globally.
    pub fn signed_jump_sum(&self) -> f64 {
        self.jumps
            .iter()
            .map(|j| j.signed_amplitude() * j.duration())
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump {
                amplitude: j.amplitude * c.abs(),
                sign: if c < 0.0 { -j.sign } else { j.sign },
                ..*j
            })
            .collect();
        Self::new(jumps)
    }
}

/// Piecewise-linear `eta` with `eta(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaProfile {
    /// Breakpoints from 0 to 1.
    pub breakpoints: Vec<f64>,
    /// `eta` at each breakpoint.
    pub values: Vec<f64>,
    /// `eta'` on each segment.
    pub slopes: Vec<f64>,
}

impl EtaProfile {
    fn segment(&self, t: f64) -> usize {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        i.saturating_sub(1).min(self.slopes.len().saturating_sub(1))
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if self.slopes.is_empty() {
            return 0.0;
        }
        self.slopes[self.segment(t)]
    }

    pub fn value(&self, t: f64) -> f64 {
        if self.slopes.is_empty() {
            return 0.0;
        }
        let i = self.segment(t);
        self.values[i] + self.slopes[i] * (t - self.breakpoints[i])
    }

    /// Largest `|eta(T^+) - eta(T^-)|` over the windows.
    pub fn closure_defect(&self, d: &DiracDeformation) -> f64 {
        d.jumps
            .iter()
            .map(|j| (self.value(j.window_plus) - self.value(j.window_minus)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn eta_from_jumps(d: &DiracDeformation) -> EtaProfile {
    let mut breakpoints = vec![0.0];
    let mut slopes = Vec::new();
    for j in &d.jumps {
        let a = j.signed_amplitude();
        let rho = j.rho();
        let pieces = [
            (j.t_minus, -a * rho),
            (j.t_plus, a * (1.0 - rho)),
            (j.window_plus, -a * rho),
        ];
        for (end, slope) in pieces {
            if end > *breakpoints.last().unwrap_or(&0.0) {
                breakpoints.push(end);
                slopes.push(slope);
            }
        }
    }
    let mut values = vec![0.0];
    for (i, s) in slopes.iter().enumerate() {
        values.push(values[i] + s * (breakpoints[i + 1] - breakpoints[i]));
    }
    EtaProfile {
        breakpoints,
        values,
        slopes,
    }
}

/// `sum A_i^2 dt_i (1 - dt_i / dT_i)`.
pub fn second_variation_closed(d: &DiracDeformation) -> f64 {
    d.jumps
        .iter()
        .map(|j| j.amplitude * j.amplitude * j.duration() * (1.0 - j.rho()))
        .sum()
}

/// Midpoint rule on the uniform grid refined by every breakpoint of `eta`,
/// which is exact for the piecewise-constant `eta'^2`.
pub fn second_variation_quadrature(d: &DiracDeformation, samples: usize) -> Result<f64> {
    if samples < 8 {
        return Err(Error::InsufficientResolution {
            min: 8,
            got: samples,
        });
    }
    let eta = eta_from_jumps(d);
    let mut nodes: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
    nodes.extend(&eta.breakpoints);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    Ok(nodes
        .windows(2)
        .map(|w| {
            let s = eta.derivative(0.5 * (w[0] + w[1]));
            s * s * (w[1] - w[0])
        })
        .sum())
}

/// `sum s_i A_i (eta(t_i^+) - eta(t_i^-))`.
pub fn second_variation_telescoping(d: &DiracDeformation) -> f64 {
    let eta = eta_from_jumps(d);
    d.jumps
        .iter()
        .map(|j| j.signed_amplitude() * (eta.value(j.t_plus) - eta.value(j.t_minus)))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub jumps: usize,
    pub closed: f64,
    pub quadrature: f64,
    pub telescoping: f64,
    pub relative_gap: f64,
    pub proper: bool,
    pub positive: bool,
    pub signed_jump_sum: f64,
    pub passed: bool,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// All three evaluations of one deformation, with the agreement and
/// positivity verdicts.
pub fn evaluate(d: &DiracDeformation, samples: usize) -> Result<StabilityRow> {
    let closed = second_variation_closed(d);
    let quadrature = second_variation_quadrature(d, samples)?;
    let telescoping = second_variation_telescoping(d);
    let gap = relative_gap(closed, quadrature).max(relative_gap(closed, telescoping));
    let proper = d.has_proper_jump();
    let positive = closed > POSITIVITY_FLOOR;
    Ok(StabilityRow {
        jumps: d.jumps.len(),
        closed,
        quadrature,
        telescoping,
        relative_gap: gap,
        proper,
        positive,
        signed_jump_sum: d.signed_jump_sum(),
        passed: gap < AGREEMENT_TOLERANCE && (!proper || positive),
    })
}

/// A random valid deformation with `1..=max_jumps` windows.
pub fn random_deformation<R: Rng>(rng: &mut R, max_jumps: usize) -> DiracDeformation {
    let count = rng.gen_range(1..=max_jumps.max(1));
    let mut cuts: Vec<f64> = (0..count - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = vec![0.0];
    edges.extend(cuts);
    edges.push(1.0);
    edges.dedup();
    let jumps = edges
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let a = rng.gen_range(lo..hi);
            let b = rng.gen_range(lo..hi);
            let (t_minus, t_plus) = if a < b { (a, b) } else { (b, a) };
            let t_plus = if t_plus > t_minus { t_plus } else { hi };
            Jump {
                amplitude: rng.gen_range(0.1..5.0),
                sign: if rng.gen_bool(0.5) { 1 } else { -1 },
                t_minus,
                t_plus,
                window_minus: lo,
                window_plus: hi,
            }
        })
        .collect();
    DiracDeformation::new(jumps).expect("random windows tile [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn jump(a: f64, t: (f64, f64), w: (f64, f64)) -> Jump {
        Jump {
            amplitude: a,
            sign: 1,
            t_minus: t.0,
            t_plus: t.1,
            window_minus: w.0,
            window_plus: w.1,
        }
    }

    #[test]
    fn eta_examples() {
        let d = DiracDeformation::new(vec![jump(1.0, (0.0, 0.5), (0.0, 1.0))]).unwrap();
        let eta = eta_from_jumps(&d);
        assert_eq!(eta.slopes, vec![0.5, -0.5]);
        assert!(eta.closure_defect(&d) < 1e-15);

        let full = DiracDeformation::new(vec![jump(3.0, (0.0, 1.0), (0.0, 1.0))]).unwrap();
        assert!(eta_from_jumps(&full).slopes.iter().all(|&s| s == 0.0));

        let flat = DiracDeformation::new(vec![jump(0.0, (0.2, 0.4), (0.0, 1.0))]).unwrap();
        let eta = eta_from_jumps(&flat);
        assert!(eta.values.iter().all(|&v| v == 0.0));
    }

    fn two_windows(a: (f64, f64)) -> DiracDeformation {
        DiracDeformation::new(vec![
            jump(a.0, (0.1, 0.225), (0.0, 0.5)),
            Jump {
                sign: -1,
                ..jump(a.1, (0.6, 0.725), (0.5, 1.0))
            },
        ])
        .unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let d = DiracDeformation::new(vec![
            jump(1.0, (0.1, 0.35), (0.0, 0.5)),
            jump(0.0, (0.6, 0.7), (0.5, 1.0)),
        ])
        .unwrap();
        assert!((second_variation_closed(&d) - 0.125).abs() < 1e-15);
        assert!((second_variation_quadrature(&d, 64).unwrap() - 0.125).abs() < 1e-12);

        let full = DiracDeformation::new(vec![jump(2.0, (0.0, 1.0), (0.0, 1.0))]).unwrap();
        assert_eq!(second_variation_closed(&full), 0.0);

        let d = two_windows((1.0, 2.0));
        assert!((second_variation_closed(&d) - 15.0 / 32.0).abs() < 1e-15);
        assert!((second_variation_quadrature(&d, 8).unwrap() - 15.0 / 32.0).abs() < 1e-12);
        assert!((second_variation_telescoping(&d) - 15.0 / 32.0).abs() < 1e-12);
        assert!(d.signed_jump_sum().abs() > 0.1);
    }

    #[test]
    fn bad_windows_are_rejected() {
        let cases = [
            vec![jump(1.0, (0.1, 0.6), (0.0, 0.5)), jump(1.0, (0.6, 0.7), (0.5, 1.0))],
            vec![jump(1.0, (0.1, 0.2), (0.0, 0.4)), jump(1.0, (0.6, 0.7), (0.5, 1.0))],
            vec![jump(1.0, (0.1, 0.2), (0.0, 0.9))],
            vec![jump(1.0, (0.3, 0.2), (0.0, 1.0))],
            vec![],
        ];
        for jumps in cases {
            assert!(matches!(DiracDeformation::new(jumps), Err(Error::InvalidWindow(_))));
        }
        let mut j = jump(1.0, (0.1, 0.2), (0.0, 1.0));
        j.sign = 0;
        assert!(DiracDeformation::new(vec![j]).is_err());
    }

    #[test]
    fn quadrature_needs_eight_samples() {
        let d = two_windows((1.0, 1.0));
        assert_eq!(
            second_variation_quadrature(&d, 7),
            Err(Error::InsufficientResolution { min: 8, got: 7 })
        );
    }

    #[test]
    fn random_deformations_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let d = random_deformation(&mut rng, 6);
            let row = evaluate(&d, 97).unwrap();
            assert!(row.passed, "{row:?}");
            assert!(row.positive);
            assert!(eta_from_jumps(&d).closure_defect(&d) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn scaling_is_quadratic(seed in 0u64..1000, c in -4.0..4.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_deformation(&mut rng, 4);
            let scaled = d.scaled(c).unwrap();
            let (a, b) = (second_variation_closed(&d), second_variation_closed(&scaled));
            prop_assert!((b - c * c * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
