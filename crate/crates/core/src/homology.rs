//! Integer chain complexes, Smith normal form, the complex of a class, the
//! `Z_k` quotient of `Linear(k p)` and the commuting diagram of iterated
//! quotients.

use std::f64::consts::TAU;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::contact::{max_abs_diff, ContactFamily, CLOSED_FORM_TOLERANCE};
use crate::error::{Error, Result};
use crate::infinity::{boundary_split_check, BoundarySplitReport, InfinityConfig, VCycle};
use crate::manifold::{circle_distance, wrap_angle, HomotopyClass2};
use crate::orbits::{break_symmetry, enumerate_orbits, Generator, GeneratorId, OrbitCircle};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        let n = rows.len();
        Ok(Matrix {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// A `rows x cols` matrix; `from_rows` cannot express zero columns
    /// with nonzero rows.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }
}

impl<T: Clone + Zero> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }
}

impl<T: Clone + Zero + One> Matrix<T> {
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }
}

impl Matrix<i64> {
    pub fn to_big(&self) -> Matrix<BigInt> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    /// Exact product; fails on a shape mismatch or an entry leaving `i64`.
    pub fn mul(&self, other: &Matrix<i64>) -> Result<Matrix<i64>> {
        if self.cols != other.rows {
            return Err(Error::InvalidArgument(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: i128 = (0..self.cols)
                    .map(|k| *self.get(i, k) as i128 * *other.get(k, j) as i128)
                    .sum();
                let v = i64::try_from(s)
                    .map_err(|_| Error::InvalidArgument("matrix product overflows i64".into()))?;
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    /// Largest absolute entry of `self - other`, `None` on a shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix<i64>) -> Option<i64> {
        if self.rows != other.rows || self.cols != other.cols {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .max()
                .unwrap_or(0),
        )
    }
}

impl Matrix<BigInt> {
    pub fn mul(&self, other: &Matrix<BigInt>) -> Matrix<BigInt> {
        assert_eq!(self.cols, other.rows, "matrix shapes do not chain");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut s = BigInt::zero();
                for k in 0..self.cols {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    /// Fraction-free (Bareiss) determinant of a square matrix.
    pub fn determinant(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }

    fn row_axpy(&mut self, target: usize, source: usize, c: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(target, j) + c * self.get(source, j);
            self.set(target, j, v);
        }
    }

    fn col_axpy(&mut self, target: usize, source: usize, c: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, target) + c * self.get(i, source);
            self.set(i, target, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j).clone();
            self.set(i, j, v);
        }
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
        }
        write!(f, "]")
    }
}

/// `U * M * V = S` with `U`, `V` unimodular and `S` diagonal,
/// `d_1 | d_2 | ...`, all `d_i >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithNormalForm {
    pub u: Matrix<BigInt>,
    pub s: Matrix<BigInt>,
    pub v: Matrix<BigInt>,
}

impl SmithNormalForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.s.rows.min(self.s.cols))
            .map(|i| self.s.get(i, i).clone())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal()
            .into_iter()
            .filter(|d| *d > BigInt::one())
            .collect()
    }
}

pub fn smith_normal_form(m: &Matrix<BigInt>) -> SmithNormalForm {
    let (r, c) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = Matrix::<BigInt>::identity(r);
    let mut v = Matrix::<BigInt>::identity(c);
    for t in 0..r.min(c) {
        loop {
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    let x = s.get(i, j);
                    if !x.is_zero()
                        && pivot.is_none_or(|(pi, pj)| x.abs() < s.get(pi, pj).abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return SmithNormalForm { u, s, v };
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let p = s.get(t, t).clone();
            let mut clean = true;
            for i in t + 1..r {
                let q = s.get(i, t) / &p;
                if !q.is_zero() {
                    let neg = -q;
                    s.row_axpy(i, t, &neg);
                    u.row_axpy(i, t, &neg);
                }
                clean &= s.get(i, t).is_zero();
            }
            for j in t + 1..c {
                let q = s.get(t, j) / &p;
                if !q.is_zero() {
                    let neg = -q;
                    s.col_axpy(j, t, &neg);
                    v.col_axpy(j, t, &neg);
                }
                clean &= s.get(t, j).is_zero();
            }
            if !clean {
                continue;
            }
            let offending = (t + 1..r).find(|&i| (t + 1..c).any(|j| !s.get(i, j).is_multiple_of(&p)));
            match offending {
                Some(i) => {
                    s.row_axpy(t, i, &BigInt::one());
                    u.row_axpy(t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s.get(t, t).is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithNormalForm { u, s, v }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cell {
    Orbit(Generator),
    Named { name: String },
}

impl Cell {
    pub fn named(name: impl Into<String>) -> Self {
        Cell::Named { name: name.into() }
    }

    pub fn label(&self) -> String {
        match self {
            Cell::Orbit(g) => g.id.to_string(),
            Cell::Named { name } => name.clone(),
        }
    }

    fn generator(&self) -> Option<&Generator> {
        match self {
            Cell::Orbit(g) => Some(g),
            Cell::Named { .. } => None,
        }
    }
}

/// Generators per degree and boundaries `D_k : C_k -> C_{k-1}` (with `D_0`
/// the empty map out of degree 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainComplex {
    pub family: Option<ContactFamily>,
    pub class: Option<HomotopyClass2>,
    generators: Vec<Vec<Cell>>,
    boundaries: Vec<Matrix<i64>>,
}

impl ChainComplex {
    /// `boundaries[k - 1]` is `D_k` for `k >= 1`.
    pub fn new(generators: Vec<Vec<Cell>>, boundaries: Vec<Matrix<i64>>) -> Result<Self> {
        let top = generators.len();
        if boundaries.len() != top.saturating_sub(1) {
            return Err(Error::NotAComplex(format!(
                "{} boundary matrices for {top} degrees",
                boundaries.len()
            )));
        }
        let mut all = vec![Matrix::zeros(0, generators.first().map_or(0, Vec::len))];
        for (i, d) in boundaries.into_iter().enumerate() {
            let k = i + 1;
            if d.rows != generators[k - 1].len() || d.cols != generators[k].len() {
                return Err(Error::NotAComplex(format!(
                    "D_{k} is {}x{}, expected {}x{}",
                    d.rows,
                    d.cols,
                    generators[k - 1].len(),
                    generators[k].len()
                )));
            }
            all.push(d);
        }
        if top == 0 {
            all.clear();
        }
        Ok(ChainComplex {
            family: None,
            class: None,
            generators,
            boundaries: all,
        })
    }

    pub fn degrees(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self, k: usize) -> &[Cell] {
        self.generators.get(k).map_or(&[], Vec::as_slice)
    }

    pub fn rank(&self, k: usize) -> usize {
        self.generators(k).len()
    }

    /// `D_k`; out of range degrees give an empty matrix of the right shape.
    pub fn boundary(&self, k: usize) -> Matrix<i64> {
        match self.boundaries.get(k) {
            Some(d) => d.clone(),
            None => Matrix::zeros(
                if k == 0 { 0 } else { self.rank(k - 1) },
                self.rank(k),
            ),
        }
    }

    /// Checks `D_{k-1} D_k = 0` for every `k`.
    pub fn check_squares(&self) -> Result<()> {
        for k in 1..self.degrees() {
            if !self.boundary(k - 1).mul(&self.boundary(k))?.is_zero() {
                return Err(Error::NotAComplex(format!("D_{} D_{k} != 0", k - 1)));
            }
        }
        Ok(())
    }

    pub fn euler_characteristic(&self) -> i64 {
        (0..self.degrees())
            .map(|k| if k % 2 == 0 { 1 } else { -1 } * self.rank(k) as i64)
            .sum()
    }

    /// Same generator ids per degree (heights within tolerance) and equal
    /// boundaries.
    pub fn same_structure(&self, other: &ChainComplex) -> bool {
        if self.degrees() != other.degrees() {
            return false;
        }
        for k in 0..self.degrees() {
            let (a, b) = (self.generators(k), other.generators(k));
            if a.len() != b.len() {
                return false;
            }
            for (x, y) in a.iter().zip(b) {
                let same = match (x, y) {
                    (Cell::Orbit(g), Cell::Orbit(h)) => {
                        g.id == h.id
                            && g.index == h.index
                            && circle_distance(g.z_root, h.z_root) < CLOSED_FORM_TOLERANCE
                    }
                    _ => x == y,
                };
                if !same {
                    return false;
                }
            }
            if self.boundary(k) != other.boundary(k) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyGroup {
    pub degree: usize,
    pub rank: usize,
    /// Invariant factors `>= 2`, each dividing the next.
    pub torsion: Vec<u64>,
}

impl HomologyGroup {
    pub fn is_zero(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }
}

impl fmt::Display for HomologyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// `H_k = ker D_k / im D_{k+1}` for every degree of the complex.
pub fn homology_of(c: &ChainComplex) -> Result<Vec<HomologyGroup>> {
    c.check_squares()?;
    let snf: Vec<SmithNormalForm> = (0..=c.degrees())
        .map(|k| smith_normal_form(&c.boundary(k).to_big()))
        .collect();
    (0..c.degrees())
        .map(|k| {
            let rank = c.rank(k) - snf[k].rank() - snf[k + 1].rank();
            let torsion = snf[k + 1]
                .torsion()
                .iter()
                .map(|d| {
                    d.to_u64().ok_or_else(|| {
                        Error::InvalidArgument(format!("invariant factor {d} exceeds u64"))
                    })
                })
                .collect::<Result<Vec<u64>>>()?;
            Ok(HomologyGroup {
                degree: k,
                rank,
                torsion,
            })
        })
        .collect()
}

/// Representative configurations at infinity above a circle, used to
/// populate the exclusion certificate.
fn probe_configs(circles: &[OrbitCircle]) -> Result<Vec<InfinityConfig>> {
    let mut out = Vec::new();
    for c in circles {
        out.push(InfinityConfig::from_cycles(c.clone(), vec![VCycle { t: 0.5, k: 1 }])?);
        out.push(InfinityConfig::from_cycles(
            c.clone(),
            vec![VCycle { t: 0.25, k: 1 }, VCycle { t: 0.75, k: -1 }],
        )?);
    }
    Ok(out)
}

/// The complex of class `g` together with the certificate for its boundary.
pub fn build_complex_certified(
    f: &ContactFamily,
    g: HomotopyClass2,
) -> Result<(ChainComplex, BoundarySplitReport)> {
    let circles = enumerate_orbits(f, g)?;
    let mut mins = Vec::new();
    let mut maxes = Vec::new();
    for c in &circles {
        let (lo, hi) = break_symmetry(c);
        mins.push(lo);
        maxes.push(hi);
    }
    let all: Vec<Generator> = mins.iter().chain(&maxes).cloned().collect();
    let report = boundary_split_check(&all, &probe_configs(&circles)?)?;
    let d1 = Matrix::from_vec(
        report.rows.len(),
        report.cols.len(),
        report.d_per.iter().flatten().copied().collect(),
    )?;
    let generators = vec![
        mins.into_iter().map(Cell::Orbit).collect(),
        maxes.into_iter().map(Cell::Orbit).collect(),
        Vec::new(),
    ];
    let d2 = Matrix::zeros(circles.len(), 0);
    let mut complex = ChainComplex::new(generators, vec![d1, d2])?;
    complex.family = Some(f.clone());
    complex.class = Some(g);
    Ok((complex, report))
}

/// Min generators in degree 0, max generators in degree 1, zero boundary;
/// degree 2 is present and empty.
pub fn build_complex(f: &ContactFamily, g: HomotopyClass2) -> Result<ChainComplex> {
    build_complex_certified(f, g).map(|(c, _)| c)
}

/// Per-degree integer matrices from a source to a target complex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMap {
    pub matrices: Vec<Matrix<i64>>,
}

impl ChainMap {
    pub fn identity(c: &ChainComplex) -> Self {
        ChainMap {
            matrices: (0..c.degrees()).map(|k| Matrix::identity(c.rank(k))).collect(),
        }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &ChainMap) -> Result<ChainMap> {
        if self.matrices.len() != first.matrices.len() {
            return Err(Error::InvalidArgument("chain maps span different degrees".into()));
        }
        let matrices = self
            .matrices
            .iter()
            .zip(&first.matrices)
            .map(|(a, b)| a.mul(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainMap { matrices })
    }

    /// Largest entry of `D_target F - F D_source` over all degrees.
    pub fn commutator_residual(&self, source: &ChainComplex, target: &ChainComplex) -> Result<i64> {
        let mut worst = 0;
        for k in 1..self.matrices.len() {
            let left = target.boundary(k).mul(&self.matrices[k])?;
            let right = self.matrices[k - 1].mul(&source.boundary(k))?;
            let r = left
                .max_abs_diff(&right)
                .ok_or_else(|| Error::InvalidArgument("chain map shape mismatch".into()))?;
            worst = worst.max(r);
        }
        Ok(worst)
    }

    pub fn is_chain_map(&self, source: &ChainComplex, target: &ChainComplex) -> Result<bool> {
        Ok(self.commutator_residual(source, target)? == 0)
    }

    /// Every column has exactly one entry, equal to one.
    pub fn is_projection(&self) -> bool {
        self.matrices.iter().all(|m| {
            (0..m.cols).all(|j| {
                let col: Vec<i64> = (0..m.rows).map(|i| *m.get(i, j)).collect();
                col.iter().filter(|&&x| x == 1).count() == 1 && col.iter().all(|&x| x == 0 || x == 1)
            })
        })
    }

    pub fn max_abs_diff(&self, other: &ChainMap) -> Option<i64> {
        if self.matrices.len() != other.matrices.len() {
            return None;
        }
        self.matrices
            .iter()
            .zip(&other.matrices)
            .map(|(a, b)| a.max_abs_diff(b))
            .try_fold(0, |acc, r| r.map(|r| acc.max(r)))
    }
}

/// Permutation of one degree induced by `z -> z + 2pi/k`.
fn action_on_degree(
    f: &ContactFamily,
    cells: &[Cell],
    k: u32,
) -> Result<Vec<usize>> {
    let gens: Vec<&Generator> = cells
        .iter()
        .map(|c| {
            c.generator()
                .ok_or_else(|| Error::NotEquivariant(format!("cell {} is not an orbit", c.label())))
        })
        .collect::<Result<_>>()?;
    let shift = TAU / k as f64;
    let mut sigma = Vec::with_capacity(gens.len());
    for g in &gens {
        let moved = g.z_root + shift;
        let residual = max_abs_diff(&f.alpha_raw(moved), &f.alpha_raw(g.z_root));
        if residual >= CLOSED_FORM_TOLERANCE {
            return Err(Error::NotEquivariant(format!(
                "alpha is not invariant under z -> z + 2pi/{k} at z = {} (residual {residual:.3e})",
                g.z_root
            )));
        }
        let image = gens.iter().position(|h| {
            h.id.class == g.id.class
                && h.id.role == g.id.role
                && circle_distance(h.z_root, moved) < CLOSED_FORM_TOLERANCE
        });
        match image {
            Some(j) => sigma.push(j),
            None => {
                return Err(Error::NotEquivariant(format!(
                    "no circle at z = {} to receive {}",
                    wrap_angle(moved),
                    g.id
                )))
            }
        }
    }
    let mut seen = vec![false; sigma.len()];
    for &j in &sigma {
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::NotEquivariant("the action is not a permutation".into()));
        }
    }
    Ok(sigma)
}

/// Orbits of a permutation, each sorted, listed by their least element.
fn cycles(sigma: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; sigma.len()];
    let mut out = Vec::new();
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            orbit.push(j);
            j = sigma[j];
        }
        orbit.sort_unstable();
        out.push(orbit);
    }
    out.sort_by_key(|o| o[0]);
    out
}

/// Quotient of a complex built over `Linear(k p)` by the fiber rotation
/// `z -> z + 2pi/k`, and the projection onto it.
///
/// Each orbit of circles is labelled by its least circle index and placed at
/// height `k z` mod `2pi`, which is where the circle lands under the covering
/// `z -> k z` of `Linear(p)`.
pub fn zk_quotient(source: &ChainComplex, k: u32) -> Result<(ChainComplex, ChainMap)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let n = match &source.family {
        Some(ContactFamily::Linear { n }) => *n,
        Some(other) => {
            return Err(Error::NotEquivariant(format!(
                "{} has no fiber rotation symmetry",
                other.describe()
            )))
        }
        None => return Err(Error::NotEquivariant("complex carries no family".into())),
    };
    if n % k != 0 {
        return Err(Error::NotEquivariant(format!("{k} does not divide n = {n}")));
    }
    let family = source.family.clone().unwrap_or(ContactFamily::Linear { n });
    let p = n / k;

    let mut orbits_per_degree = Vec::new();
    let mut sigmas = Vec::new();
    for d in 0..source.degrees() {
        let sigma = action_on_degree(&family, source.generators(d), k)?;
        orbits_per_degree.push(cycles(&sigma));
        sigmas.push(sigma);
    }
    for d in 1..source.degrees() {
        let b = source.boundary(d);
        for i in 0..b.rows {
            for j in 0..b.cols {
                if b.get(sigmas[d - 1][i], sigmas[d][j]) != b.get(i, j) {
                    return Err(Error::NotEquivariant(format!(
                        "D_{d} does not commute with the action"
                    )));
                }
            }
        }
    }

    let mut generators = Vec::new();
    let mut maps = Vec::new();
    for (d, orbits) in orbits_per_degree.iter().enumerate() {
        let cells = source.generators(d);
        let mut level = Vec::new();
        let mut f = Matrix::zeros(orbits.len(), cells.len());
        for (a, orbit) in orbits.iter().enumerate() {
            let rep = cells[orbit[0]]
                .generator()
                .cloned()
                .ok_or_else(|| Error::NotEquivariant("non-orbit cell".into()))?;
            let circle = orbit
                .iter()
                .filter_map(|&i| cells[i].generator().map(|g| g.id.circle))
                .min()
                .unwrap_or(rep.id.circle);
            level.push(Cell::Orbit(Generator {
                id: GeneratorId {
                    circle,
                    ..rep.id
                },
                z_root: wrap_angle(k as f64 * rep.z_root),
                ..rep
            }));
            for &i in orbit {
                f.set(a, i, 1);
            }
        }
        generators.push(level);
        maps.push(f);
    }

    let mut boundaries = Vec::new();
    for d in 1..source.degrees() {
        let b = source.boundary(d);
        let (lower, upper) = (&orbits_per_degree[d - 1], &orbits_per_degree[d]);
        let mut q = Matrix::zeros(lower.len(), upper.len());
        for (a, orbit_a) in lower.iter().enumerate() {
            for (c, orbit_c) in upper.iter().enumerate() {
                let s: i64 = orbit_a.iter().map(|&i| *b.get(i, orbit_c[0])).sum();
                q.set(a, c, s);
            }
        }
        boundaries.push(q);
    }

    let mut quotient = ChainComplex::new(generators, boundaries)?;
    quotient.family = Some(ContactFamily::Linear { n: p });
    quotient.class = source.class;
    quotient.check_squares()?;
    let map = ChainMap { matrices: maps };
    if !map.is_chain_map(source, &quotient)? {
        return Err(Error::NotAComplex("quotient map does not commute with the boundary".into()));
    }
    Ok((quotient, map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareCheck {
    pub name: String,
    pub commutes: bool,
    /// Largest integer discrepancy found, zero when the square commutes.
    pub residual: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    pub p: u32,
    pub q: u32,
    pub class: HomotopyClass2,
    pub squares: Vec<SquareCheck>,
    pub all_commute: bool,
}

fn homology_gap(a: &ChainComplex, b: &ChainComplex) -> Result<i64> {
    Ok(i64::from(homology_of(a)? != homology_of(b)?))
}

fn structure_gap(a: &ChainComplex, b: &ChainComplex) -> i64 {
    i64::from(!a.same_structure(b))
}

/// Quotients `Linear(p q)` by `Z_q` then `Z_p`, by `Z_p` then `Z_q`, and by
/// `Z_{pq}` at once, and compares every route on chains and on homology.
pub fn verify_diagram(p: u32, q: u32, g: HomotopyClass2) -> Result<DiagramReport> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidArgument("p and q must be positive".into()));
    }
    let top = build_complex(&ContactFamily::linear(p * q)?, g)?;
    let base_p = build_complex(&ContactFamily::linear(p)?, g)?;
    let base_q = build_complex(&ContactFamily::linear(q)?, g)?;
    let base_1 = build_complex(&ContactFamily::linear(1)?, g)?;

    let (by_q, f_q) = zk_quotient(&top, q)?;
    let (by_q_then_p, f_qp) = zk_quotient(&by_q, p)?;
    let (by_p, f_p) = zk_quotient(&top, p)?;
    let (by_p_then_q, f_pq) = zk_quotient(&by_p, q)?;
    let (by_pq, f_all) = zk_quotient(&top, p * q)?;

    let route_q = f_qp.compose(&f_q)?;
    let route_p = f_pq.compose(&f_p)?;
    let diff = |a: &ChainMap, b: &ChainMap| a.max_abs_diff(b).unwrap_or(i64::MAX);

    let squares: Vec<SquareCheck> = [
        ("Z_q then Z_p equals Z_pq on chains", diff(&route_q, &f_all)),
        ("Z_p then Z_q equals Z_pq on chains", diff(&route_p, &f_all)),
        ("Z_q quotient matches Linear(p)", structure_gap(&by_q, &base_p)),
        ("Z_p quotient matches Linear(q)", structure_gap(&by_p, &base_q)),
        ("Z_q then Z_p quotient matches Z_pq quotient", structure_gap(&by_q_then_p, &by_pq)),
        ("Z_p then Z_q quotient matches Z_pq quotient", structure_gap(&by_p_then_q, &by_pq)),
        ("Z_pq quotient matches Linear(1)", structure_gap(&by_pq, &base_1)),
        ("f_q commutes with boundaries", f_q.commutator_residual(&top, &by_q)?),
        ("f_p commutes with boundaries", f_p.commutator_residual(&top, &by_p)?),
        ("f_pq commutes with boundaries", f_all.commutator_residual(&top, &by_pq)?),
        ("second-stage maps commute with boundaries", {
            f_qp.commutator_residual(&by_q, &by_q_then_p)?
                .max(f_pq.commutator_residual(&by_p, &by_p_then_q)?)
        }),
        ("homology of Z_q quotient equals H(Linear p)", homology_gap(&by_q, &base_p)?),
        ("homology along both routes equals H(Linear 1)", {
            homology_gap(&by_q_then_p, &base_1)?.max(homology_gap(&by_p_then_q, &base_1)?)
        }),
        ("homology of Z_pq quotient equals H(Linear 1)", homology_gap(&by_pq, &base_1)?),
    ]
    .into_iter()
    .map(|(name, residual)| SquareCheck {
        name: name.to_string(),
        commutes: residual == 0,
        residual,
    })
    .collect();
    let all_commute = squares.iter().all(|s| s.commutes);
    Ok(DiagramReport {
        p,
        q,
        class: g,
        squares,
        all_commute,
    })
}

/// `#gen(Linear(k p)) = k #gen(Linear(p))` in every degree.
pub fn generator_count_identity(source: &ChainComplex, quotient: &ChainComplex, k: u32) -> bool {
    source.degrees() == quotient.degrees()
        && (0..source.degrees()).all(|d| source.rank(d) == k as usize * quotient.rank(d))
}
