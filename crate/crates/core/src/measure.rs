//! Finite signed measures on a Euclidean output space.
//!
//! Two representations are supported: weighted atoms, and a density tabulated
//! on a grid against per-cell reference weights. A grid measure puts mass
//! `density[i] * cell_weights[i]` on grid point `i`, so every measure here is
//! finitely supported and all integrals reduce to finite sums.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Result};

/// Tolerance for mass and probability checks.
pub const MASS_TOL: f64 = 1e-12;

/// Atoms closer than this are treated as the same point.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// A point of `R^d` with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(structural("point must have dimension >= 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(domain("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    /// A one-dimensional point. Panics on a non-finite coordinate.
    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x]).expect("finite scalar coordinate")
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn sq_distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sq_distance(other).sqrt()
    }

    pub fn l1_distance(&self, other: &Point) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = crate::Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

/// A finite signed measure in atomic or grid-density form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub enum FiniteMeasure {
    Atomic {
        atoms: Vec<Point>,
        weights: Vec<f64>,
    },
    Grid {
        grid: Vec<Point>,
        cell_weights: Vec<f64>,
        density: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum MeasureRepr {
    Atomic {
        atoms: Vec<Point>,
        weights: Vec<f64>,
    },
    Grid {
        grid: Vec<Point>,
        #[serde(rename = "cellWeights")]
        cell_weights: Vec<f64>,
        density: Vec<f64>,
    },
}

impl TryFrom<MeasureRepr> for FiniteMeasure {
    type Error = crate::Error;

    fn try_from(repr: MeasureRepr) -> Result<Self> {
        match repr {
            MeasureRepr::Atomic { atoms, weights } => FiniteMeasure::atomic(atoms, weights),
            MeasureRepr::Grid {
                grid,
                cell_weights,
                density,
            } => FiniteMeasure::grid(grid, cell_weights, density),
        }
    }
}

impl From<FiniteMeasure> for MeasureRepr {
    fn from(m: FiniteMeasure) -> Self {
        match m {
            FiniteMeasure::Atomic { atoms, weights } => MeasureRepr::Atomic { atoms, weights },
            FiniteMeasure::Grid {
                grid,
                cell_weights,
                density,
            } => MeasureRepr::Grid {
                grid,
                cell_weights,
                density,
            },
        }
    }
}

fn check_common_dim(points: &[Point]) -> Result<()> {
    if let Some(first) = points.first() {
        let d = first.dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(structural("points of mixed dimension"));
        }
    }
    Ok(())
}

impl FiniteMeasure {
    pub fn atomic(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(structural(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(domain("atom weights must be finite"));
        }
        check_common_dim(&atoms)?;
        Ok(FiniteMeasure::Atomic { atoms, weights })
    }

    pub fn grid(grid: Vec<Point>, cell_weights: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() != cell_weights.len() || grid.len() != density.len() {
            return Err(structural(format!(
                "grid of {} points with {} cell weights and {} density values",
                grid.len(),
                cell_weights.len(),
                density.len()
            )));
        }
        if cell_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(domain("cell weights must be finite and nonnegative"));
        }
        if density.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(domain("density values must be finite and nonnegative"));
        }
        check_common_dim(&grid)?;
        Ok(FiniteMeasure::Grid {
            grid,
            cell_weights,
            density,
        })
    }

    /// Unit point mass at `p`.
    pub fn dirac(p: Point) -> Self {
        FiniteMeasure::Atomic {
            atoms: vec![p],
            weights: vec![1.0],
        }
    }

    /// The zero measure (no atoms).
    pub fn zero() -> Self {
        FiniteMeasure::Atomic {
            atoms: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Number of atoms or grid cells.
    pub fn len(&self) -> usize {
        match self {
            FiniteMeasure::Atomic { atoms, .. } => atoms.len(),
            FiniteMeasure::Grid { grid, .. } => grid.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of the support points, if there are any.
    pub fn dim(&self) -> Option<usize> {
        self.points().first().map(Point::dim)
    }

    pub fn points(&self) -> &[Point] {
        match self {
            FiniteMeasure::Atomic { atoms, .. } => atoms,
            FiniteMeasure::Grid { grid, .. } => grid,
        }
    }

    /// Signed mass carried by each support point, in support order.
    pub fn masses(&self) -> Vec<f64> {
        match self {
            FiniteMeasure::Atomic { weights, .. } => weights.clone(),
            FiniteMeasure::Grid {
                cell_weights,
                density,
                ..
            } => density
                .iter()
                .zip(cell_weights)
                .map(|(f, w)| f * w)
                .collect(),
        }
    }

    /// Flattened `(point, mass)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (&Point, f64)> + '_ {
        self.points().iter().zip(self.masses())
    }

    /// Grid measures become weighted atoms with weight `density * cell_weight`.
    pub fn to_atomic(&self) -> FiniteMeasure {
        FiniteMeasure::Atomic {
            atoms: self.points().to_vec(),
            weights: self.masses(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.masses().iter().all(|m| *m >= 0.0)
    }

    pub fn is_probability(&self) -> bool {
        self.is_nonnegative() && (self.total_mass() - 1.0).abs() <= MASS_TOL
    }

    pub fn is_sub_probability(&self) -> bool {
        self.is_nonnegative() && self.total_mass() <= 1.0 + MASS_TOL
    }

    /// Multiplies every mass by `factor`.
    pub fn scaled(&self, factor: f64) -> FiniteMeasure {
        match self {
            FiniteMeasure::Atomic { atoms, weights } => FiniteMeasure::Atomic {
                atoms: atoms.clone(),
                weights: weights.iter().map(|w| w * factor).collect(),
            },
            FiniteMeasure::Grid {
                grid,
                cell_weights,
                density,
            } if factor >= 0.0 => FiniteMeasure::Grid {
                grid: grid.clone(),
                cell_weights: cell_weights.clone(),
                density: density.iter().map(|v| v * factor).collect(),
            },
            FiniteMeasure::Grid { .. } => self.to_atomic().scaled(factor),
        }
    }

    /// Weight-wise sum. Two measures on the same grid stay on that grid;
    /// anything else is concatenated into atomic form.
    pub fn plus(&self, other: &FiniteMeasure) -> Result<FiniteMeasure> {
        if let (Some(a), Some(b)) = (self.dim(), other.dim()) {
            if a != b {
                return Err(structural(format!("dimension mismatch: {a} vs {b}")));
            }
        }
        if same_grid(self, other) {
            if let (
                FiniteMeasure::Grid {
                    grid,
                    cell_weights,
                    density,
                },
                FiniteMeasure::Grid { density: d2, .. },
            ) = (self, other)
            {
                return Ok(FiniteMeasure::Grid {
                    grid: grid.clone(),
                    cell_weights: cell_weights.clone(),
                    density: density.iter().zip(d2).map(|(a, b)| a + b).collect(),
                });
            }
        }
        let mut atoms = self.points().to_vec();
        atoms.extend_from_slice(other.points());
        let mut weights = self.masses();
        weights.extend(other.masses());
        Ok(FiniteMeasure::Atomic { atoms, weights })
    }

    /// Merges coincident atoms, dropping nothing (zero-mass atoms are kept).
    pub fn merged(&self) -> FiniteMeasure {
        let (atoms, weights) = merge_atoms(self.atoms().map(|(p, m)| (p.clone(), m)));
        FiniteMeasure::Atomic { atoms, weights }
    }

    /// Mass of atoms or cells strictly farther than `radius` from `center`.
    pub fn mass_outside_ball(&self, center: &Point, radius: f64) -> Result<f64> {
        if !(radius >= 0.0) {
            return Err(domain(format!("radius must be >= 0, got {radius}")));
        }
        let mut outside = 0.0;
        for (p, m) in self.atoms() {
            if p.dim() != center.dim() {
                return Err(structural("center dimension does not match measure"));
            }
            if p.distance(center) > radius {
                outside += m;
            }
        }
        Ok(outside)
    }

    /// Draws `count` support indices with probability proportional to mass.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Result<Vec<usize>> {
        let masses = self.masses();
        if masses.iter().any(|m| *m < 0.0) {
            return Err(domain("cannot sample from a signed measure"));
        }
        let index = WeightedIndex::new(&masses)
            .map_err(|e| domain(format!("cannot sample from measure: {e}")))?;
        Ok((0..count).map(|_| index.sample(rng)).collect())
    }
}

fn same_grid(a: &FiniteMeasure, b: &FiniteMeasure) -> bool {
    match (a, b) {
        (
            FiniteMeasure::Grid {
                grid: g1,
                cell_weights: w1,
                ..
            },
            FiniteMeasure::Grid {
                grid: g2,
                cell_weights: w2,
                ..
            },
        ) => {
            g1 == g2
                && w1.len() == w2.len()
                && w1.iter().zip(w2).all(|(a, b)| (a - b).abs() <= MASS_TOL)
        }
        _ => false,
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sums the masses of atoms within [`COINCIDENCE_TOL`] of an earlier atom.
pub(crate) fn merge_atoms(atoms: impl IntoIterator<Item = (Point, f64)>) -> (Vec<Point>, Vec<f64>) {
    let mut points: Vec<Point> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (p, m) in atoms {
        match points.iter().position(|q| q.distance(&p) < COINCIDENCE_TOL) {
            Some(i) => weights[i] += m,
            None => {
                points.push(p);
                weights.push(m);
            }
        }
    }
    (points, weights)
}

/// Sum of total masses.
pub fn total_mass(m: &FiniteMeasure) -> f64 {
    m.total_mass()
}

/// Total variation norm of `m1 - m2`: the sum of absolute signed-mass
/// differences after merging coincident atoms.
pub fn tv_distance(m1: &FiniteMeasure, m2: &FiniteMeasure) -> Result<f64> {
    match (m1, m2) {
        (FiniteMeasure::Grid { .. }, FiniteMeasure::Grid { .. }) => {
            if !same_grid(m1, m2) {
                return Err(structural("grid measures on different grids"));
            }
            Ok(m1
                .masses()
                .iter()
                .zip(m2.masses())
                .map(|(a, b)| (a - b).abs())
                .sum())
        }
        _ => {
            if let (Some(a), Some(b)) = (m1.dim(), m2.dim()) {
                if a != b {
                    return Err(structural(format!("dimension mismatch: {a} vs {b}")));
                }
            }
            let signed = m1
                .atoms()
                .map(|(p, w)| (p.clone(), w))
                .chain(m2.atoms().map(|(p, w)| (p.clone(), -w)));
            let (_, diffs) = merge_atoms(signed);
            Ok(diffs.iter().map(|d| d.abs()).sum())
        }
    }
}

/// The fixed probability measure on the input space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputMeasure {
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl InputMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(structural(format!(
                "{} input points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.is_empty() {
            return Err(structural("input measure needs at least one support point"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(domain("input weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(domain(format!("input weights sum to {total}, expected 1")));
        }
        check_common_dim(&points)?;
        Ok(InputMeasure { points, weights })
    }

    /// Equal weight on every point.
    pub fn uniform(points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        InputMeasure::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Same support (exactly) and weights within [`MASS_TOL`].
    pub fn matches(&self, other: &InputMeasure) -> bool {
        self.points == other.points
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= MASS_TOL)
    }
}
