//! Bounded translation-invariant kernels, kernel mean embeddings, and the MMD
//! inner product and norm between finite measures.
//!
//! For a finitely supported measure `ν = Σ w_i δ_{u_i}` the embedding is the
//! RKHS function `Σ w_i k(·, u_i)`, so every inner product between embeddings
//! is a Gram double sum. Sums run in row-major order and are never reordered,
//! which keeps results bit-stable from run to run.

use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::measure::{merge_atoms, FiniteMeasure, Point, COINCIDENCE_TOL};

/// Quadratic forms above `-PSD_TOL` are roundoff and clamp to zero.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    /// `exp(-|u - v|_2^2 / (2 σ^2))`
    Gaussian,
    /// `exp(-|u - v|_1 / σ)`
    Laplacian,
}

/// A kernel family with its bandwidth and the dimension of the output space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecRepr", into = "KernelSpecRepr")]
pub struct KernelSpec {
    family: KernelFamily,
    sigma: f64,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelSpecRepr {
    family: KernelFamily,
    sigma: f64,
    dim: usize,
}

impl TryFrom<KernelSpecRepr> for KernelSpec {
    type Error = Error;

    fn try_from(r: KernelSpecRepr) -> Result<Self> {
        KernelSpec::new(r.family, r.sigma, r.dim)
    }
}

impl From<KernelSpec> for KernelSpecRepr {
    fn from(k: KernelSpec) -> Self {
        KernelSpecRepr {
            family: k.family,
            sigma: k.sigma,
            dim: k.dim,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("bandwidth must be positive, got {sigma}")));
        }
        if dim == 0 {
            return Err(domain("kernel dimension must be >= 1"));
        }
        Ok(KernelSpec { family, sigma, dim })
    }

    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        KernelSpec::new(KernelFamily::Gaussian, sigma, dim)
    }

    pub fn laplacian(sigma: f64, dim: usize) -> Result<Self> {
        KernelSpec::new(KernelFamily::Laplacian, sigma, dim)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(structural(format!(
                "point of dimension {} for a kernel on dimension {}",
                p.dim(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Kernel value without dimension checks; callers validate first.
    pub(crate) fn raw(&self, u: &Point, v: &Point) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-u.sq_distance(v) / (2.0 * self.sigma * self.sigma)).exp(),
            KernelFamily::Laplacian => (-u.l1_distance(v) / self.sigma).exp(),
        }
    }

    pub fn eval(&self, u: &Point, v: &Point) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.raw(u, v))
    }

    pub(crate) fn check_all<'a>(&self, points: impl IntoIterator<Item = &'a Point>) -> Result<()> {
        points.into_iter().try_for_each(|p| self.check(p))
    }
}

pub fn kernel_eval(spec: &KernelSpec, u: &Point, v: &Point) -> Result<f64> {
    spec.eval(u, v)
}

/// `sup_u sqrt(k(u, u))`; both families have `k(u, u) = 1`.
pub fn kernel_bound(spec: &KernelSpec) -> f64 {
    match spec.family {
        KernelFamily::Gaussian | KernelFamily::Laplacian => 1.0,
    }
}

/// Row-major Gram matrix `K[i * n + j] = k(p_i, p_j)`.
pub fn gram_matrix(spec: &KernelSpec, points: &[Point]) -> Result<Vec<f64>> {
    spec.check_all(points)?;
    let n = points.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = spec.raw(&points[i], &points[j]);
        }
    }
    Ok(gram)
}

/// `Σ_i Σ_j a_i b_j k(p_i, q_j)`, summed row by row.
fn bilinear(spec: &KernelSpec, p: &[Point], a: &[f64], q: &[Point], b: &[f64]) -> f64 {
    let mut total = 0.0;
    for (pi, ai) in p.iter().zip(a) {
        let mut row = 0.0;
        for (qj, bj) in q.iter().zip(b) {
            row += bj * spec.raw(pi, qj);
        }
        total += ai * row;
    }
    total
}

/// `wᵀ K w` for the Gram matrix of `points`.
pub fn quadratic_form(spec: &KernelSpec, points: &[Point], weights: &[f64]) -> Result<f64> {
    if points.len() != weights.len() {
        return Err(structural("points and weights differ in length"));
    }
    spec.check_all(points)?;
    Ok(bilinear(spec, points, weights, points, weights))
}

/// The MMD inner product `∬ k dm1 dm2`.
pub fn mmd_inner(spec: &KernelSpec, m1: &FiniteMeasure, m2: &FiniteMeasure) -> Result<f64> {
    spec.check_all(m1.points())?;
    spec.check_all(m2.points())?;
    Ok(bilinear(
        spec,
        m1.points(),
        &m1.masses(),
        m2.points(),
        &m2.masses(),
    ))
}

/// Support and masses of `m1 - m2`, with coincident atoms merged.
pub(crate) fn signed_difference(m1: &FiniteMeasure, m2: &FiniteMeasure) -> (Vec<Point>, Vec<f64>) {
    if let (
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
    ) = (m1, m2)
    {
        if g1 == g2 && w1 == w2 {
            let diff = m1
                .masses()
                .iter()
                .zip(m2.masses())
                .map(|(a, b)| a - b)
                .collect();
            return (g1.clone(), diff);
        }
    }
    // Merge each side before subtracting and sort the support, so that
    // swapping the arguments negates every mass exactly and keeps the order.
    let (mut points, mut weights) = merge_atoms(m1.atoms().map(|(p, w)| (p.clone(), w)));
    let (p2, w2) = merge_atoms(m2.atoms().map(|(p, w)| (p.clone(), w)));
    for (p, w) in p2.into_iter().zip(w2) {
        match points.iter().position(|q| q.distance(&p) < COINCIDENCE_TOL) {
            Some(i) => weights[i] -= w,
            None => {
                points.push(p);
                weights.push(-w);
            }
        }
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| {
        points[i]
            .coords()
            .iter()
            .zip(points[j].coords())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    (
        order.iter().map(|&i| points[i].clone()).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    )
}

/// `sqrt(<m, m>)` with roundoff clamping, erroring on a genuinely negative form.
pub(crate) fn norm_from_form(form: f64) -> Result<f64> {
    if form < -PSD_TOL {
        return Err(Error::Numerical(format!(
            "MMD quadratic form is {form:e}; the Gram matrix is not PSD within tolerance"
        )));
    }
    Ok(form.max(0.0).sqrt())
}

/// The MMD norm `|m1 - m2|_M`.
///
/// The quadratic form `<m1,m1> - 2<m1,m2> + <m2,m2>` is evaluated directly on
/// the merged signed measure `m1 - m2`, which is algebraically identical and
/// avoids cancellation between the three terms.
pub fn mmd_norm(spec: &KernelSpec, m1: &FiniteMeasure, m2: &FiniteMeasure) -> Result<f64> {
    spec.check_all(m1.points())?;
    spec.check_all(m2.points())?;
    let (points, weights) = signed_difference(m1, m2);
    norm_from_form(bilinear(spec, &points, &weights, &points, &weights))
}

/// A finite RKHS element `h = Σ_i α_i k(·, u_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelExpansion {
    pub points: Vec<Point>,
    pub alphas: Vec<f64>,
}

impl KernelExpansion {
    pub fn new(points: Vec<Point>, alphas: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(structural("a kernel expansion needs at least one term"));
        }
        if points.len() != alphas.len() {
            return Err(structural(
                "expansion points and coefficients differ in length",
            ));
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(domain("expansion coefficients must be finite"));
        }
        Ok(KernelExpansion { points, alphas })
    }

    /// The canonical feature `k(·, u)`.
    pub fn feature(u: Point) -> Self {
        KernelExpansion {
            points: vec![u],
            alphas: vec![1.0],
        }
    }

    pub fn eval(&self, spec: &KernelSpec, u: &Point) -> f64 {
        self.points
            .iter()
            .zip(&self.alphas)
            .map(|(p, a)| a * spec.raw(p, u))
            .sum()
    }

    /// `∫ h dν`, which equals `<I_ν, h>` by the reproducing property.
    pub fn integrate(&self, spec: &KernelSpec, m: &FiniteMeasure) -> f64 {
        bilinear(spec, &self.points, &self.alphas, m.points(), &m.masses())
    }

    pub fn rkhs_norm(&self, spec: &KernelSpec) -> Result<f64> {
        norm_from_form(quadratic_form(spec, &self.points, &self.alphas)?)
    }

    /// The coefficients read as the signed measure `Σ α_i δ_{u_i}`.
    pub fn to_measure(&self) -> FiniteMeasure {
        FiniteMeasure::Atomic {
            atoms: self.points.clone(),
            weights: self.alphas.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        KernelExpansion {
            points: self.points.clone(),
            alphas: self.alphas.iter().map(|a| a * factor).collect(),
        }
    }
}

/// The embedding `I_ν` of a finite measure, kept implicitly as the measure's
/// atoms together with the kernel.
#[derive(Debug, Clone)]
pub struct Embedding {
    spec: KernelSpec,
    points: Vec<Point>,
    weights: Vec<f64>,
}

impl Embedding {
    pub fn new(spec: KernelSpec, m: &FiniteMeasure) -> Result<Self> {
        spec.check_all(m.points())?;
        Ok(Embedding {
            spec,
            points: m.points().to_vec(),
            weights: m.masses(),
        })
    }

    /// `I_ν(u) = Σ_i w_i k(u, u_i)`.
    pub fn eval(&self, u: &Point) -> Result<f64> {
        self.spec.check(u)?;
        Ok(self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * self.spec.raw(p, u))
            .sum())
    }

    pub fn inner(&self, other: &Embedding) -> Result<f64> {
        if self.spec != other.spec {
            return Err(structural("embeddings built with different kernels"));
        }
        Ok(bilinear(
            &self.spec,
            &self.points,
            &self.weights,
            &other.points,
            &other.weights,
        ))
    }

    pub fn norm(&self) -> Result<f64> {
        norm_from_form(self.inner(self)?)
    }
}
