//! Stochastic kernels over a finitely supported input measure, and the
//! partition-constant test functions they are paired against.
//!
//! Measurable subsets of the input space are index sets into the support of
//! the input measure. Every pairing is a `μ`-weighted finite sum over that
//! support and is evaluated in support order.

use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::measure::{FiniteMeasure, InputMeasure, Point};
use crate::rkhs::{KernelExpansion, KernelSpec};

/// A map from input support points to measures on the output space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct StochasticKernel {
    input: InputMeasure,
    rows: Vec<FiniteMeasure>,
    allow_sub_probability: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct KernelRepr {
    input_weights: Vec<f64>,
    input_points: Vec<Point>,
    rows: Vec<FiniteMeasure>,
    #[serde(default)]
    allow_sub_probability: bool,
}

impl TryFrom<KernelRepr> for StochasticKernel {
    type Error = Error;

    fn try_from(r: KernelRepr) -> Result<Self> {
        let input = InputMeasure::new(r.input_points, r.input_weights)?;
        StochasticKernel::with_options(input, r.rows, r.allow_sub_probability)
    }
}

impl From<StochasticKernel> for KernelRepr {
    fn from(k: StochasticKernel) -> Self {
        KernelRepr {
            input_weights: k.input.weights().to_vec(),
            input_points: k.input.points().to_vec(),
            rows: k.rows,
            allow_sub_probability: k.allow_sub_probability,
        }
    }
}

impl StochasticKernel {
    /// A kernel whose rows are all probability measures.
    pub fn new(input: InputMeasure, rows: Vec<FiniteMeasure>) -> Result<Self> {
        StochasticKernel::with_options(input, rows, false)
    }

    /// A kernel whose rows may be sub-probability measures, as needed for
    /// limits that lose mass.
    pub fn sub_probability(input: InputMeasure, rows: Vec<FiniteMeasure>) -> Result<Self> {
        StochasticKernel::with_options(input, rows, true)
    }

    pub fn with_options(
        input: InputMeasure,
        rows: Vec<FiniteMeasure>,
        allow_sub_probability: bool,
    ) -> Result<Self> {
        if rows.len() != input.len() {
            return Err(structural(format!(
                "{} rows for an input measure with {} support points",
                rows.len(),
                input.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            let ok = if allow_sub_probability {
                row.is_sub_probability()
            } else {
                row.is_probability()
            };
            if !ok {
                let kind = if allow_sub_probability {
                    "sub-probability"
                } else {
                    "probability"
                };
                return Err(domain(format!(
                    "row {i} (mass {}) is not a {kind} measure",
                    row.total_mass()
                )));
            }
        }
        Ok(StochasticKernel {
            input,
            rows,
            allow_sub_probability,
        })
    }

    /// The same row at every input point.
    pub fn constant(input: InputMeasure, row: FiniteMeasure) -> Result<Self> {
        let rows = vec![row; input.len()];
        StochasticKernel::new(input, rows)
    }

    pub fn input(&self) -> &InputMeasure {
        &self.input
    }

    pub fn rows(&self) -> &[FiniteMeasure] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &FiniteMeasure {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn allows_sub_probability(&self) -> bool {
        self.allow_sub_probability
    }

    /// True when every row is a probability measure, whatever the flag says.
    pub fn is_probability_kernel(&self) -> bool {
        self.rows.iter().all(FiniteMeasure::is_probability)
    }

    /// Same rows under a different input measure over the same support.
    pub(crate) fn with_input(&self, input: InputMeasure) -> Result<Self> {
        StochasticKernel::with_options(input, self.rows.clone(), self.allow_sub_probability)
    }

    pub(crate) fn check_same_input(&self, other: &StochasticKernel) -> Result<()> {
        if !self.input.matches(&other.input) {
            return Err(structural(
                "stochastic kernels over different input measures",
            ));
        }
        Ok(())
    }
}

/// Maps each support index to its partition cell, checking that the cells
/// are disjoint and cover `0..n`.
pub fn cell_assignment(partition: &[Vec<usize>], n: usize) -> Result<Vec<usize>> {
    let mut cell_of = vec![usize::MAX; n];
    for (c, cell) in partition.iter().enumerate() {
        for &i in cell {
            if i >= n {
                return Err(structural(format!("index {i} outside support of size {n}")));
            }
            if cell_of[i] != usize::MAX {
                return Err(structural(format!(
                    "index {i} appears in two partition cells"
                )));
            }
            cell_of[i] = c;
        }
    }
    if let Some(i) = cell_of.iter().position(|&c| c == usize::MAX) {
        return Err(structural(format!(
            "index {i} is not covered by the partition"
        )));
    }
    Ok(cell_of)
}

/// Splits `0..n` into contiguous blocks starting at each breakpoint.
pub fn contiguous_partition(n: usize, breakpoints: &[usize]) -> Vec<Vec<usize>> {
    let mut cuts: Vec<usize> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > 0 && b < n)
        .collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for b in cuts.into_iter().chain(std::iter::once(n)) {
        out.push((start..b).collect());
        start = b;
    }
    out
}

/// An RKHS-valued simple function `f = Σ_c h_c 1_{E_c}` on the input support.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    partition: Vec<Vec<usize>>,
    sections: Vec<KernelExpansion>,
    cell_of: Vec<usize>,
}

impl TestFunction {
    pub fn new(
        partition: Vec<Vec<usize>>,
        sections: Vec<KernelExpansion>,
        support_len: usize,
    ) -> Result<Self> {
        if partition.len() != sections.len() {
            return Err(structural("one section is required per partition cell"));
        }
        let cell_of = cell_assignment(&partition, support_len)?;
        Ok(TestFunction {
            partition,
            sections,
            cell_of,
        })
    }

    /// The same section on the whole input space.
    pub fn uniform(section: KernelExpansion, support_len: usize) -> Result<Self> {
        TestFunction::new(vec![(0..support_len).collect()], vec![section], support_len)
    }

    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn sections(&self) -> &[KernelExpansion] {
        &self.sections
    }

    pub fn section_at(&self, i: usize) -> &KernelExpansion {
        &self.sections[self.cell_of[i]]
    }

    pub fn support_len(&self) -> usize {
        self.cell_of.len()
    }

    /// `max_c |h_c|_{H_k}`.
    pub fn max_section_norm(&self, spec: &KernelSpec) -> Result<f64> {
        self.sections
            .iter()
            .try_fold(0.0f64, |acc, h| Ok(acc.max(h.rkhs_norm(spec)?)))
    }

    /// Multiplies the section seen at support index `i` by `weights[i]`.
    /// The result has one cell per support point.
    pub fn pointwise_scaled(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.support_len() {
            return Err(structural("scaling weights do not match the support"));
        }
        let n = weights.len();
        let sections = (0..n)
            .map(|i| self.section_at(i).scaled(weights[i]))
            .collect();
        TestFunction::new((0..n).map(|i| vec![i]).collect(), sections, n)
    }
}

/// A real-valued section of a Caratheodory test function.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarSection {
    /// A kernel expansion, which vanishes at infinity.
    Kernel(KernelExpansion),
    /// A kernel expansion shifted by a constant: bounded but not vanishing.
    KernelPlusConstant {
        expansion: KernelExpansion,
        constant: f64,
    },
    /// The constant function 1.
    ConstantOne,
}

impl ScalarSection {
    pub fn is_c0(&self) -> bool {
        matches!(self, ScalarSection::Kernel(_))
    }

    /// `∫ s dν` for a finite measure `ν`.
    pub fn integrate(&self, spec: &KernelSpec, m: &FiniteMeasure) -> f64 {
        match self {
            ScalarSection::Kernel(h) => h.integrate(spec, m),
            ScalarSection::KernelPlusConstant {
                expansion,
                constant,
            } => expansion.integrate(spec, m) + constant * m.total_mass(),
            ScalarSection::ConstantOne => m.total_mass(),
        }
    }

    fn points(&self) -> &[Point] {
        match self {
            ScalarSection::Kernel(h) => &h.points,
            ScalarSection::KernelPlusConstant { expansion, .. } => &expansion.points,
            ScalarSection::ConstantOne => &[],
        }
    }
}

/// A real-valued simple Caratheodory function on input × output.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTestFunction {
    partition: Vec<Vec<usize>>,
    sections: Vec<ScalarSection>,
    cell_of: Vec<usize>,
}

impl ScalarTestFunction {
    pub fn new(
        partition: Vec<Vec<usize>>,
        sections: Vec<ScalarSection>,
        support_len: usize,
    ) -> Result<Self> {
        if partition.len() != sections.len() {
            return Err(structural("one section is required per partition cell"));
        }
        let cell_of = cell_assignment(&partition, support_len)?;
        Ok(ScalarTestFunction {
            partition,
            sections,
            cell_of,
        })
    }

    pub fn uniform(section: ScalarSection, support_len: usize) -> Result<Self> {
        ScalarTestFunction::new(vec![(0..support_len).collect()], vec![section], support_len)
    }

    /// The constant function 1 on input × output.
    pub fn constant_one(support_len: usize) -> Result<Self> {
        ScalarTestFunction::uniform(ScalarSection::ConstantOne, support_len)
    }

    /// The scalar function `(y, u) ↦ f(y)(u)` of an RKHS-valued test function.
    pub fn from_rkhs(f: &TestFunction) -> Self {
        ScalarTestFunction {
            partition: f.partition.clone(),
            sections: f
                .sections
                .iter()
                .cloned()
                .map(ScalarSection::Kernel)
                .collect(),
            cell_of: f.cell_of.clone(),
        }
    }

    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn sections(&self) -> &[ScalarSection] {
        &self.sections
    }

    pub fn support_len(&self) -> usize {
        self.cell_of.len()
    }

    /// Every section vanishes at infinity.
    pub fn is_c0(&self) -> bool {
        self.sections.iter().all(ScalarSection::is_c0)
    }

    pub fn is_constant_one(&self) -> bool {
        self.sections
            .iter()
            .all(|s| matches!(s, ScalarSection::ConstantOne))
    }
}

fn check_support(gamma: &StochasticKernel, support_len: usize) -> Result<()> {
    if support_len != gamma.len() {
        return Err(structural(format!(
            "test function defined on {support_len} input points, kernel on {}",
            gamma.len()
        )));
    }
    Ok(())
}

/// `μ ⊗ γ(E × ·) = Σ_{i ∈ E} μ_i γ(y_i)`.
pub fn marginal_on_set(gamma: &StochasticKernel, cell: &[usize]) -> Result<FiniteMeasure> {
    let mut indices = cell.to_vec();
    indices.sort_unstable();
    indices.dedup();
    if let Some(&bad) = indices.iter().find(|&&i| i >= gamma.len()) {
        return Err(structural(format!(
            "index {bad} outside support of size {}",
            gamma.len()
        )));
    }
    let weights = gamma.input.weights();
    let mut acc: Option<FiniteMeasure> = None;
    for i in indices {
        let term = gamma.rows[i].scaled(weights[i]);
        acc = Some(match acc {
            None => term,
            Some(a) => a.plus(&term)?,
        });
    }
    Ok(acc.unwrap_or_else(FiniteMeasure::zero))
}

/// `<<γ, f>> = ∫ <I∘γ(y), f(y)>_{H_k} μ(dy)`.
pub fn duality_pairing(
    gamma: &StochasticKernel,
    f: &TestFunction,
    spec: &KernelSpec,
) -> Result<f64> {
    check_support(gamma, f.support_len())?;
    for h in &f.sections {
        spec.check_all(&h.points)?;
    }
    for row in &gamma.rows {
        spec.check_all(row.points())?;
    }
    let mut total = 0.0;
    for (i, (row, mu)) in gamma.rows.iter().zip(gamma.input.weights()).enumerate() {
        total += mu * f.section_at(i).integrate(spec, row);
    }
    Ok(total)
}

/// `∫∫ f(y)(u) γ(y)(du) μ(dy)` for a scalar simple function.
pub fn scalar_pairing(
    gamma: &StochasticKernel,
    f: &ScalarTestFunction,
    spec: &KernelSpec,
) -> Result<f64> {
    check_support(gamma, f.support_len())?;
    for s in &f.sections {
        spec.check_all(s.points())?;
    }
    for row in &gamma.rows {
        spec.check_all(row.points())?;
    }
    let mut total = 0.0;
    for (i, (row, mu)) in gamma.rows.iter().zip(gamma.input.weights()).enumerate() {
        total += mu * f.sections[f.cell_of[i]].integrate(spec, row);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(x: f64) -> FiniteMeasure {
        FiniteMeasure::dirac(Point::scalar(x))
    }

    fn two_point() -> StochasticKernel {
        let input = InputMeasure::new(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![0.5, 0.5])
            .unwrap();
        StochasticKernel::new(input, vec![dirac(0.0), dirac(1.0)]).unwrap()
    }

    fn g1() -> KernelSpec {
        KernelSpec::gaussian(1.0, 1).unwrap()
    }

    #[test]
    fn rejects_non_probability_rows() {
        let input = InputMeasure::uniform(vec![Point::scalar(0.0)]).unwrap();
        assert!(StochasticKernel::new(input.clone(), vec![FiniteMeasure::zero()]).is_err());
        assert!(
            StochasticKernel::sub_probability(input.clone(), vec![FiniteMeasure::zero()]).is_ok()
        );
        assert!(StochasticKernel::new(input, vec![dirac(0.0), dirac(1.0)]).is_err());
    }

    #[test]
    fn marginal_examples() {
        let input = InputMeasure::uniform(vec![Point::scalar(0.0), Point::scalar(1.0)]).unwrap();
        let nu = FiniteMeasure::atomic(
            vec![Point::scalar(-1.0), Point::scalar(2.0)],
            vec![0.25, 0.75],
        )
        .unwrap();
        let constant = StochasticKernel::constant(input, nu.clone()).unwrap();
        let full = marginal_on_set(&constant, &[0, 1]).unwrap();
        assert_eq!(crate::measure::tv_distance(&full, &nu).unwrap(), 0.0);

        let gamma = two_point();
        assert_eq!(marginal_on_set(&gamma, &[]).unwrap().total_mass(), 0.0);
        let left = marginal_on_set(&gamma, &[0]).unwrap();
        assert_eq!(left, dirac(0.0).scaled(0.5));
        assert!(matches!(
            marginal_on_set(&gamma, &[2]),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn duality_pairing_examples() {
        let k = g1();
        let input = InputMeasure::uniform(vec![Point::scalar(0.0)]).unwrap();
        let u0 = Point::scalar(0.7);
        let gamma = StochasticKernel::constant(input, FiniteMeasure::dirac(u0.clone())).unwrap();
        let f = TestFunction::uniform(KernelExpansion::feature(u0.clone()), 1).unwrap();
        assert_eq!(duality_pairing(&gamma, &f, &k).unwrap(), 1.0);

        let zero =
            TestFunction::uniform(KernelExpansion::new(vec![u0], vec![0.0]).unwrap(), 1).unwrap();
        assert_eq!(duality_pairing(&gamma, &zero, &k).unwrap(), 0.0);

        let f0 = TestFunction::uniform(KernelExpansion::feature(Point::scalar(0.0)), 2).unwrap();
        let v = duality_pairing(&two_point(), &f0, &k).unwrap();
        assert!((v - 0.5 * (1.0 + (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn scalar_pairing_examples() {
        let k = g1();
        let one = ScalarTestFunction::constant_one(2).unwrap();
        assert_eq!(scalar_pairing(&two_point(), &one, &k).unwrap(), 1.0);

        let input = InputMeasure::uniform(vec![Point::scalar(0.0), Point::scalar(1.0)]).unwrap();
        let empty = StochasticKernel::sub_probability(
            input,
            vec![FiniteMeasure::zero(), FiniteMeasure::zero()],
        )
        .unwrap();
        assert_eq!(scalar_pairing(&empty, &one, &k).unwrap(), 0.0);

        let single = StochasticKernel::new(
            InputMeasure::uniform(vec![Point::scalar(0.0)]).unwrap(),
            vec![dirac(1.0)],
        )
        .unwrap();
        let f = ScalarTestFunction::uniform(
            ScalarSection::Kernel(KernelExpansion::feature(Point::scalar(0.0))),
            1,
        )
        .unwrap();
        let v = scalar_pairing(&single, &f, &k).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn partition_validation() {
        assert!(cell_assignment(&[vec![0], vec![0, 1]], 2).is_err());
        assert!(cell_assignment(&[vec![0]], 2).is_err());
        assert!(cell_assignment(&[vec![0, 3]], 2).is_err());
        assert_eq!(cell_assignment(&[vec![1], vec![0]], 2).unwrap(), vec![1, 0]);
        let h = KernelExpansion::feature(Point::scalar(0.0));
        assert!(TestFunction::new(vec![vec![0, 1]], vec![h.clone(), h], 2).is_err());
    }

    #[test]
    fn contiguous_blocks() {
        assert_eq!(
            contiguous_partition(5, &[2]),
            vec![vec![0, 1], vec![2, 3, 4]]
        );
        assert_eq!(contiguous_partition(3, &[0, 3, 9]), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn mismatched_support_is_structural() {
        let f = TestFunction::uniform(KernelExpansion::feature(Point::scalar(0.0)), 3).unwrap();
        assert!(matches!(
            duality_pairing(&two_point(), &f, &g1()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn kernel_json_roundtrip() {
        let gamma = two_point();
        let s = serde_json::to_string(&gamma).unwrap();
        assert!(s.starts_with(r#"{"inputWeights":[0.5,0.5],"inputPoints":[[0.0],[1.0]],"rows":"#));
        assert!(s.ends_with(r#""allowSubProbability":false}"#));
        let back: StochasticKernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, gamma);
    }

    #[test]
    fn pointwise_scaling_absorbs_weights() {
        let k = g1();
        let gamma = two_point();
        let f = TestFunction::uniform(KernelExpansion::feature(Point::scalar(0.5)), 2).unwrap();
        let scaled = f.pointwise_scaled(&[2.0, 0.0]).unwrap();
        let want = 0.5 * 2.0 * (-0.125f64).exp();
        assert!((duality_pairing(&gamma, &scaled, &k).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn section_norms() {
        let k = g1();
        let f = TestFunction::new(
            vec![vec![0], vec![1]],
            vec![
                KernelExpansion::feature(Point::scalar(0.0)),
                KernelExpansion::new(vec![Point::scalar(0.0)], vec![3.0]).unwrap(),
            ],
            2,
        )
        .unwrap();
        assert!((f.max_section_norm(&k).unwrap() - 3.0).abs() < 1e-15);
    }
}
