//! Distances and convergence diagnostics for stochastic kernels.
//!
//! The strong distance is the `L_q(μ)` norm of the row-wise MMD. The three
//! weak notions (kernel mean embedding, w*, Young narrow) are each probed by
//! pairing gaps against a finite test family; a verdict is relative to the
//! family and the seed that generated it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{domain, structural, Error, Result};
use crate::measure::{InputMeasure, Point};
use crate::rkhs::{mmd_norm, KernelExpansion, KernelSpec};
use crate::stochastic::{
    contiguous_partition, duality_pairing, scalar_pairing, ScalarSection, ScalarTestFunction,
    StochasticKernel, TestFunction,
};

/// Default verdict tolerance.
pub const DEFAULT_TOL: f64 = 1e-3;

/// Integrability exponent of the strong distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

/// `|γ1 - γ2|_{L_q(μ, H_k)}`. For `q = ∞` the essential supremum is the max
/// over support points of positive `μ`-weight.
pub fn strong_kme_distance(
    g1: &StochasticKernel,
    g2: &StochasticKernel,
    spec: &KernelSpec,
    q: Exponent,
) -> Result<f64> {
    g1.check_same_input(g2)?;
    let weights = g1.input().weights();
    let mut row_dist = Vec::with_capacity(g1.len());
    for (r1, r2) in g1.rows().iter().zip(g2.rows()) {
        row_dist.push(mmd_norm(spec, r1, r2)?);
    }
    match q {
        Exponent::Finite(q) => {
            if !(q >= 1.0) || !q.is_finite() {
                return Err(domain(format!("exponent must lie in [1, inf], got {q}")));
            }
            let sum: f64 = row_dist
                .iter()
                .zip(weights)
                .map(|(d, w)| w * d.powf(q))
                .sum();
            Ok(sum.powf(1.0 / q))
        }
        Exponent::Infinity => Ok(row_dist
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(d, _)| *d)
            .fold(0.0, f64::max)),
    }
}

/// `|<<γ1, f>> - <<γ2, f>>|` for every `f` in the family.
pub fn weak_kme_defect(
    g1: &StochasticKernel,
    g2: &StochasticKernel,
    family: &[TestFunction],
    spec: &KernelSpec,
) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(domain("test family is empty"));
    }
    g1.check_same_input(g2)?;
    family
        .iter()
        .map(|f| Ok((duality_pairing(g1, f, spec)? - duality_pairing(g2, f, spec)?).abs()))
        .collect()
}

fn scalar_defects(
    g1: &StochasticKernel,
    g2: &StochasticKernel,
    family: &[ScalarTestFunction],
    spec: &KernelSpec,
) -> Result<Vec<f64>> {
    if family.is_empty() {
        return Err(domain("test family is empty"));
    }
    g1.check_same_input(g2)?;
    family
        .iter()
        .map(|f| Ok((scalar_pairing(g1, f, spec)? - scalar_pairing(g2, f, spec)?).abs()))
        .collect()
}

/// Pairing gaps against functions vanishing at infinity in the output.
pub fn wstar_defect(
    g1: &StochasticKernel,
    g2: &StochasticKernel,
    family: &[ScalarTestFunction],
    spec: &KernelSpec,
) -> Result<Vec<f64>> {
    if let Some(i) = family.iter().position(|f| !f.is_c0()) {
        return Err(structural(format!(
            "w* family member {i} has a section that does not vanish at infinity"
        )));
    }
    scalar_defects(g1, g2, family, spec)
}

/// Pairing gaps against bounded continuous sections. The family must contain
/// the constant function 1, whose gap is the difference in total mass.
pub fn young_defect(
    g1: &StochasticKernel,
    g2: &StochasticKernel,
    family: &[ScalarTestFunction],
    spec: &KernelSpec,
) -> Result<Vec<f64>> {
    if !family.iter().any(ScalarTestFunction::is_constant_one) {
        return Err(domain("Young family must contain the constant-1 function"));
    }
    scalar_defects(g1, g2, family, spec)
}

/// Worst-case row mass farther than `radius` from the origin.
pub fn tightness_defect(g: &StochasticKernel, radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(domain(format!("radius must be >= 0, got {radius}")));
    }
    let mut worst = 0.0f64;
    for row in g.rows() {
        if let Some(d) = row.dim() {
            worst = worst.max(row.mass_outside_ball(&Point::origin(d), radius)?);
        }
    }
    Ok(worst)
}

/// Moves the kernel to the input measure `η = density · μ`.
pub fn change_input_measure(g: &StochasticKernel, density: &[f64]) -> Result<StochasticKernel> {
    let mu = g.input();
    if density.len() != mu.len() {
        return Err(structural(format!(
            "density has {} entries for {} support points",
            density.len(),
            mu.len()
        )));
    }
    if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(domain("density values must be finite and nonnegative"));
    }
    let weights: Vec<f64> = density
        .iter()
        .zip(mu.weights())
        .map(|(d, w)| d * w)
        .collect();
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(domain(format!(
            "density integrates to {total} against the input measure, expected 1"
        )));
    }
    let weights = weights.into_iter().map(|w| w / total).collect();
    g.with_input(InputMeasure::new(mu.points().to_vec(), weights)?)
}

/// Parameters for a seeded random test family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyConfig {
    pub seed: u64,
    /// Number of random unit-norm kernel expansions.
    pub expansions: usize,
    /// Number of random two-block contiguous partitions of the input support.
    pub partitions: usize,
    /// Maximum number of terms per expansion.
    pub max_terms: usize,
    /// Lower corner of the box the expansion centers are drawn from.
    pub center_lo: Vec<f64>,
    /// Upper corner of that box.
    pub center_hi: Vec<f64>,
}

impl FamilyConfig {
    /// 8 expansions × 2 partitions, centers in `[lo, hi]^d`.
    pub fn new(seed: u64, dim: usize, lo: f64, hi: f64) -> Self {
        FamilyConfig {
            seed,
            expansions: 8,
            partitions: 2,
            max_terms: 3,
            center_lo: vec![lo; dim],
            center_hi: vec![hi; dim],
        }
    }
}

/// Matched test families for the three weak topologies.
///
/// The w* family is the kme family read as scalar functions. The Young family
/// adds, for each of those, a copy shifted by a random constant, plus the
/// constant function 1.
#[derive(Debug, Clone)]
pub struct TestFamilies {
    pub kme: Vec<TestFunction>,
    pub wstar: Vec<ScalarTestFunction>,
    pub young: Vec<ScalarTestFunction>,
    pub seed: Option<u64>,
}

impl TestFamilies {
    pub fn from_kme(kme: Vec<TestFunction>, seed: Option<u64>) -> Result<Self> {
        let n = kme
            .first()
            .map(TestFunction::support_len)
            .ok_or_else(|| domain("test family is empty"))?;
        let wstar: Vec<ScalarTestFunction> =
            kme.iter().map(ScalarTestFunction::from_rkhs).collect();
        let mut young = wstar.clone();
        young.push(ScalarTestFunction::constant_one(n)?);
        Ok(TestFamilies {
            kme,
            wstar,
            young,
            seed,
        })
    }

    pub fn random(spec: &KernelSpec, support_len: usize, cfg: &FamilyConfig) -> Result<Self> {
        if cfg.expansions == 0 || cfg.partitions == 0 || cfg.max_terms == 0 {
            return Err(domain("family sizes must be positive"));
        }
        if cfg.center_lo.len() != spec.dim() || cfg.center_hi.len() != spec.dim() {
            return Err(structural("center box dimension does not match the kernel"));
        }
        if support_len == 0 {
            return Err(domain("input support is empty"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut expansions = Vec::with_capacity(cfg.expansions);
        for _ in 0..cfg.expansions {
            let terms = rng.gen_range(1..=cfg.max_terms);
            let mut points = Vec::with_capacity(terms);
            let mut alphas = Vec::with_capacity(terms);
            for _ in 0..terms {
                let coords = cfg
                    .center_lo
                    .iter()
                    .zip(&cfg.center_hi)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.gen::<f64>())
                    .collect();
                points.push(Point::new(coords)?);
                alphas.push(rng.sample::<f64, _>(StandardNormal));
            }
            let h = KernelExpansion::new(points, alphas)?;
            let norm = h.rkhs_norm(spec)?;
            expansions.push(if norm > 0.0 { h.scaled(1.0 / norm) } else { h });
        }
        let mut kme = Vec::with_capacity(cfg.expansions * cfg.partitions);
        let mut shifts = Vec::with_capacity(kme.capacity());
        for _ in 0..cfg.partitions {
            let cut = if support_len > 1 {
                rng.gen_range(1..support_len)
            } else {
                0
            };
            let partition = contiguous_partition(support_len, &[cut]);
            for i in 0..cfg.expansions {
                let sections: Vec<KernelExpansion> = (0..partition.len())
                    .map(|c| expansions[(i + c) % expansions.len()].clone())
                    .collect();
                let consts: Vec<f64> = (0..partition.len())
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                shifts.push(ScalarTestFunction::new(
                    partition.clone(),
                    sections
                        .iter()
                        .cloned()
                        .zip(consts)
                        .map(|(expansion, constant)| ScalarSection::KernelPlusConstant {
                            expansion,
                            constant,
                        })
                        .collect(),
                    support_len,
                )?);
                kme.push(TestFunction::new(partition.clone(), sections, support_len)?);
            }
        }
        let mut families = TestFamilies::from_kme(kme, Some(cfg.seed))?;
        let one = families.young.pop().expect("constant-1 member");
        families.young.extend(shifts);
        families.young.push(one);
        Ok(families)
    }

    /// `max_f max_c |h_c|_{H_k}` over the kme family.
    pub fn max_section_norm(&self, spec: &KernelSpec) -> Result<f64> {
        self.kme
            .iter()
            .try_fold(0.0f64, |acc, f| Ok(acc.max(f.max_section_norm(spec)?)))
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportOptions {
    pub tol: f64,
    pub tightness_radius: f64,
    /// Permit a sub-probability limit. The three weak verdicts then need not
    /// agree, which is the point of such runs.
    pub allow_sub_probability_limit: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            tol: DEFAULT_TOL,
            tightness_radius: 8.0,
            allow_sub_probability_limit: false,
        }
    }
}

/// Diagnostics for one element of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexDiagnostics {
    pub n: usize,
    pub strong_q1: f64,
    pub strong_q2: f64,
    pub strong_qinf: f64,
    pub weak_defects: Vec<f64>,
    pub wstar_defects: Vec<f64>,
    pub young_defects: Vec<f64>,
    pub young_mass_gap: f64,
    pub tightness_defect: f64,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl IndexDiagnostics {
    pub fn max_weak(&self) -> f64 {
        max_of(&self.weak_defects)
    }

    pub fn max_wstar(&self) -> f64 {
        max_of(&self.wstar_defects)
    }

    pub fn max_young(&self) -> f64 {
        max_of(&self.young_defects)
    }

    pub fn verdicts(&self, tol: f64) -> Verdicts {
        Verdicts {
            weak_kme: self.max_weak() < tol,
            wstar: self.max_wstar() < tol,
            young: self.max_young() < tol,
            strong: self.strong_q2 < tol,
        }
    }
}

/// Per-topology "below tolerance" flags. `strong` uses the `q = 2` distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdicts {
    pub weak_kme: bool,
    pub wstar: bool,
    pub young: bool,
    pub strong: bool,
}

impl Verdicts {
    pub fn weak_agree(&self) -> bool {
        self.weak_kme == self.wstar && self.wstar == self.young
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    pub sequence_label: String,
    pub family_seed: Option<u64>,
    pub options: ReportOptions,
    pub per_index: Vec<IndexDiagnostics>,
    pub verdicts: Verdicts,
    pub limit_is_probability: bool,
    /// Least-squares slope of `ln max_weak_defect` against `ln n`; descriptive.
    pub weak_defect_slope: Option<f64>,
}

pub const CSV_HEADER: &str = "n,strong_q1,strong_q2,strong_qinf,max_weak_defect,max_wstar_defect,max_young_defect,young_mass_gap,tightness_defect";

/// 17 significant digits, `.` as decimal separator.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for d in &self.per_index {
            let cells = [
                d.strong_q1,
                d.strong_q2,
                d.strong_qinf,
                d.max_weak(),
                d.max_wstar(),
                d.max_young(),
                d.young_mass_gap,
                d.tightness_defect,
            ];
            out.push_str(&d.n.to_string());
            for c in cells {
                out.push(',');
                out.push_str(&fmt_real(c));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn log_log_slope(points: &[(usize, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, v)| *n > 0 && *v > 0.0)
        .map(|(n, v)| ((*n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Diagnostics of one kernel against the limit.
pub fn index_diagnostics(
    n: usize,
    gamma: &StochasticKernel,
    limit: &StochasticKernel,
    spec: &KernelSpec,
    families: &TestFamilies,
    tightness_radius: f64,
) -> Result<IndexDiagnostics> {
    let one = ScalarTestFunction::constant_one(gamma.len())?;
    let young_mass_gap =
        (scalar_pairing(gamma, &one, spec)? - scalar_pairing(limit, &one, spec)?).abs();
    Ok(IndexDiagnostics {
        n,
        strong_q1: strong_kme_distance(gamma, limit, spec, Exponent::Finite(1.0))?,
        strong_q2: strong_kme_distance(gamma, limit, spec, Exponent::Finite(2.0))?,
        strong_qinf: strong_kme_distance(gamma, limit, spec, Exponent::Infinity)?,
        weak_defects: weak_kme_defect(gamma, limit, &families.kme, spec)?,
        wstar_defects: wstar_defect(gamma, limit, &families.wstar, spec)?,
        young_defects: young_defect(gamma, limit, &families.young, spec)?,
        young_mass_gap,
        tightness_defect: tightness_defect(gamma, tightness_radius)?,
    })
}

/// Evaluates every diagnostic along `sequence` (pairs of index and kernel)
/// against `limit`. Verdicts are taken at the final index.
pub fn equivalence_report(
    label: &str,
    sequence: &[(usize, StochasticKernel)],
    limit: &StochasticKernel,
    spec: &KernelSpec,
    families: &TestFamilies,
    options: ReportOptions,
) -> Result<ConvergenceReport> {
    if sequence.is_empty() {
        return Err(domain("sequence is empty"));
    }
    if !(options.tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    let limit_is_probability = limit.is_probability_kernel();
    if !limit_is_probability && !options.allow_sub_probability_limit {
        return Err(Error::Precondition(
            "limit kernel has rows that are not probability measures; the weak topologies \
             need not agree there"
                .into(),
        ));
    }
    let per_index = sequence
        .iter()
        .map(|(n, g)| index_diagnostics(*n, g, limit, spec, families, options.tightness_radius))
        .collect::<Result<Vec<_>>>()?;
    let verdicts = per_index.last().expect("nonempty").verdicts(options.tol);
    let slope_pts: Vec<(usize, f64)> = per_index.iter().map(|d| (d.n, d.max_weak())).collect();
    Ok(ConvergenceReport {
        sequence_label: label.to_string(),
        family_seed: families.seed,
        options,
        per_index,
        verdicts,
        limit_is_probability,
        weak_defect_slope: log_log_slope(&slope_pts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::FiniteMeasure;

    fn g1() -> KernelSpec {
        KernelSpec::gaussian(1.0, 1).unwrap()
    }

    fn dirac(x: f64) -> FiniteMeasure {
        FiniteMeasure::dirac(Point::scalar(x))
    }

    fn uniform_input(n: usize) -> InputMeasure {
        InputMeasure::uniform((0..n).map(|i| Point::scalar(i as f64)).collect()).unwrap()
    }

    fn escaping_row(m: usize) -> FiniteMeasure {
        FiniteMeasure::atomic(
            (1..=m).map(|i| Point::scalar(i as f64)).collect(),
            vec![1.0 / m as f64; m],
        )
        .unwrap()
    }

    #[test]
    fn strong_distance_examples() {
        let k = g1();
        let a = StochasticKernel::constant(uniform_input(3), dirac(0.0)).unwrap();
        let b = StochasticKernel::constant(uniform_input(3), dirac(1.0)).unwrap();
        for q in [
            Exponent::Finite(1.0),
            Exponent::Finite(2.5),
            Exponent::Infinity,
        ] {
            assert_eq!(strong_kme_distance(&a, &a, &k, q).unwrap(), 0.0);
        }
        let d = mmd_norm(&k, &dirac(0.0), &dirac(1.0)).unwrap();
        let v = strong_kme_distance(&a, &b, &k, Exponent::Finite(1.0)).unwrap();
        assert!((v - d).abs() < 1e-15);
        assert!(strong_kme_distance(&a, &b, &k, Exponent::Finite(0.5)).is_err());
    }

    #[test]
    fn strong_distance_ignores_null_points_at_infinity() {
        let k = g1();
        let input = InputMeasure::new(vec![Point::scalar(0.0), Point::scalar(1.0)], vec![1.0, 0.0])
            .unwrap();
        let a = StochasticKernel::new(input.clone(), vec![dirac(0.0), dirac(0.0)]).unwrap();
        let b = StochasticKernel::new(input, vec![dirac(0.0), dirac(5.0)]).unwrap();
        assert_eq!(
            strong_kme_distance(&a, &b, &k, Exponent::Infinity).unwrap(),
            0.0
        );
    }

    #[test]
    fn mismatched_inputs_are_structural() {
        let a = StochasticKernel::constant(uniform_input(2), dirac(0.0)).unwrap();
        let b = StochasticKernel::constant(uniform_input(3), dirac(0.0)).unwrap();
        assert!(matches!(
            strong_kme_distance(&a, &b, &g1(), Exponent::Infinity),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn escaping_mass_weak_defect() {
        let k = g1();
        let input = uniform_input(1);
        let seq = StochasticKernel::constant(input.clone(), escaping_row(2)).unwrap();
        let zero = StochasticKernel::sub_probability(input, vec![FiniteMeasure::zero()]).unwrap();
        let f = TestFunction::uniform(KernelExpansion::feature(Point::scalar(0.0)), 1).unwrap();
        let d = weak_kme_defect(&seq, &zero, &[f], &k).unwrap();
        let want = 0.5 * ((-0.5f64).exp() + (-2.0f64).exp());
        assert!((d[0] - want).abs() < 1e-15);
        assert!((d[0] - 0.3709).abs() < 1e-4);
    }

    #[test]
    fn empty_family_rejected() {
        let a = StochasticKernel::constant(uniform_input(1), dirac(0.0)).unwrap();
        assert!(matches!(
            weak_kme_defect(&a, &a, &[], &g1()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn wstar_rejects_bounded_sections() {
        let a = StochasticKernel::constant(uniform_input(1), dirac(0.0)).unwrap();
        let one = ScalarTestFunction::constant_one(1).unwrap();
        assert!(matches!(
            wstar_defect(&a, &a, &[one], &g1()),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn young_requires_constant_one() {
        let a = StochasticKernel::constant(uniform_input(1), dirac(0.0)).unwrap();
        let f = ScalarTestFunction::uniform(
            ScalarSection::Kernel(KernelExpansion::feature(Point::scalar(0.0))),
            1,
        )
        .unwrap();
        assert!(matches!(
            young_defect(&a, &a, &[f], &g1()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn young_constant_one_sees_lost_mass() {
        let k = g1();
        let input = uniform_input(2);
        let zero = StochasticKernel::sub_probability(input.clone(), vec![FiniteMeasure::zero(); 2])
            .unwrap();
        for m in [1, 4, 64] {
            let seq = StochasticKernel::constant(input.clone(), escaping_row(m)).unwrap();
            let one = ScalarTestFunction::constant_one(2).unwrap();
            assert_eq!(young_defect(&seq, &zero, &[one], &k).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn tightness_examples() {
        let input = uniform_input(2);
        let at_origin = StochasticKernel::constant(input.clone(), dirac(0.0)).unwrap();
        assert_eq!(tightness_defect(&at_origin, 1.0).unwrap(), 0.0);
        assert_eq!(tightness_defect(&at_origin, 0.0).unwrap(), 0.0);
        for n in [2usize, 5, 10] {
            let esc = StochasticKernel::constant(input.clone(), escaping_row(n)).unwrap();
            let v = tightness_defect(&esc, n as f64 - 0.5).unwrap();
            assert!((v - 1.0 / n as f64).abs() < 1e-15);
        }
        assert!(tightness_defect(&at_origin, -1.0).is_err());
    }

    #[test]
    fn change_input_examples() {
        let k = g1();
        let input = InputMeasure::uniform(vec![Point::scalar(0.0), Point::scalar(1.0)]).unwrap();
        let g = StochasticKernel::new(input, vec![dirac(0.0), dirac(1.0)]).unwrap();
        assert_eq!(change_input_measure(&g, &[1.0, 1.0]).unwrap(), g);

        let moved = change_input_measure(&g, &[2.0, 0.0]).unwrap();
        assert_eq!(moved.input().weights(), &[1.0, 0.0]);

        assert!(matches!(
            change_input_measure(&g, &[1.0, 0.5]),
            Err(Error::Domain(_))
        ));

        // defect of f under η equals defect of density·f under μ
        let density = [1.5, 0.5];
        let other =
            StochasticKernel::new(g.input().clone(), vec![dirac(0.5), dirac(-1.0)]).unwrap();
        let f = TestFunction::uniform(KernelExpansion::feature(Point::scalar(0.2)), 2).unwrap();
        let under_eta = weak_kme_defect(
            &change_input_measure(&g, &density).unwrap(),
            &change_input_measure(&other, &density).unwrap(),
            std::slice::from_ref(&f),
            &k,
        )
        .unwrap();
        let absorbed = f.pointwise_scaled(&density).unwrap();
        let under_mu = weak_kme_defect(&g, &other, &[absorbed], &k).unwrap();
        assert!((under_eta[0] - under_mu[0]).abs() < 1e-12);
    }

    #[test]
    fn random_family_shape() {
        let k = g1();
        let fam = TestFamilies::random(&k, 10, &FamilyConfig::new(3, 1, -1.0, 1.0)).unwrap();
        assert_eq!(fam.kme.len(), 16);
        assert_eq!(fam.wstar.len(), 16);
        assert_eq!(fam.young.len(), 33);
        assert!(fam.wstar.iter().all(ScalarTestFunction::is_c0));
        assert!(fam.young.last().unwrap().is_constant_one());
        assert!((fam.max_section_norm(&k).unwrap() - 1.0).abs() < 1e-12);
        let again = TestFamilies::random(&k, 10, &FamilyConfig::new(3, 1, -1.0, 1.0)).unwrap();
        assert_eq!(fam.kme, again.kme);
    }

    #[test]
    fn constant_sequence_report() {
        let k = g1();
        let input = uniform_input(4);
        let limit = StochasticKernel::constant(input, dirac(0.5)).unwrap();
        let fam = TestFamilies::random(&k, 4, &FamilyConfig::new(1, 1, 0.0, 1.0)).unwrap();
        let seq: Vec<_> = (1..=3).map(|n| (n, limit.clone())).collect();
        let rep =
            equivalence_report("const", &seq, &limit, &k, &fam, ReportOptions::default()).unwrap();
        assert!(rep.verdicts.weak_kme && rep.verdicts.wstar && rep.verdicts.young);
        assert!(rep.verdicts.strong);
        for d in &rep.per_index {
            assert_eq!(d.max_weak(), 0.0);
            assert_eq!(d.max_young(), 0.0);
            assert_eq!(d.strong_qinf, 0.0);
        }
        let csv = rep.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn sub_probability_limit_is_a_precondition_failure() {
        let k = g1();
        let input = uniform_input(1);
        let zero =
            StochasticKernel::sub_probability(input.clone(), vec![FiniteMeasure::zero()]).unwrap();
        let seq = vec![(1, StochasticKernel::constant(input, dirac(1.0)).unwrap())];
        let fam = TestFamilies::random(&k, 1, &FamilyConfig::new(1, 1, 0.0, 1.0)).unwrap();
        let err = equivalence_report("esc", &seq, &zero, &k, &fam, ReportOptions::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
        let opts = ReportOptions {
            allow_sub_probability_limit: true,
            ..Default::default()
        };
        let rep = equivalence_report("esc", &seq, &zero, &k, &fam, opts).unwrap();
        assert!(!rep.limit_is_probability);
        assert_eq!(rep.per_index[0].young_mass_gap, 1.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(usize, f64)> = [1usize, 2, 4, 8]
            .iter()
            .map(|&n| (n, 3.0 / n as f64))
            .collect();
        assert!((log_log_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert!(log_log_slope(&[(1, 0.0)]).is_none());
    }

    #[test]
    fn real_format_has_17_significant_digits() {
        assert_eq!(fmt_real(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
