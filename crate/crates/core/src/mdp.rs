//! Discounted-cost MDPs on a state grid with finitely many actions.
//!
//! Transitions are a [`StochasticKernel`] whose input support is the
//! row-major list of state-action pairs `(x, a)` (coordinates of `x`
//! followed by the action index) weighted by `κ_abs ⊗ Unif(A)`, and whose
//! rows are probability measures on the state grid. Every row is therefore
//! absolutely continuous with respect to the grid reference measure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::gallery::gaussian_grid_density;
use crate::measure::{FiniteMeasure, InputMeasure, Point, COINCIDENCE_TOL};
use crate::rkhs::KernelSpec;
use crate::stochastic::{StochasticKernel, TestFunction};
use crate::topology::{fmt_real, strong_kme_distance, weak_kme_defect, Exponent};

/// Row sums of the transition must be within this of 1.
pub const ROW_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel {
    state_grid: Vec<Point>,
    cell_weights: Vec<f64>,
    actions: Vec<String>,
    cost: Vec<Vec<f64>>,
    beta: f64,
    transition: StochasticKernel,
    kappa0: FiniteMeasure,
    // probs[(x * A + a) * S + y] = p(y | x, a)
    probs: Vec<f64>,
    init: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MdpRepr {
    state_grid: Vec<Point>,
    #[serde(default)]
    cell_weights: Option<Vec<f64>>,
    actions: Vec<String>,
    cost: Vec<Vec<f64>>,
    beta: f64,
    transition: StochasticKernel,
    kappa0: FiniteMeasure,
}

impl Serialize for MdpModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MdpRepr {
            state_grid: self.state_grid.clone(),
            cell_weights: Some(self.cell_weights.clone()),
            actions: self.actions.clone(),
            cost: self.cost.clone(),
            beta: self.beta,
            transition: self.transition.clone(),
            kappa0: self.kappa0.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MdpModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MdpRepr::deserialize(d)?;
        let n = r.state_grid.len();
        let weights = r
            .cell_weights
            .unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        MdpModel::new(
            r.state_grid,
            weights,
            r.actions,
            r.cost,
            r.beta,
            r.transition,
            r.kappa0,
        )
        .map_err(serde::de::Error::custom)
    }
}

fn grid_index(grid: &[Point], p: &Point) -> Option<usize> {
    grid.iter()
        .position(|g| g.dim() == p.dim() && g.distance(p) < COINCIDENCE_TOL)
}

/// State-action input measure `κ_abs ⊗ Unif(A)`, row-major in `(x, a)`.
pub fn state_action_input(
    state_grid: &[Point],
    cell_weights: &[f64],
    n_actions: usize,
) -> Result<InputMeasure> {
    if n_actions == 0 {
        return Err(domain("at least one action is required"));
    }
    let mut points = Vec::with_capacity(state_grid.len() * n_actions);
    let mut weights = Vec::with_capacity(points.capacity());
    for (x, w) in state_grid.iter().zip(cell_weights) {
        for a in 0..n_actions {
            let mut c = x.coords().to_vec();
            c.push(a as f64);
            points.push(Point::new(c)?);
            weights.push(w / n_actions as f64);
        }
    }
    InputMeasure::new(points, weights)
}

impl MdpModel {
    pub fn new(
        state_grid: Vec<Point>,
        cell_weights: Vec<f64>,
        actions: Vec<String>,
        cost: Vec<Vec<f64>>,
        beta: f64,
        transition: StochasticKernel,
        kappa0: FiniteMeasure,
    ) -> Result<Self> {
        let s = state_grid.len();
        let a = actions.len();
        if s == 0 || a == 0 {
            return Err(structural("state grid and action set must be nonempty"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(domain(format!("discount must lie in (0, 1), got {beta}")));
        }
        if cell_weights.len() != s {
            return Err(structural("one cell weight is required per state"));
        }
        if cell_weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(domain("cell weights must be positive"));
        }
        let total: f64 = cell_weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("cell weights sum to {total}, expected 1")));
        }
        if cost.len() != s || cost.iter().any(|row| row.len() != a) {
            return Err(structural(format!("cost table must be {s} x {a}")));
        }
        if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(domain("costs must be finite and nonnegative"));
        }
        let expected = state_action_input(&state_grid, &cell_weights, a)?;
        if !transition.input().matches(&expected) {
            return Err(structural(
                "transition input must be the row-major state-action grid weighted by κ_abs ⊗ Unif(A)",
            ));
        }
        let mut probs = vec![0.0; s * a * s];
        for (r, row) in transition.rows().iter().enumerate() {
            let out = &mut probs[r * s..(r + 1) * s];
            for (p, m) in row.atoms() {
                let y = grid_index(&state_grid, p).ok_or_else(|| {
                    structural(format!("transition row {r} has an atom off the state grid"))
                })?;
                out[y] += m;
            }
            let sum: f64 = out.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL || out.iter().any(|v| *v < 0.0) {
                return Err(domain(format!("transition row {r} sums to {sum}")));
            }
        }
        let mut init = vec![0.0; s];
        for (p, m) in kappa0.atoms() {
            let x = grid_index(&state_grid, p)
                .ok_or_else(|| structural("initial distribution has an atom off the state grid"))?;
            init[x] += m;
        }
        if !kappa0.is_probability() {
            return Err(domain("initial distribution must be a probability measure"));
        }
        Ok(MdpModel {
            state_grid,
            cell_weights,
            actions,
            cost,
            beta,
            transition,
            kappa0,
            probs,
            init,
        })
    }

    /// Builds the transition from densities `f(y | x, a)` against the cell
    /// weights, renormalizing each row to unit mass.
    pub fn from_densities(
        state_grid: Vec<Point>,
        cell_weights: Vec<f64>,
        actions: Vec<String>,
        cost: Vec<Vec<f64>>,
        beta: f64,
        density: impl Fn(usize, usize) -> Vec<f64>,
        kappa0: FiniteMeasure,
    ) -> Result<Self> {
        let transition = density_transition(&state_grid, &cell_weights, actions.len(), density)?;
        MdpModel::new(
            state_grid,
            cell_weights,
            actions,
            cost,
            beta,
            transition,
            kappa0,
        )
    }

    /// Same model with a different transition kernel.
    pub fn with_transition(&self, transition: StochasticKernel) -> Result<Self> {
        MdpModel::new(
            self.state_grid.clone(),
            self.cell_weights.clone(),
            self.actions.clone(),
            self.cost.clone(),
            self.beta,
            transition,
            self.kappa0.clone(),
        )
    }

    pub fn n_states(&self) -> usize {
        self.state_grid.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn state_grid(&self) -> &[Point] {
        &self.state_grid
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    pub fn cost(&self, x: usize, a: usize) -> f64 {
        self.cost[x][a]
    }

    pub fn max_cost(&self) -> f64 {
        self.cost.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn transition(&self) -> &StochasticKernel {
        &self.transition
    }

    /// `p(· | x, a)` as a probability vector over the state grid.
    pub fn transition_row(&self, x: usize, a: usize) -> &[f64] {
        let s = self.n_states();
        let r = x * self.n_actions() + a;
        &self.probs[r * s..(r + 1) * s]
    }

    pub fn initial(&self) -> &[f64] {
        &self.init
    }

    fn q_value(&self, v: &[f64], x: usize, a: usize) -> f64 {
        let cont: f64 = self
            .transition_row(x, a)
            .iter()
            .zip(v)
            .map(|(p, vy)| p * vy)
            .sum();
        self.cost[x][a] + self.beta * cont
    }

    fn greedy(&self, v: &[f64], x: usize) -> (f64, usize) {
        let mut best = (self.q_value(v, x, 0), 0);
        for a in 1..self.n_actions() {
            let q = self.q_value(v, x, a);
            if q < best.0 {
                best = (q, a);
            }
        }
        best
    }
}

fn density_transition(
    state_grid: &[Point],
    cell_weights: &[f64],
    n_actions: usize,
    density: impl Fn(usize, usize) -> Vec<f64>,
) -> Result<StochasticKernel> {
    let input = state_action_input(state_grid, cell_weights, n_actions)?;
    let mut rows = Vec::with_capacity(input.len());
    for x in 0..state_grid.len() {
        for a in 0..n_actions {
            let f = density(x, a);
            if f.len() != state_grid.len() {
                return Err(structural("density row length differs from the state grid"));
            }
            let mass: f64 = f.iter().zip(cell_weights).map(|(v, w)| v * w).sum();
            if !(mass > 0.0) {
                return Err(domain(format!("density for ({x}, {a}) has no mass")));
            }
            rows.push(FiniteMeasure::grid(
                state_grid.to_vec(),
                cell_weights.to_vec(),
                f.iter().map(|v| v / mass).collect(),
            )?);
        }
    }
    StochasticKernel::new(input, rows)
}

/// A deterministic stationary policy: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(actions: Vec<usize>, model: &MdpModel) -> Result<Self> {
        if actions.len() != model.n_states() {
            return Err(structural(
                "policy length differs from the number of states",
            ));
        }
        if actions.iter().any(|&a| a >= model.n_actions()) {
            return Err(domain("policy action index out of range"));
        }
        Ok(Policy(actions))
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

impl SolveOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(domain("tolerance must be positive"));
        }
        Ok(())
    }

    /// Sup-norm step size below which the iterate is within `tol` of the
    /// fixed point.
    fn threshold(&self, beta: f64) -> f64 {
        self.tol * (1.0 - beta) / (2.0 * beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub policy: Policy,
    /// `Σ_x κ0(x) v(x)`.
    pub jstar: f64,
    pub iterations: usize,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(Tv)(x) = min_a [c(x, a) + β Σ_y p(y|x,a) v(y)]`.
pub fn bellman_operator(m: &MdpModel, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != m.n_states() {
        return Err(structural(
            "value vector length differs from the number of states",
        ));
    }
    Ok((0..m.n_states()).map(|x| m.greedy(v, x).0).collect())
}

/// Greedy policy for `v`, lowest action index on ties.
pub fn greedy_policy(m: &MdpModel, v: &[f64]) -> Policy {
    Policy((0..m.n_states()).map(|x| m.greedy(v, x).1).collect())
}

fn weighted(m: &MdpModel, v: &[f64]) -> f64 {
    m.init.iter().zip(v).map(|(k, vx)| k * vx).sum()
}

pub fn value_iteration(m: &MdpModel, opts: SolveOptions) -> Result<Solution> {
    opts.check()?;
    let threshold = opts.threshold(m.beta);
    let mut v = vec![0.0; m.n_states()];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let next = bellman_operator(m, &v)?;
        residual = sup_diff(&next, &v);
        v = next;
        if residual < threshold {
            let policy = greedy_policy(m, &v);
            return Ok(Solution {
                jstar: weighted(m, &v),
                values: v,
                policy,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// State values of a fixed policy, by iterating `v ← c_π + β P_π v`.
pub fn policy_values(m: &MdpModel, pi: &Policy, opts: SolveOptions) -> Result<Vec<f64>> {
    opts.check()?;
    if pi.0.len() != m.n_states() || pi.0.iter().any(|&a| a >= m.n_actions()) {
        return Err(structural("policy does not fit the model"));
    }
    let threshold = opts.threshold(m.beta);
    let mut v = vec![0.0; m.n_states()];
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let next: Vec<f64> = (0..m.n_states())
            .map(|x| m.q_value(&v, x, pi.0[x]))
            .collect();
        residual = sup_diff(&next, &v);
        v = next;
        if residual < threshold {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual,
    })
}

/// Discounted cost `J(π; κ0, p)` of a deterministic stationary policy.
pub fn policy_evaluation(m: &MdpModel, pi: &Policy, opts: SolveOptions) -> Result<f64> {
    Ok(weighted(m, &policy_values(m, pi, opts)?))
}

/// One row of a robustness run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RobustnessRecord {
    pub n: usize,
    /// Optimal value of the approximate model.
    pub jstar_n: f64,
    pub gap_value: f64,
    /// Cost of the approximate model's optimal policy under the true model.
    pub jpolicy_true: f64,
    pub gap_policy: f64,
    pub kme_strong_q1: f64,
    pub kme_strong_q2: f64,
    pub kme_strong_qinf: f64,
    pub max_weak_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RobustnessRun {
    pub jstar_true: f64,
    pub records: Vec<RobustnessRecord>,
}

pub const ROBUSTNESS_CSV_HEADER: &str =
    "n,Jstar_n,gap_value,gap_policy,kme_strong_q2,kme_strong_qinf,max_weak_defect";

impl RobustnessRun {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ROBUSTNESS_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.n.to_string());
            for c in [
                r.jstar_n,
                r.gap_value,
                r.gap_policy,
                r.kme_strong_q2,
                r.kme_strong_qinf,
                r.max_weak_defect,
            ] {
                out.push(',');
                out.push_str(&fmt_real(c));
            }
            out.push('\n');
        }
        out
    }

    pub fn last(&self) -> Option<&RobustnessRecord> {
        self.records.last()
    }
}

/// Solves each approximate model, evaluates its optimal policy under the true
/// model, and records the embedding distances between the transitions.
///
/// Distances use the state-action reference measure `κ_abs ⊗ Unif(A)`, which
/// is the input measure of every transition kernel.
pub fn robustness_experiment(
    truth: &MdpModel,
    approximants: &[(usize, StochasticKernel)],
    spec: &KernelSpec,
    family: &[TestFunction],
    opts: SolveOptions,
) -> Result<RobustnessRun> {
    let reference = value_iteration(truth, opts)?;
    let mut records = Vec::with_capacity(approximants.len());
    for (n, p_n) in approximants {
        let model_n = truth.with_transition(p_n.clone())?;
        let sol_n = value_iteration(&model_n, opts)?;
        let jpolicy_true = policy_evaluation(truth, &sol_n.policy, opts)?;
        let t = truth.transition();
        let max_weak_defect = if family.is_empty() {
            0.0
        } else {
            weak_kme_defect(p_n, t, family, spec)?
                .into_iter()
                .fold(0.0, f64::max)
        };
        records.push(RobustnessRecord {
            n: *n,
            jstar_n: sol_n.jstar,
            gap_value: (sol_n.jstar - reference.jstar).abs(),
            jpolicy_true,
            gap_policy: (jpolicy_true - reference.jstar).abs(),
            kme_strong_q1: strong_kme_distance(p_n, t, spec, Exponent::Finite(1.0))?,
            kme_strong_q2: strong_kme_distance(p_n, t, spec, Exponent::Finite(2.0))?,
            kme_strong_qinf: strong_kme_distance(p_n, t, spec, Exponent::Infinity)?,
            max_weak_defect,
        });
    }
    Ok(RobustnessRun {
        jstar_true: reference.jstar,
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Estimator {
    /// Empirical next-state frequencies.
    Histogram,
    /// Frequencies smoothed by a Gaussian of the given width over the state
    /// grid, then renormalized.
    KernelSmoothed { bandwidth: f64 },
}

/// Estimates the transition from `samples_per_pair` simulated next states per
/// state-action pair.
///
/// Row `r` draws from its own ChaCha stream `r` under `seed`, so the result
/// does not depend on the order in which rows are processed.
pub fn empirical_model(
    truth: &MdpModel,
    samples_per_pair: usize,
    seed: u64,
    estimator: Estimator,
) -> Result<StochasticKernel> {
    if samples_per_pair == 0 {
        return Err(domain(
            "at least one sample per state-action pair is required",
        ));
    }
    if let Estimator::KernelSmoothed { bandwidth } = estimator {
        if !(bandwidth > 0.0) {
            return Err(domain("smoothing bandwidth must be positive"));
        }
    }
    let s = truth.n_states();
    let grid = truth.state_grid();
    let weights = truth.cell_weights();
    let input = truth.transition().input().clone();
    let mut rows = Vec::with_capacity(input.len());
    for r in 0..input.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let probs = &truth.probs[r * s..(r + 1) * s];
        let row = FiniteMeasure::Atomic {
            atoms: grid.to_vec(),
            weights: probs.to_vec(),
        };
        let mut freq = vec![0.0; s];
        for y in row.sample_indices(&mut rng, samples_per_pair)? {
            freq[y] += 1.0;
        }
        let mut p: Vec<f64> = freq.iter().map(|c| c / samples_per_pair as f64).collect();
        if let Estimator::KernelSmoothed { bandwidth } = estimator {
            let smoothed: Vec<f64> = grid
                .iter()
                .map(|gj| {
                    grid.iter()
                        .zip(&p)
                        .map(|(gi, pi)| {
                            pi * (-gj.sq_distance(gi) / (2.0 * bandwidth * bandwidth)).exp()
                        })
                        .sum()
                })
                .collect();
            let total: f64 = smoothed.iter().sum();
            p = smoothed.into_iter().map(|v| v / total).collect();
        }
        let density = p.iter().zip(weights).map(|(pi, w)| pi / w).collect();
        rows.push(FiniteMeasure::grid(
            grid.to_vec(),
            weights.to_vec(),
            density,
        )?);
    }
    StochasticKernel::new(input, rows)
}

/// The mollified control problem: states on a uniform grid of `[0, 1]`,
/// two actions with Gaussian next-state densities.
///
/// Action 0 drifts the state right by `0.1`; action 1 pulls it halfway
/// towards `0.2` at an extra cost of `0.05`. The stage cost is
/// `(x - 0.3)^2` plus the action surcharge.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct MollifiedMdp {
    pub states: usize,
    pub beta: f64,
    pub sigma_limit: f64,
    /// `σ_n = σ_limit (1 + n^{-decay})`.
    pub decay: f64,
}

impl Default for MollifiedMdp {
    fn default() -> Self {
        MollifiedMdp {
            states: 21,
            beta: 0.9,
            sigma_limit: 0.1,
            decay: 2.0,
        }
    }
}

impl MollifiedMdp {
    pub fn sigma(&self, n: usize) -> f64 {
        self.sigma_limit * (1.0 + (n as f64).powf(-self.decay))
    }

    fn grid(&self) -> Result<(Vec<Point>, Vec<f64>, f64)> {
        if self.states < 2 {
            return Err(domain("mollified MDP needs at least 2 states"));
        }
        let step = 1.0 / (self.states - 1) as f64;
        let pts = (0..self.states)
            .map(|i| Point::scalar(i as f64 * step))
            .collect();
        Ok((pts, vec![1.0 / self.states as f64; self.states], step))
    }

    fn drift(x: f64, a: usize) -> f64 {
        if a == 0 {
            x + 0.1
        } else {
            x - 0.5 * (x - 0.2)
        }
    }

    /// The model with transition width `sigma`.
    pub fn model(&self, sigma: f64) -> Result<MdpModel> {
        if !(sigma > 0.0) {
            return Err(domain("width must be positive"));
        }
        let (grid, weights, step) = self.grid()?;
        let xs: Vec<f64> = grid.iter().map(|p| p.coords()[0]).collect();
        let cost = xs
            .iter()
            .map(|x| vec![(x - 0.3).powi(2), (x - 0.3).powi(2) + 0.05])
            .collect();
        let kappa0 = FiniteMeasure::atomic(grid.clone(), weights.clone())?;
        let actions = vec!["drift".to_string(), "reset".to_string()];
        let densities = |x: usize, a: usize| -> Vec<f64> {
            // density against the uniform cell weights 1/states
            let p = gaussian_grid_density(&grid, step, Self::drift(xs[x], a), sigma)
                .expect("positive mass on the grid");
            p.iter().map(|v| v * step * self.states as f64).collect()
        };
        MdpModel::from_densities(
            grid.clone(),
            weights,
            actions,
            cost,
            self.beta,
            densities,
            kappa0,
        )
    }

    pub fn true_model(&self) -> Result<MdpModel> {
        self.model(self.sigma_limit)
    }

    /// Transition of the `n`-th approximant.
    pub fn approximant(&self, n: usize) -> Result<StochasticKernel> {
        if n == 0 {
            return Err(domain("index n must be >= 1"));
        }
        Ok(self.model(self.sigma(n))?.transition().clone())
    }
}

/// Spearman rank correlation, with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va * vb).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[idx[k]] = avg;
        }
        i = j + 1;
    }
    out
}
