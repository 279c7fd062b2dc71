mod common;

use kme_core::mdp::{
    bellman_operator, empirical_model, greedy_policy, policy_evaluation, robustness_experiment,
    spearman, value_iteration, Estimator, MdpModel, MollifiedMdp, Policy, SolveOptions,
};
use kme_core::{Error, KernelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force_jstar, random_mdp, solve_linear, transition_table};

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bellman_is_a_beta_contraction(seed in any::<u64>(), beta in 0.05f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 4, 3, beta);
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lhs = sup(&bellman_operator(&m, &v).unwrap(), &bellman_operator(&m, &w).unwrap());
        prop_assert!(lhs <= beta * sup(&v, &w) + 1e-12);
    }

    #[test]
    fn value_iteration_matches_policy_enumeration(seed in any::<u64>(), beta in 0.1f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 3, 2, beta);
        let opts = SolveOptions::default();
        let sol = value_iteration(&m, opts).unwrap();
        prop_assert!((sol.jstar - brute_force_jstar(&m)).abs() <= 2.0 * opts.tol);
        // the fixed point is reproduced by one more Bellman step
        let tv = bellman_operator(&m, &sol.values).unwrap();
        prop_assert!(sup(&tv, &sol.values) <= opts.tol);
    }

    #[test]
    fn optimal_cost_beats_every_policy(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 5, 3, 0.9);
        let opts = SolveOptions::default();
        let jstar = value_iteration(&m, opts).unwrap().jstar;
        for _ in 0..5 {
            let pi = Policy::new((0..5).map(|_| rng.gen_range(0..3)).collect(), &m).unwrap();
            prop_assert!(jstar <= policy_evaluation(&m, &pi, opts).unwrap() + 2.0 * opts.tol);
        }
    }

    #[test]
    fn policy_evaluation_matches_linear_solve(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mdp(&mut rng, 4, 2, 0.8);
        let pi: Vec<usize> = (0..4).map(|_| rng.gen_range(0..2)).collect();
        let p = transition_table(&m);
        let a = (0..4)
            .map(|x| (0..4).map(|y| f64::from(u8::from(x == y)) - 0.8 * p[x][pi[x]][y]).collect())
            .collect();
        let v = solve_linear(a, (0..4).map(|x| m.cost(x, pi[x])).collect());
        let exact: f64 = m.initial().iter().zip(&v).map(|(k, vx)| k * vx).sum();
        let opts = SolveOptions::default();
        let got = policy_evaluation(&m, &Policy::new(pi, &m).unwrap(), opts).unwrap();
        prop_assert!((got - exact).abs() <= opts.tol);
    }
}

#[test]
fn constant_cost_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for beta in [0.5, 0.9, 0.99] {
        let base = random_mdp(&mut rng, 3, 2, beta);
        let m = MdpModel::new(
            base.state_grid().to_vec(),
            base.cell_weights().to_vec(),
            vec!["a0".into(), "a1".into()],
            vec![vec![1.0, 1.0]; 3],
            beta,
            base.transition().clone(),
            kme_core::FiniteMeasure::atomic(base.state_grid().to_vec(), base.initial().to_vec())
                .unwrap(),
        )
        .unwrap();
        let opts = SolveOptions::default();
        let j = value_iteration(&m, opts).unwrap().jstar;
        assert!(
            (j - 1.0 / (1.0 - beta)).abs() <= opts.tol,
            "beta={beta}: {j}"
        );
    }
}

#[test]
fn greedy_policy_breaks_ties_towards_lowest_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = random_mdp(&mut rng, 3, 3, 0.9);
    let m = MdpModel::new(
        base.state_grid().to_vec(),
        base.cell_weights().to_vec(),
        vec!["x".into(), "y".into(), "z".into()],
        vec![vec![0.0; 3]; 3],
        0.9,
        base.transition().clone(),
        kme_core::FiniteMeasure::atomic(base.state_grid().to_vec(), base.initial().to_vec())
            .unwrap(),
    )
    .unwrap();
    assert_eq!(greedy_policy(&m, &[0.0; 3]).actions(), &[0, 0, 0]);
}

#[test]
fn iteration_budget_exhaustion_reports_the_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = random_mdp(&mut rng, 3, 2, 0.9);
    let err = value_iteration(
        &m,
        SolveOptions {
            tol: 1e-9,
            max_iter: 1,
        },
    )
    .unwrap_err();
    match err {
        Error::Convergence {
            iterations,
            residual,
        } => {
            assert_eq!(iterations, 1);
            assert!(residual > 0.0);
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn empirical_model_is_seeded_and_converges() {
    let truth = MollifiedMdp::default().true_model().unwrap();
    let a = empirical_model(&truth, 500, 11, Estimator::Histogram).unwrap();
    let b = empirical_model(&truth, 500, 11, Estimator::Histogram).unwrap();
    assert_eq!(a, b);
    assert!(a.is_probability_kernel());
    let smooth = empirical_model(
        &truth,
        500,
        11,
        Estimator::KernelSmoothed { bandwidth: 0.05 },
    )
    .unwrap();
    assert!(smooth.is_probability_kernel());
    let spec = KernelSpec::gaussian(1.0, 1).unwrap();
    let d = |n| {
        let p = empirical_model(&truth, n, 1, Estimator::Histogram).unwrap();
        kme_core::strong_kme_distance(
            &p,
            truth.transition(),
            &spec,
            kme_core::Exponent::Finite(2.0),
        )
        .unwrap()
    };
    assert!(d(100_000) < d(100));
}

#[test]
fn mollified_robustness_gaps_shrink() {
    let setup = MollifiedMdp::default();
    let truth = setup.true_model().unwrap();
    let spec = KernelSpec::gaussian(1.0, 1).unwrap();
    let approx: Vec<_> = [1, 2, 4, 8]
        .iter()
        .map(|&n| (n, setup.approximant(n).unwrap()))
        .collect();
    let run = robustness_experiment(&truth, &approx, &spec, &[], SolveOptions::default()).unwrap();
    let gaps: Vec<f64> = run.records.iter().map(|r| r.gap_value).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    let dist: Vec<f64> = run.records.iter().map(|r| r.kme_strong_q2).collect();
    assert!(spearman(&dist, &gaps).unwrap() > 0.99);
    for r in &run.records {
        assert!(r.jpolicy_true >= run.jstar_true - 2e-9);
    }
    let csv = run.to_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with(
        "n,Jstar_n,gap_value,gap_policy,kme_strong_q2,kme_strong_qinf,max_weak_defect\n"
    ));
}
