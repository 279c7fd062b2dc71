//! Helpers shared by the integration test targets: seeded generators and
//! independent oracles that do not go through the library's own solvers.

#![allow(dead_code)]

use kme_core::mdp::MdpModel;
use kme_core::{FiniteMeasure, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_point<R: Rng>(rng: &mut R, dim: usize, scale: f64) -> Point {
    Point::new(
        (0..dim)
            .map(|_| scale * (2.0 * rng.gen::<f64>() - 1.0))
            .collect(),
    )
    .unwrap()
}

pub fn random_probability<R: Rng>(rng: &mut R, max_atoms: usize, dim: usize) -> FiniteMeasure {
    let n = rng.gen_range(1..=max_atoms);
    let points = (0..n).map(|_| random_point(rng, dim, 2.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    FiniteMeasure::atomic(points, raw.into_iter().map(|w| w / total).collect()).unwrap()
}

pub fn random_signed<R: Rng>(rng: &mut R, max_atoms: usize, dim: usize) -> FiniteMeasure {
    let n = rng.gen_range(1..=max_atoms);
    let points = (0..n).map(|_| random_point(rng, dim, 2.0)).collect();
    let w = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    FiniteMeasure::atomic(points, w).unwrap()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `p[x][a][y]` read back from the model's transition rows.
pub fn transition_table(m: &MdpModel) -> Vec<Vec<Vec<f64>>> {
    (0..m.n_states())
        .map(|x| {
            (0..m.n_actions())
                .map(|a| m.transition_row(x, a).to_vec())
                .collect()
        })
        .collect()
}

/// `min_π κ0ᵀ (I - β P_π)^{-1} c_π` over all deterministic stationary policies.
pub fn brute_force_jstar(m: &MdpModel) -> f64 {
    let s = m.n_states();
    let na = m.n_actions();
    let p = transition_table(m);
    let total = na.pow(s as u32);
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut c = code;
        let pi: Vec<usize> = (0..s)
            .map(|_| {
                let a = c % na;
                c /= na;
                a
            })
            .collect();
        let a_mat = (0..s)
            .map(|x| {
                (0..s)
                    .map(|y| f64::from(u8::from(x == y)) - m.beta() * p[x][pi[x]][y])
                    .collect()
            })
            .collect();
        let rhs = (0..s).map(|x| m.cost(x, pi[x])).collect();
        let v = solve_linear(a_mat, rhs);
        let j: f64 = m.initial().iter().zip(&v).map(|(k, vx)| k * vx).sum();
        best = best.min(j);
    }
    best
}

/// A random model on `states` scalar states with uniform cell weights.
pub fn random_mdp(rng: &mut ChaCha8Rng, states: usize, actions: usize, beta: f64) -> MdpModel {
    let grid: Vec<Point> = (0..states).map(|i| Point::scalar(i as f64)).collect();
    let w = vec![1.0 / states as f64; states];
    let cost = (0..states)
        .map(|_| (0..actions).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let dens: Vec<Vec<Vec<f64>>> = (0..states)
        .map(|_| {
            (0..actions)
                .map(|_| (0..states).map(|_| rng.gen::<f64>() + 0.01).collect())
                .collect()
        })
        .collect();
    let init: Vec<f64> = (0..states).map(|_| rng.gen::<f64>() + 0.01).collect();
    let z: f64 = init.iter().sum();
    let kappa0 = FiniteMeasure::atomic(grid.clone(), init.iter().map(|v| v / z).collect()).unwrap();
    MdpModel::from_densities(
        grid,
        w,
        (0..actions).map(|a| format!("a{a}")).collect(),
        cost,
        beta,
        |x, a| dens[x][a].clone(),
        kappa0,
    )
    .unwrap()
}

/// Median of a nonempty slice.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
