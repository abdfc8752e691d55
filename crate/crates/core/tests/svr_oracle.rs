// SPDX-License-Identifier: Apache-2.0

use metapath_core::weights::svr::{solve, SvrConfig, SvrSolution};
use metapath_core::weights::normalize_weights;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cfg(epsilon: f64, penalty: f64) -> SvrConfig {
    SvrConfig { epsilon, penalty, ..SvrConfig::default() }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ½‖w‖² + C Σ max(0, |y − w·x − b| − ε)
fn primal(w: &[f64], b: f64, x: &[Vec<f64>], y: &[f64], c: &SvrConfig) -> f64 {
    let loss: f64 = x.iter().zip(y).map(|(xi, yi)| ((yi - dot(w, xi) - b).abs() - c.epsilon).max(0.0)).sum();
    0.5 * dot(w, w) + c.penalty * loss
}

/// Dual objective at `d = α − α*`: −½‖Σ d x‖² − ε Σ|d| + Σ y d.
fn dual(sol: &SvrSolution, x: &[Vec<f64>], y: &[f64], c: &SvrConfig) -> f64 {
    let dim = x[0].len();
    let w: Vec<f64> = (0..dim).map(|k| sol.dual.iter().zip(x).map(|(d, xi)| d * xi[k]).sum()).collect();
    -0.5 * dot(&w, &w) - c.epsilon * sol.dual.iter().map(|d| d.abs()).sum::<f64>() + dot(&sol.dual, y)
}

#[test]
fn one_dimensional_example_matches_grid_search() {
    let x = vec![vec![0.0], vec![1.0], vec![2.0]];
    let y = vec![0.0, 3.0, 6.0];
    let c = cfg(0.1, 1000.0);
    let sol = solve(&x, &y, &c).unwrap();
    assert!(sol.converged);

    let (mut best, mut arg) = (f64::INFINITY, (0.0, 0.0));
    for bi in -400..=400 {
        for wi in 2500..=3500 {
            let (w, b) = (wi as f64 * 1e-3, bi as f64 * 1e-3);
            let v = primal(&[w], b, &x, &y, &c);
            if v < best {
                best = v;
                arg = (w, b);
            }
        }
    }
    // minimum-norm band solution: β = 2.9, b = 0.1
    assert!((arg.0 - 2.9).abs() < 1e-9 && (arg.1 - 0.1).abs() < 1e-9, "grid argmin {arg:?}");
    assert!((sol.weights[0] - arg.0).abs() < 1e-4, "β = {}", sol.weights[0]);
    assert!((sol.bias - arg.1).abs() < 1e-4, "b = {}", sol.bias);
    assert!(primal(&sol.weights, sol.bias, &x, &y, &c) <= best + 1e-6);
    assert!((sol.weights[0] - 3.0).abs() < 0.11);
    for (xi, yi) in x.iter().zip(&y) {
        assert!((yi - sol.predict(xi)).abs() <= 0.1 + 1e-6);
    }
}

#[test]
fn trivial_targets() {
    let x: Vec<Vec<f64>> = (0..6).map(|k| vec![k as f64 / 6.0, 1.0 - k as f64 / 6.0]).collect();
    let sol = solve(&x, &[0.0; 6], &cfg(0.1, 10.0)).unwrap();
    assert_eq!(sol.weights, vec![0.0, 0.0]);
    assert_eq!(sol.bias, 0.0);
    let zeros = vec![vec![0.0, 0.0]; 5];
    let sol = solve(&zeros, &[5.0; 5], &cfg(0.1, 10.0)).unwrap();
    assert_eq!(sol.weights, vec![0.0, 0.0]);
    assert!((sol.bias - 5.0).abs() <= 0.1 + 1e-9);
}

fn random_problem(seed: u64, m: usize, d: usize, noise: f64) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = rng.random_range(-0.5..0.5);
    let x: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let y = x.iter().map(|xi| dot(&w, xi) + b + noise * rng.random_range(-1.0..1.0)).collect();
    (x, y, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn duality_gap_closes(seed in 0u64..1_000_000, m in 2usize..80, d in 1usize..6, eps in 0.0f64..0.3, c in 0.1f64..50.0) {
        let (x, y, _) = random_problem(seed, m, d, 0.3);
        let c = cfg(eps, c);
        let sol = solve(&x, &y, &c).unwrap();
        prop_assert!(sol.converged);
        let (p, q) = (primal(&sol.weights, sol.bias, &x, &y, &c), dual(&sol, &x, &y, &c));
        prop_assert!(p >= q - 1e-9 * (1.0 + p.abs()), "weak duality: {p} < {q}");
        prop_assert!(p - q <= 1e-3 * (1.0 + p.abs()), "gap {}", p - q);
        // box and equality constraints of the dual
        prop_assert!(sol.dual.iter().all(|a| a.abs() <= c.penalty + 1e-12));
        prop_assert!(sol.dual.iter().sum::<f64>().abs() < 1e-9 * (1.0 + c.penalty * m as f64));
        // complementary slackness: strictly inside the band ⇒ no dual weight
        for (k, (xi, yi)) in x.iter().zip(&y).enumerate() {
            if (yi - sol.predict(xi)).abs() < c.epsilon - 1e-5 {
                prop_assert!(sol.dual[k].abs() < 1e-9, "sample {k} inside band has dual {}", sol.dual[k]);
            }
        }
    }

    #[test]
    fn noiseless_targets_stay_in_band(seed in 0u64..1_000_000, d in 1usize..6, eps in 0.01f64..0.2) {
        let (x, y, _) = random_problem(seed, 60, d, 0.0);
        let sol = solve(&x, &y, &cfg(eps, 1000.0)).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((yi - sol.predict(xi)).abs() <= eps + 1e-6);
        }
    }

    #[test]
    fn normalization_preserves_ranking(raw in prop::collection::vec(-2.0f64..2.0, 1..8)) {
        let norm = normalize_weights(&raw);
        prop_assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(norm.iter().all(|v| (0.0..=1.0).contains(v)));
        let clamped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if clamped[i] < clamped[j] {
                    prop_assert!(norm[i] < norm[j]);
                }
                if clamped[i] == clamped[j] {
                    prop_assert_eq!(norm[i], norm[j]);
                }
            }
        }
    }
}

#[test]
fn solver_is_bitwise_deterministic() {
    let (x, y, _) = random_problem(77, 300, 4, 0.2);
    let a = solve(&x, &y, &cfg(0.05, 10.0)).unwrap();
    let b = solve(&x, &y, &cfg(0.05, 10.0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn recovers_generating_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let w = [0.9, 0.2, 0.6, 0.4];
    let x: Vec<Vec<f64>> = (0..500).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|xi| dot(&w, xi) + 0.1).collect();
    let sol = solve(&x, &y, &cfg(0.01, 1000.0)).unwrap();
    let cos = dot(&sol.weights, &w) / (dot(&sol.weights, &sol.weights).sqrt() * dot(&w, &w).sqrt());
    assert!(cos >= 0.99, "cosine {cos}");
}
