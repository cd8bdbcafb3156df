#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use retroplan_core::{Policy, TabularChain, TabularMDP};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; each entry is zeroed with probability
/// `sparsity` but at least one entry stays positive.
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> Vec<f64> {
    let keep = rng.random_range(0..n);
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            if i != keep && rng.random::<f64>() < sparsity {
                0.0
            } else {
                0.05 + rng.random::<f64>()
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Strictly positive (hence ergodic and aperiodic) chain.
pub fn random_ergodic_chain(rng: &mut ChaCha8Rng, n: usize, discount: f64) -> TabularChain {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(rng, n, 0.0)).collect();
    let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    TabularChain::new(p, r, discount).unwrap()
}

/// Ergodic chain with a few successors per state: a ring edge keeps it
/// irreducible, a self-loop keeps it aperiodic.
pub fn random_sparse_chain(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> TabularChain {
    let mut p = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        p[(s, (s + 1) % n)] = 0.5 + rng.random::<f64>();
        p[(s, s)] = 0.2 + rng.random::<f64>();
        for _ in 0..extra {
            p[(s, rng.random_range(0..n))] += 0.2 + rng.random::<f64>();
        }
        let total: f64 = p.row(s).sum();
        p.row_mut(s).unscale_mut(total);
    }
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    TabularChain::new(p, r, 0.9).unwrap()
}

pub fn random_mdp(rng: &mut ChaCha8Rng, n: usize, m: usize, sparsity: f64) -> TabularMDP {
    let mut transition = Vec::with_capacity(n * m * n);
    for _ in 0..n * m {
        transition.extend(random_distribution(rng, n, sparsity));
    }
    let reward = (0..n * m * n)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let initial = random_distribution(rng, n, 0.0);
    TabularMDP::new(n, m, transition, reward, 0.9, vec![false; n], initial).unwrap()
}

pub fn random_policy(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Policy {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| random_distribution(rng, m, 0.0)).collect();
    Policy::new(DMatrix::from_fn(n, m, |s, a| rows[s][a])).unwrap()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
