mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use retroplan_core::envs::{build_leveled_chain, LeveledChainSpec};
use retroplan_core::models::{
    action_conditioned_backward, expected_linear_backward_step, mle_gradient, n_step_backward,
    planml_gradient, BackwardModel, ExpFamilyModelParams, ExpectationModelBundle, ForwardModel,
    LambdaModel, ModelDirection, ObservedTransition, PlanningContext,
};
use retroplan_core::planning::{backward_planning_update_v, BackwardDynamics};
use retroplan_core::rng::sample_index;
use retroplan_core::{
    induce_chain, reverse_chain, stationary_distribution, Policy, TabularChain, ValueTable,
};

/// Walks `steps` transitions from a stationary start, calling `f(s, s')`.
fn walk(chain: &TabularChain, steps: usize, seed: u64, mut f: impl FnMut(usize, usize)) {
    let mut r = rng(seed);
    let d = stationary_distribution(chain).unwrap();
    let rows: Vec<Vec<f64>> = (0..chain.n_states())
        .map(|s| chain.transition().row(s).iter().copied().collect())
        .collect();
    let mut s = sample_index(d.as_slice(), &mut r);
    for _ in 0..steps {
        let next = sample_index(&rows[s], &mut r);
        f(s, next);
        s = next;
    }
}

fn row(m: &DMatrix<f64>, s: usize) -> Vec<f64> {
    m.row(s).iter().copied().collect()
}

#[test]
fn forward_counts_match_known_mdp() {
    let mut r = rng(8);
    let mdp = random_mdp(&mut r, 6, 2, 0.3);
    let mut model = ForwardModel::new(6, 2, 0.9, 0.01).unwrap();
    for _ in 0..100_000 {
        let (s, a) = (r.random_range(0..6), r.random_range(0..2));
        let next = sample_index(mdp.transition_row(s, a), &mut r);
        model
            .update(s, a, mdp.reward(s, a, next), next, false)
            .unwrap();
    }
    for s in 0..6 {
        for a in 0..2 {
            let est = model.distribution(s, a).unwrap();
            assert!(total_variation(&est, mdp.transition_row(s, a)) < 0.02);
        }
    }
}

#[test]
fn backward_counts_converge_to_reversal() {
    let mut r = rng(21);
    let chain = random_sparse_chain(&mut r, 20, 2);
    let d = stationary_distribution(&chain).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    let mut model = BackwardModel::new(20, 1, 0.1).unwrap();
    walk(&chain, 100_000, 3, |s, next| {
        model.update(s, 0, chain.reward_of(s, next), next).unwrap();
    });
    for s in 0..20 {
        let est = model.state_distribution(s).unwrap();
        assert!(
            total_variation(&est, &row(rev.transition(), s)) < 0.02,
            "state {s}"
        );
    }
}

#[test]
fn n_step_is_matrix_power() {
    let mut r = rng(5);
    let chain = random_ergodic_chain(&mut r, 6, 0.9);
    let d = stationary_distribution(&chain).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    let three = n_step_backward(&rev, 3).unwrap();
    let p = rev.transition();
    for i in 0..6 {
        for j in 0..6 {
            let mut acc = 0.0;
            for k in 0..6 {
                for l in 0..6 {
                    acc += p[(i, k)] * p[(k, l)] * p[(l, j)];
                }
            }
            assert!((three[(i, j)] - acc).abs() < 1e-14);
        }
        assert!((three.row(i).sum() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn two_step_predecessors_of_last_level_are_first_level() {
    let spec = LeveledChainSpec::new(vec![4, 3, 2], 1);
    let chain = build_leveled_chain(&spec).unwrap().with_restarts();
    let d = stationary_distribution(&chain).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    let two = n_step_backward(&rev, 2).unwrap();
    for s in 7..9 {
        let mass: f64 = (0..4).map(|prev| two[(s, prev)]).sum();
        assert!((mass - 1.0).abs() < 1e-10);
    }
}

#[test]
fn lambda_model_converges_to_mixture() {
    let mut r = rng(13);
    let chain = random_sparse_chain(&mut r, 5, 1);
    let d = stationary_distribution(&chain).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    let lambda: f64 = 0.5;
    let mut oracle = DMatrix::zeros(5, 5);
    for n in 1..=30u32 {
        oracle += n_step_backward(&rev, n).unwrap() * ((1.0 - lambda) * lambda.powi(n as i32 - 1));
    }
    let mut model = LambdaModel::constant(5, lambda, 1.0).unwrap();
    let mut visits = [0u32; 5];
    walk(&chain, 1_000_000, 17, |s, next| {
        visits[next] += 1;
        model.set_step_size(1.0 / f64::from(visits[next]).powf(0.8));
        model.update(s, next).unwrap();
    });
    for s in 0..5 {
        let tv = total_variation(&row(model.table(), s), &row(&oracle, s));
        assert!(tv < 0.02, "state {s}: {tv}");
    }
}

#[test]
fn zero_lambda_matches_empirical_backward_model() {
    let mut r = rng(14);
    let chain = random_sparse_chain(&mut r, 6, 1);
    let mut lm = LambdaModel::constant(6, 0.0, 1.0).unwrap();
    let mut counts = BackwardModel::new(6, 1, 1.0).unwrap();
    walk(&chain, 400_000, 2, |s, next| {
        // Harmonic steps make the estimate a running mean of indicators.
        lm.set_step_size(1.0 / (counts.visits(next) + 1) as f64);
        lm.update(s, next).unwrap();
        counts.update(s, 0, 0.0, next).unwrap();
    });
    for s in 0..6 {
        let tv = total_variation(&row(lm.table(), s), &counts.state_distribution(s).unwrap());
        assert!(tv < 0.02, "state {s}: {tv}");
    }
}

/// Backward model given by a predecessor matrix and reward matrix `R[s~][s]`.
struct MatrixBackward {
    back: DMatrix<f64>,
    reward: DMatrix<f64>,
}

impl BackwardDynamics for MatrixBackward {
    fn n_states(&self) -> usize {
        self.back.nrows()
    }

    fn n_actions(&self) -> usize {
        1
    }

    fn visit_predecessors(&self, s: usize, visit: &mut dyn FnMut(usize, usize, f64, f64)) -> bool {
        for prev in 0..self.back.ncols() {
            if self.back[(s, prev)] > 0.0 {
                visit(prev, 0, self.back[(s, prev)], self.reward[(prev, s)]);
            }
        }
        true
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn one_hot_expectation_step_is_tabular_backward_update(seed in any::<u64>(), n in 2usize..=8) {
        let mut r = rng(seed);
        let chain = random_ergodic_chain(&mut r, n, 0.9);
        let d = stationary_distribution(&chain).unwrap();
        let back = reverse_chain(&chain, &d).unwrap().transition().clone();
        let theta = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let w: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let s = r.random_range(0..n);
        let alpha = r.random_range(0.05..1.0);
        let bundle = ExpectationModelBundle::new(DMatrix::identity(n, n), &back, theta.clone(), 0.9).unwrap();
        let mut x = DVector::zeros(n);
        x[s] = 1.0;
        let linear = expected_linear_backward_step(&DVector::from_vec(w.clone()), &x, &bundle, alpha).unwrap();
        let mut v = ValueTable::from_vec(w);
        let model = MatrixBackward { back, reward: theta };
        backward_planning_update_v(&mut v, &model, s, alpha, 0.9).unwrap();
        prop_assert!(max_abs_diff(linear.as_slice(), v.as_slice()) < 1e-12);
    }
}

#[test]
fn expectation_step_is_mean_of_sampled_updates() {
    let mut r = rng(77);
    let (n, dim) = (5, 3);
    let chain = random_ergodic_chain(&mut r, n, 0.9);
    let d = stationary_distribution(&chain).unwrap();
    let back = reverse_chain(&chain, &d).unwrap().transition().clone();
    let feats = DMatrix::from_fn(n, dim, |_, _| r.random_range(-1.0..1.0));
    let theta = DMatrix::from_fn(dim, dim, |_, _| r.random_range(-1.0..1.0));
    let w = DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0));
    let (gamma, alpha, s) = (0.9, 0.3, 2);
    let bundle = ExpectationModelBundle::new(feats.clone(), &back, theta.clone(), gamma).unwrap();
    let x: DVector<f64> = feats.row(s).transpose();
    let expected = expected_linear_backward_step(&w, &x, &bundle, alpha).unwrap() - &w;

    let draws = 1_000_000;
    let weights = row(&back, s);
    let mut sum = DVector::<f64>::zeros(dim);
    let mut sum_sq = DVector::<f64>::zeros(dim);
    for _ in 0..draws {
        let prev = sample_index(&weights, &mut r);
        let xp: DVector<f64> = feats.row(prev).transpose();
        let reward = xp.dot(&(&theta * &x));
        let delta = reward + gamma * w.dot(&x) - w.dot(&xp);
        let update = xp * (alpha * delta);
        sum_sq += update.component_mul(&update);
        sum += update;
    }
    let mean = &sum / draws as f64;
    for i in 0..dim {
        let var = sum_sq[i] / draws as f64 - mean[i] * mean[i];
        let se = (var / draws as f64).sqrt();
        assert!(
            (mean[i] - expected[i]).abs() < 3.0 * se.max(1e-15),
            "coordinate {i}"
        );
    }
}

fn random_params(
    r: &mut rand_chacha::ChaCha8Rng,
    n: usize,
    dim: usize,
    dir: ModelDirection,
) -> ExpFamilyModelParams {
    let feats: Vec<DVector<f64>> = (0..n * n)
        .map(|_| DVector::from_fn(dim, |_, _| r.random_range(-1.0..1.0)))
        .collect();
    let theta = DVector::from_fn(dim, |_, _| r.random_range(-2.0..2.0));
    ExpFamilyModelParams::new(theta, n, dir, |c, k| feats[k * n + c].clone()).unwrap()
}

fn random_batch(r: &mut rand_chacha::ChaCha8Rng, n: usize, len: usize) -> Vec<ObservedTransition> {
    (0..len)
        .map(|_| ObservedTransition {
            state: r.random_range(0..n),
            next_state: r.random_range(0..n),
        })
        .collect()
}

fn central_difference(theta: &DVector<f64>, f: impl Fn(&DVector<f64>) -> f64) -> DVector<f64> {
    let h = 1e-5;
    DVector::from_fn(theta.len(), |i, _| {
        let (mut up, mut down) = (theta.clone(), theta.clone());
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}

fn relative_error(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-12)
}

#[test]
fn mle_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let dir = if seed % 2 == 0 {
            ModelDirection::Backward
        } else {
            ModelDirection::Forward
        };
        let params = random_params(&mut r, 6, 4, dir);
        let batch = random_batch(&mut r, 6, 10);
        let g = mle_gradient(&params, &batch).unwrap();
        let fd = central_difference(&params.theta, |t| {
            params.negative_log_likelihood(t, &batch).unwrap()
        });
        assert!(relative_error(&g, &fd) < 1e-5, "seed {seed}");
    }
}

#[test]
fn planml_gradient_matches_finite_differences() {
    for dir in [ModelDirection::Backward, ModelDirection::Forward] {
        for seed in 0..20 {
            let mut r = rng(100 + seed);
            let n = 6;
            let params = random_params(&mut r, n, 4, dir);
            let batch = random_batch(&mut r, n, 8);
            let ctx = PlanningContext {
                reward: DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0)),
                values: ValueTable::from_vec((0..n).map(|_| r.random_range(-2.0..2.0)).collect()),
                value_features: DMatrix::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0)),
                discount: 0.9,
            };
            let g = planml_gradient(&params, &batch, &ctx).unwrap();
            let fd = central_difference(&params.theta, |t| {
                params.planml_loss(t, &batch, &ctx).unwrap()
            });
            assert!(relative_error(&g, &fd) < 1e-5, "{dir:?} seed {seed}");
        }
    }
}

#[test]
fn action_conditioned_model_is_bayes_posterior() {
    let mut r = rng(31);
    let mdp = random_mdp(&mut r, 5, 2, 0.0);
    let pi = random_policy(&mut r, 5, 2);
    let chain = induce_chain(&mdp, &pi).unwrap();
    let d = stationary_distribution(&chain).unwrap();
    let model = action_conditioned_backward(&mdp, &pi, &d).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    for s in 0..5 {
        let mut marginal = vec![0.0; 5];
        for a in 0..2 {
            let joint: Vec<f64> = (0..5)
                .map(|prev| d.get(prev) * pi.prob(prev, a) * mdp.prob(prev, a, s))
                .collect();
            let total: f64 = joint.iter().sum();
            let slice = model.slice(s, a).unwrap();
            for prev in 0..5 {
                assert!((slice[prev] - joint[prev] / total).abs() < 1e-12);
                marginal[prev] += model.action_marginal(s, a) * slice[prev];
            }
        }
        assert!(max_abs_diff(&marginal, &row(rev.transition(), s)) < 1e-9);
    }
}

#[test]
fn single_action_conditioning_is_state_backward_model() {
    let mut r = rng(32);
    let mdp = random_mdp(&mut r, 4, 1, 0.0);
    let pi = Policy::uniform(4, 1);
    let chain = induce_chain(&mdp, &pi).unwrap();
    let d = stationary_distribution(&chain).unwrap();
    let model = action_conditioned_backward(&mdp, &pi, &d).unwrap();
    let rev = reverse_chain(&chain, &d).unwrap();
    for s in 0..4 {
        assert!(max_abs_diff(model.slice(s, 0).unwrap(), &row(rev.transition(), s)) < 1e-9);
    }
}
