//! Markov reward processes and the algebra around them: inducing a chain from
//! an MDP and a policy, stationary distributions, time reversal and exact
//! policy evaluation.

use crate::error::{invalid, Error, Result};
use crate::mdp::{check_discount, check_distribution, Policy, TabularMDP};
use crate::tables::ValueTable;
use nalgebra::{DMatrix, DVector, RowDVector};

/// Markov reward process: `P(s'|s)` and `r(s,s')`, both indexed `(source, target)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularChain {
    transition: DMatrix<f64>,
    reward: DMatrix<f64>,
    discount: f64,
    terminal: Vec<bool>,
    initial: Vec<f64>,
}

impl TabularChain {
    /// Chain without terminal states and a uniform initial distribution.
    pub fn new(transition: DMatrix<f64>, reward: DMatrix<f64>, discount: f64) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 || transition.ncols() != n {
            return invalid(format!(
                "transition matrix must be square and non-empty, got {}x{}",
                transition.nrows(),
                transition.ncols()
            ));
        }
        if reward.shape() != transition.shape() {
            return invalid("reward matrix shape differs from transition matrix");
        }
        check_discount(discount)?;
        for s in 0..n {
            let row: Vec<f64> = transition.row(s).iter().copied().collect();
            check_distribution(&row, &format!("P(.|{s})"))?;
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return invalid("reward matrix has non-finite entries");
        }
        Ok(Self {
            transition,
            reward,
            discount,
            terminal: vec![false; n],
            initial: vec![1.0 / n as f64; n],
        })
    }

    pub fn with_terminal_mask(mut self, terminal: Vec<bool>) -> Result<Self> {
        if terminal.len() != self.n_states() {
            return invalid("terminal mask length differs from state count");
        }
        self.terminal = terminal;
        Ok(self)
    }

    pub fn with_initial_distribution(mut self, initial: Vec<f64>) -> Result<Self> {
        if initial.len() != self.n_states() {
            return invalid("initial distribution length differs from state count");
        }
        check_distribution(&initial, "initial distribution")?;
        self.initial = initial;
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reward(&self) -> &DMatrix<f64> {
        &self.reward
    }

    pub fn prob(&self, s: usize, next: usize) -> f64 {
        self.transition[(s, next)]
    }

    pub fn reward_of(&self, s: usize, next: usize) -> f64 {
        self.reward[(s, next)]
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    pub fn initial_distribution(&self) -> &[f64] {
        &self.initial
    }

    /// Expected one-step reward `sum_s' P(s'|s) r(s,s')`.
    pub fn expected_reward(&self, s: usize) -> f64 {
        self.transition
            .row(s)
            .iter()
            .zip(self.reward.row(s).iter())
            .map(|(p, r)| p * r)
            .sum()
    }

    /// Terminal rows redirected to the initial distribution with zero reward.
    /// The terminal mask is kept so that values at those states stay pinned.
    pub fn with_restarts(&self) -> Self {
        let mut out = self.clone();
        let n = self.n_states();
        for s in (0..n).filter(|&s| self.terminal[s]) {
            for t in 0..n {
                out.transition[(s, t)] = self.initial[t];
                out.reward[(s, t)] = 0.0;
            }
        }
        out
    }
}

/// Chain followed by an agent acting with `policy` in `mdp`.
pub fn induce_chain(mdp: &TabularMDP, policy: &Policy) -> Result<TabularChain> {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    if policy.n_states() != n || policy.n_actions() != m {
        return invalid(format!(
            "policy is {}x{}, MDP has {n} states and {m} actions",
            policy.n_states(),
            policy.n_actions()
        ));
    }
    let mut transition = DMatrix::<f64>::zeros(n, n);
    let mut weighted_reward = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        for a in 0..m {
            let pi = policy.prob(s, a);
            if pi == 0.0 {
                continue;
            }
            for (next, (&p, &r)) in mdp
                .transition_row(s, a)
                .iter()
                .zip(mdp.reward_row(s, a))
                .enumerate()
            {
                transition[(s, next)] += pi * p;
                weighted_reward[(s, next)] += pi * p * r;
            }
        }
    }
    let reward = DMatrix::from_fn(n, n, |s, t| {
        let p = transition[(s, t)];
        if p > 0.0 {
            weighted_reward[(s, t)] / p
        } else {
            0.0
        }
    });
    // Row sums drift by a few ulps when mixing actions.
    for s in 0..n {
        let total: f64 = transition.row(s).sum();
        transition.row_mut(s).unscale_mut(total);
    }
    TabularChain::new(transition, reward, mdp.discount())?
        .with_terminal_mask(mdp.terminal_mask().to_vec())?
        .with_initial_distribution(mdp.initial_distribution().to_vec())
}

/// Probability vector `d` with `d = dP`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
}

impl StationaryDistribution {
    /// Wraps a probability vector without checking stationarity.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        check_distribution_loose(&probs)?;
        Ok(Self { probs })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, s: usize) -> f64 {
        self.probs[s]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `||dP - d||_inf` against the given chain.
    pub fn residual(&self, chain: &TabularChain) -> f64 {
        stationary_residual(&RowDVector::from_row_slice(&self.probs), chain.transition())
    }
}

fn check_distribution_loose(probs: &[f64]) -> Result<()> {
    if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return invalid("stationary distribution has negative or non-finite entries");
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return invalid(format!("stationary distribution sums to {total}"));
    }
    Ok(())
}

fn stationary_residual(d: &RowDVector<f64>, p: &DMatrix<f64>) -> f64 {
    (d * p - d).amax()
}

/// Damped power iteration for stationary distributions.
///
/// Periodic chains (the leveled chains with restarts are periodic) make plain
/// power iteration oscillate. When the residual stops shrinking the solver
/// switches to the lazy chain `(1 - eta) P + eta I`, which has the same
/// stationary distribution but no periodicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarySolver {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Laziness applied from the first iteration.
    pub damping: f64,
    /// Laziness used once oscillation is detected.
    pub periodic_damping: f64,
}

impl Default for StationarySolver {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            tolerance: 1e-12,
            damping: 0.0,
            periodic_damping: 0.5,
        }
    }
}

const OSCILLATION_WINDOW: usize = 64;
const POLISH_ITERATIONS: usize = 64;

impl StationarySolver {
    pub fn solve(&self, chain: &TabularChain) -> Result<StationaryDistribution> {
        let p = chain.transition();
        let n = chain.n_states();
        let mut d = RowDVector::from_element(n, 1.0 / n as f64);
        let mut eta = self.damping;
        let mut window_start = f64::INFINITY;
        let mut residual = stationary_residual(&d, p);
        let mut iter = 0;
        while residual >= self.tolerance {
            if iter >= self.max_iterations {
                return Err(Error::NumericalFailure {
                    context: "stationary distribution",
                    residual,
                });
            }
            d = step(&d, p, eta);
            iter += 1;
            residual = stationary_residual(&d, p);
            if iter % OSCILLATION_WINDOW == 0 {
                if eta < self.periodic_damping && residual > 0.5 * window_start {
                    eta = self.periodic_damping;
                }
                window_start = residual;
            }
        }
        // Extra sweeps push the residual toward round-off so that rows of the
        // reversed chain sum to one at the 1e-12 level.
        for _ in 0..POLISH_ITERATIONS {
            let next = step(&d, p, eta);
            let r = stationary_residual(&next, p);
            if r >= residual {
                break;
            }
            d = next;
            residual = r;
        }
        Ok(StationaryDistribution {
            probs: d.iter().copied().collect(),
        })
    }
}

fn step(d: &RowDVector<f64>, p: &DMatrix<f64>, eta: f64) -> RowDVector<f64> {
    let mut next = d * p;
    if eta > 0.0 {
        next = next * (1.0 - eta) + d * eta;
    }
    let total = next.sum();
    next / total
}

/// Stationary distribution with the default solver settings.
pub fn stationary_distribution(chain: &TabularChain) -> Result<StationaryDistribution> {
    StationarySolver::default().solve(chain)
}

/// Time-reversed chain `diag(d)^-1 P^T diag(d)`.
///
/// Row `s` of the result is the distribution over predecessors of `s`, and the
/// reward of reversed edge `(s, s~)` is the forward reward `r(s~, s)` of the same
/// physical transition.
pub fn reverse_chain(chain: &TabularChain, d: &StationaryDistribution) -> Result<TabularChain> {
    let n = chain.n_states();
    if d.len() != n {
        return invalid(format!(
            "distribution has {} entries, chain has {n} states",
            d.len()
        ));
    }
    if let Some(state) = d.as_slice().iter().position(|&p| p <= 0.0) {
        return Err(Error::DegenerateDistribution { state });
    }
    let p = chain.transition();
    let mut reversed = DMatrix::from_fn(n, n, |s, pred| d.get(pred) * p[(pred, s)] / d.get(s));
    // Rows sum to 1 + (dP - d)(s) / d(s); normalising removes the solver residual.
    for s in 0..n {
        let total: f64 = reversed.row(s).sum();
        reversed.row_mut(s).unscale_mut(total);
    }
    let reward = chain.reward().transpose();
    TabularChain::new(reversed, reward, chain.discount())?
        .with_terminal_mask(chain.terminal_mask().to_vec())?
        .with_initial_distribution(chain.initial_distribution().to_vec())
}

const BELLMAN_TOL: f64 = 1e-10;

/// Solves `v = r_bar + gamma P v` with terminal values pinned to zero.
pub fn exact_value(chain: &TabularChain) -> Result<ValueTable> {
    let n = chain.n_states();
    let gamma = chain.discount();
    let p = chain.transition();
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in (0..n).filter(|&s| !chain.is_terminal(s)) {
        b[s] = chain.expected_reward(s);
        for t in (0..n).filter(|&t| !chain.is_terminal(t)) {
            a[(s, t)] -= gamma * p[(s, t)];
        }
    }
    let lu = a.clone().lu();
    let mut v = lu.solve(&b).ok_or(Error::NumericalFailure {
        context: "exact value (singular system)",
        residual: f64::INFINITY,
    })?;
    // One step of iterative refinement.
    let correction = lu.solve(&(&b - &a * &v));
    if let Some(c) = correction {
        v += c;
    }
    let values = ValueTable::from_vec(v.iter().copied().collect());
    let residual = bellman_residual(chain, &values);
    if residual.is_nan() || residual >= BELLMAN_TOL {
        return Err(Error::NumericalFailure {
            context: "exact value",
            residual,
        });
    }
    Ok(values)
}

/// `max_s |v(s) - r_bar(s) - gamma sum_s' P(s'|s) v(s')|` over non-terminal states,
/// with terminal successors contributing zero continuation.
pub fn bellman_residual(chain: &TabularChain, v: &ValueTable) -> f64 {
    let n = chain.n_states();
    let gamma = chain.discount();
    (0..n)
        .filter(|&s| !chain.is_terminal(s))
        .map(|s| {
            let continuation: f64 = (0..n)
                .filter(|&t| !chain.is_terminal(t))
                .map(|t| chain.prob(s, t) * v.get(t))
                .sum();
            (v.get(s) - chain.expected_reward(s) - gamma * continuation).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: &[&[f64]]) -> TabularChain {
        let n = rows.len();
        let p = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        TabularChain::new(p, DMatrix::zeros(n, n), 0.9).unwrap()
    }

    #[test]
    fn uniform_mixture_of_actions() {
        // P(.|s,0) = [1,0], P(.|s,1) = [0,1] for both states.
        let transition = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let mdp = TabularMDP::new(
            2,
            2,
            transition,
            vec![0.0; 8],
            0.9,
            vec![false; 2],
            vec![0.5, 0.5],
        )
        .unwrap();
        let c = induce_chain(&mdp, &Policy::uniform(2, 2)).unwrap();
        assert_eq!(c.prob(0, 0), 0.5);
        assert_eq!(c.prob(0, 1), 0.5);
    }

    #[test]
    fn single_action_chain_is_the_slice() {
        let transition = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let reward = vec![0.0, 2.0, 0.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0];
        let mdp = TabularMDP::new(
            3,
            1,
            transition.clone(),
            reward.clone(),
            0.5,
            vec![false; 3],
            vec![1.0, 0.0, 0.0],
        )
        .unwrap();
        let c = induce_chain(&mdp, &Policy::uniform(3, 1)).unwrap();
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(c.prob(s, t), transition[s * 3 + t]);
                assert_eq!(c.reward_of(s, t), reward[s * 3 + t]);
            }
        }
    }

    #[test]
    fn induce_rejects_mismatched_policy() {
        let mdp = TabularMDP::new(1, 1, vec![1.0], vec![0.0], 0.9, vec![false], vec![1.0]).unwrap();
        assert!(matches!(
            induce_chain(&mdp, &Policy::uniform(1, 2)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn stationary_of_symmetric_chains() {
        for rows in [[[0.5, 0.5], [0.5, 0.5]], [[0.25, 0.75], [0.75, 0.25]]] {
            let c = chain(&[&rows[0], &rows[1]]);
            let d = stationary_distribution(&c).unwrap();
            assert!((d.get(0) - 0.5).abs() < 1e-12);
            assert!((d.get(1) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_two_state() {
        let c = chain(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let d = stationary_distribution(&c).unwrap();
        assert!((d.get(0) - 5.0 / 6.0).abs() < 1e-12);
        assert!((d.get(1) - 1.0 / 6.0).abs() < 1e-12);
        assert!(d.residual(&c) < 1e-10);
    }

    #[test]
    fn stationary_of_periodic_cycle() {
        let c = chain(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let d = stationary_distribution(&c).unwrap();
        for s in 0..3 {
            assert!((d.get(s) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_reports_budget_exhaustion() {
        let c = chain(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let solver = StationarySolver {
            max_iterations: 1,
            ..Default::default()
        };
        assert!(matches!(
            solver.solve(&c),
            Err(Error::NumericalFailure { .. })
        ));
    }

    #[test]
    fn reversal_of_deterministic_cycle() {
        let c = chain(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let d = StationaryDistribution::from_probs(vec![1.0 / 3.0; 3]).unwrap();
        let r = reverse_chain(&c, &d).unwrap();
        // 0 <- 2, 1 <- 0, 2 <- 1
        assert_eq!(r.prob(0, 2), 1.0);
        assert_eq!(r.prob(1, 0), 1.0);
        assert_eq!(r.prob(2, 1), 1.0);
    }

    #[test]
    fn reversible_chains_reverse_to_themselves() {
        let c = chain(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let d = StationaryDistribution::from_probs(vec![5.0 / 6.0, 1.0 / 6.0]).unwrap();
        let r = reverse_chain(&c, &d).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                assert!((r.prob(s, t) - c.prob(s, t)).abs() < 1e-12);
            }
        }
        let sym = chain(&[&[0.2, 0.3, 0.5], &[0.3, 0.4, 0.3], &[0.5, 0.3, 0.2]]);
        let u = StationaryDistribution::from_probs(vec![1.0 / 3.0; 3]).unwrap();
        let r = reverse_chain(&sym, &u).unwrap();
        assert!((r.transition() - sym.transition()).amax() < 1e-15);
    }

    #[test]
    fn reversal_rejects_zero_mass() {
        let c = chain(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let d = StationaryDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            reverse_chain(&c, &d),
            Err(Error::DegenerateDistribution { state: 1 })
        );
    }

    #[test]
    fn reversed_rewards_follow_the_physical_transition() {
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 7.0, -1.0, 0.0]);
        let c = TabularChain::new(p, r, 0.9).unwrap();
        let d = stationary_distribution(&c).unwrap();
        let rev = reverse_chain(&c, &d).unwrap();
        // reversed edge 1 -> 0 stands for forward 0 -> 1
        assert_eq!(rev.reward_of(1, 0), 7.0);
        assert_eq!(rev.reward_of(0, 1), -1.0);
    }

    #[test]
    fn geometric_self_loop_value() {
        let c = TabularChain::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            0.99,
        )
        .unwrap();
        let v = exact_value(&c).unwrap();
        assert!((v.get(0) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn single_step_episode_value() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 5.0, 0.0, 0.0]);
        let c = TabularChain::new(p, r, 0.9)
            .unwrap()
            .with_terminal_mask(vec![false, true])
            .unwrap();
        let v = exact_value(&c).unwrap();
        assert!((v.get(0) - 5.0).abs() < 1e-12);
        assert_eq!(v.get(1), 0.0);
    }

    #[test]
    fn restart_rewiring() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 5.0, 0.0, 3.0]);
        let c = TabularChain::new(p, r, 1.0)
            .unwrap()
            .with_terminal_mask(vec![false, true])
            .unwrap()
            .with_initial_distribution(vec![1.0, 0.0])
            .unwrap()
            .with_restarts();
        assert_eq!(c.prob(1, 0), 1.0);
        assert_eq!(c.reward_of(1, 1), 0.0);
        assert!(c.is_terminal(1));
        let d = stationary_distribution(&c).unwrap();
        assert!((d.get(0) - 0.5).abs() < 1e-12);
    }
}
