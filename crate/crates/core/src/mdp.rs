use crate::error::{invalid, Result};
use nalgebra::DMatrix;

pub(crate) const ROW_SUM_TOL: f64 = 1e-12;

pub(crate) fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if probs
        .iter()
        .any(|&p| !(0.0..=1.0).contains(&p) || p.is_nan())
    {
        return invalid(format!("{what}: probability outside [0, 1]"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return invalid(format!("{what}: sums to {total}, expected 1"));
    }
    Ok(())
}

pub(crate) fn check_discount(discount: f64) -> Result<()> {
    if !(discount > 0.0 && discount <= 1.0) {
        return invalid(format!("discount {discount} outside (0, 1]"));
    }
    Ok(())
}

/// Finite MDP with dense `P(s'|s,a)` and `r(s,a,s')` tensors.
///
/// Tensors are stored flat in `[s][a][s']` order.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMDP {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    discount: f64,
    terminal: Vec<bool>,
    initial: Vec<f64>,
}

impl TabularMDP {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        discount: f64,
        terminal: Vec<bool>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return invalid("an MDP needs at least one state and one action");
        }
        let len = n_states * n_actions * n_states;
        if transition.len() != len || reward.len() != len {
            return invalid(format!(
                "tensor length mismatch: expected {len}, got transition {} / reward {}",
                transition.len(),
                reward.len()
            ));
        }
        if terminal.len() != n_states || initial.len() != n_states {
            return invalid("terminal mask and initial distribution must have one entry per state");
        }
        check_discount(discount)?;
        for s in 0..n_states {
            for a in 0..n_actions {
                let start = (s * n_actions + a) * n_states;
                check_distribution(
                    &transition[start..start + n_states],
                    &format!("P(.|{s},{a})"),
                )?;
            }
        }
        check_distribution(&initial, "initial distribution")?;
        if reward.iter().any(|r| !r.is_finite()) {
            return invalid("reward tensor has non-finite entries");
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            discount,
            terminal,
            initial,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
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

    fn offset(&self, s: usize, a: usize) -> usize {
        (s * self.n_actions + a) * self.n_states
    }

    /// `P(.|s,a)` as a slice over successor states.
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let o = self.offset(s, a);
        &self.transition[o..o + self.n_states]
    }

    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let o = self.offset(s, a);
        &self.reward[o..o + self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[self.offset(s, a) + next]
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.offset(s, a) + next]
    }

    /// Terminal rows redirected to the initial distribution with zero reward,
    /// so that the chain a restarting agent experiences is ergodic.
    pub fn with_restarts(&self) -> Self {
        let mut out = self.clone();
        for s in (0..self.n_states).filter(|&s| self.terminal[s]) {
            for a in 0..self.n_actions {
                let o = self.offset(s, a);
                out.transition[o..o + self.n_states].copy_from_slice(&self.initial);
                out.reward[o..o + self.n_states].fill(0.0);
            }
        }
        out
    }
}

/// Stochastic policy `pi(a|s)`, one row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    probs: DMatrix<f64>,
}

impl Policy {
    pub fn new(probs: DMatrix<f64>) -> Result<Self> {
        for s in 0..probs.nrows() {
            let row: Vec<f64> = probs.row(s).iter().copied().collect();
            check_distribution(&row, &format!("pi(.|{s})"))?;
        }
        Ok(Self { probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            probs: DMatrix::from_element(n_states, n_actions, 1.0 / n_actions as f64),
        }
    }

    pub fn n_states(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.probs.ncols()
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[(s, a)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.probs
    }
}
