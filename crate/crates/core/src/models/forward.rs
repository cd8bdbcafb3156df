use crate::error::{invalid, Result};

/// Count-based estimate of `P(s'|s,a)` with regression heads for the
/// transition reward and the continuation discount of each successor.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModel {
    n_states: usize,
    n_actions: usize,
    discount: f64,
    step_size: f64,
    counts: Vec<u64>,
    totals: Vec<u64>,
    reward: Vec<f64>,
    continuation: Vec<f64>,
}

impl ForwardModel {
    /// Fresh model. Continuations start at `discount` until first observed.
    pub fn new(n_states: usize, n_actions: usize, discount: f64, step_size: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return invalid("model needs at least one state and one action");
        }
        if !(0.0..=1.0).contains(&discount) {
            return invalid(format!("discount {discount} outside [0, 1]"));
        }
        let cube = n_states * n_actions * n_states;
        Ok(Self {
            n_states,
            n_actions,
            discount,
            step_size,
            counts: vec![0; cube],
            totals: vec![0; n_states * n_actions],
            reward: vec![0.0; cube],
            continuation: vec![discount; n_states],
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn set_step_size(&mut self, step_size: f64) {
        self.step_size = step_size;
    }

    fn index(&self, s: usize, a: usize, next: usize) -> usize {
        (s * self.n_actions + a) * self.n_states + next
    }

    fn check(&self, s: usize, a: usize, next: usize) -> Result<()> {
        if s >= self.n_states || next >= self.n_states || a >= self.n_actions {
            return invalid(format!("transition ({s}, {a}, {next}) out of range"));
        }
        Ok(())
    }

    pub fn update(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: usize,
        terminated: bool,
    ) -> Result<()> {
        self.check(s, a, next)?;
        let i = self.index(s, a, next);
        self.counts[i] += 1;
        self.totals[s * self.n_actions + a] += 1;
        self.reward[i] += self.step_size * (reward - self.reward[i]);
        let target = if terminated { 0.0 } else { self.discount };
        self.continuation[next] += self.step_size * (target - self.continuation[next]);
        Ok(())
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.totals[s * self.n_actions + a]
    }

    pub fn is_visited(&self, s: usize, a: usize) -> bool {
        self.visits(s, a) > 0
    }

    pub fn count(&self, s: usize, a: usize, next: usize) -> u64 {
        self.counts[self.index(s, a, next)]
    }

    /// Maximum-likelihood probability; zero for unvisited pairs.
    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        let total = self.visits(s, a);
        if total == 0 {
            0.0
        } else {
            self.count(s, a, next) as f64 / total as f64
        }
    }

    /// Normalised successor distribution, `None` if `(s, a)` was never tried.
    pub fn distribution(&self, s: usize, a: usize) -> Option<Vec<f64>> {
        let total = self.visits(s, a);
        if total == 0 {
            return None;
        }
        let start = self.index(s, a, 0);
        Some(
            self.counts[start..start + self.n_states]
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
        )
    }

    pub fn reward(&self, s: usize, a: usize, next: usize) -> f64 {
        self.reward[self.index(s, a, next)]
    }

    pub fn continuation(&self, next: usize) -> f64 {
        self.continuation[next]
    }

    /// Observed successors of `(s, a)` as `(next, probability, reward, continuation)`.
    pub fn successors(
        &self,
        s: usize,
        a: usize,
    ) -> impl Iterator<Item = (usize, f64, f64, f64)> + '_ {
        let total = self.visits(s, a) as f64;
        let start = self.index(s, a, 0);
        self.counts[start..start + self.n_states]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(next, &c)| {
                (
                    next,
                    c as f64 / total,
                    self.reward[start + next],
                    self.continuation[next],
                )
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation() {
        let mut m = ForwardModel::new(3, 1, 0.9, 1.0).unwrap();
        m.update(0, 0, 1.0, 2, false).unwrap();
        assert_eq!(m.prob(0, 0, 2), 1.0);
        assert_eq!(m.reward(0, 0, 2), 1.0);
        assert_eq!(m.continuation(2), 0.9);
        assert!(m.distribution(1, 0).is_none());
    }

    #[test]
    fn terminal_observation_zeroes_continuation() {
        let mut m = ForwardModel::new(2, 2, 0.9, 1.0).unwrap();
        m.update(0, 1, 0.0, 1, true).unwrap();
        assert_eq!(m.continuation(1), 0.0);
        assert_eq!(m.continuation(0), 0.9);
    }

    #[test]
    fn reward_is_exponential_average() {
        let mut m = ForwardModel::new(2, 1, 1.0, 0.5).unwrap();
        m.update(0, 0, 4.0, 1, false).unwrap();
        m.update(0, 0, 0.0, 1, false).unwrap();
        assert_eq!(m.reward(0, 0, 1), 1.0);
        m.update(0, 0, 0.0, 0, false).unwrap();
        let succ: Vec<_> = m.successors(0, 0).collect();
        assert_eq!(succ.len(), 2);
        assert!((succ[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(m.update(0, 1, 0.0, 0, false).is_err());
    }
}
