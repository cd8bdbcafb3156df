use crate::error::{invalid, Result};
use crate::rng::sample_index;
use rand::Rng;

/// Count-based estimate of the joint predecessor distribution `P(s~, a~ | s)`
/// with a regression head for the two-ended reward `r(s~, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardModel {
    n_states: usize,
    n_actions: usize,
    step_size: f64,
    /// Indexed `[s][s~][a~]`.
    counts: Vec<u64>,
    totals: Vec<u64>,
    /// Indexed `[s][s~]`.
    reward: Vec<f64>,
}

/// Result of querying a destination state.
#[derive(Debug, Clone, PartialEq)]
pub enum BackwardQuery {
    /// The state was never observed as a destination.
    Unvisited,
    /// Joint distribution over `(s~, a~)`, stored `[s~][a~]`.
    Visited(Vec<f64>),
}

impl BackwardModel {
    pub fn new(n_states: usize, n_actions: usize, step_size: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return invalid("model needs at least one state and one action");
        }
        Ok(Self {
            n_states,
            n_actions,
            step_size,
            counts: vec![0; n_states * n_states * n_actions],
            totals: vec![0; n_states],
            reward: vec![0.0; n_states * n_states],
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

    fn block(&self, s: usize) -> std::ops::Range<usize> {
        let width = self.n_states * self.n_actions;
        s * width..(s + 1) * width
    }

    /// Records the transition `(s~, a~) -> s` with reward `r`.
    pub fn update(&mut self, prev: usize, action: usize, reward: f64, s: usize) -> Result<()> {
        if prev >= self.n_states || s >= self.n_states || action >= self.n_actions {
            return invalid(format!("transition ({prev}, {action}, {s}) out of range"));
        }
        let i = (s * self.n_states + prev) * self.n_actions + action;
        self.counts[i] += 1;
        self.totals[s] += 1;
        let j = s * self.n_states + prev;
        self.reward[j] += self.step_size * (reward - self.reward[j]);
        Ok(())
    }

    pub fn visits(&self, s: usize) -> u64 {
        self.totals[s]
    }

    pub fn is_visited(&self, s: usize) -> bool {
        self.totals[s] > 0
    }

    pub fn count(&self, prev: usize, action: usize, s: usize) -> u64 {
        self.counts[(s * self.n_states + prev) * self.n_actions + action]
    }

    pub fn prob(&self, prev: usize, action: usize, s: usize) -> f64 {
        match self.totals[s] {
            0 => 0.0,
            total => self.count(prev, action, s) as f64 / total as f64,
        }
    }

    /// `r(s~, s)` estimate.
    pub fn reward(&self, prev: usize, s: usize) -> f64 {
        self.reward[s * self.n_states + prev]
    }

    pub fn query(&self, s: usize) -> BackwardQuery {
        let total = self.totals[s];
        if total == 0 {
            return BackwardQuery::Unvisited;
        }
        BackwardQuery::Visited(
            self.counts[self.block(s)]
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
        )
    }

    /// State-only predecessor distribution `P(s~|s)`, marginalised over actions.
    pub fn state_distribution(&self, s: usize) -> Option<Vec<f64>> {
        let total = self.totals[s];
        if total == 0 {
            return None;
        }
        Some(
            self.counts[self.block(s)]
                .chunks(self.n_actions)
                .map(|c| c.iter().sum::<u64>() as f64 / total as f64)
                .collect(),
        )
    }

    /// Observed predecessors of `s` as `(s~, a~, probability, reward)`.
    pub fn predecessors(&self, s: usize) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        let total = self.totals[s] as f64;
        let m = self.n_actions;
        let start = self.block(s).start;
        self.counts[self.block(s)]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| {
                let prev = i / m;
                (prev, i % m, c as f64 / total, self.reward[start / m + prev])
            })
    }

    /// Draws `(s~, a~)`, or `None` when `s` is unvisited.
    pub fn sample_predecessor<R: Rng + ?Sized>(
        &self,
        s: usize,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        if self.totals[s] == 0 {
            return None;
        }
        let weights: Vec<f64> = self.counts[self.block(s)]
            .iter()
            .map(|&c| c as f64)
            .collect();
        let i = sample_index(&weights, rng);
        Some((i / self.n_actions, i % self.n_actions))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn count_ratios() {
        let mut m = BackwardModel::new(3, 1, 1.0).unwrap();
        m.update(0, 0, 1.0, 2).unwrap();
        m.update(1, 0, 2.0, 2).unwrap();
        m.update(1, 0, 2.0, 2).unwrap();
        assert!((m.prob(0, 0, 2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.prob(1, 0, 2) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.reward(1, 2), 2.0);
        assert_eq!(m.query(0), BackwardQuery::Unvisited);
        let preds: Vec<_> = m.predecessors(2).collect();
        assert_eq!(preds.len(), 2);
        assert_eq!((preds[1].0, preds[1].1, preds[1].3), (1, 0, 2.0));
    }

    #[test]
    fn single_predecessor_is_always_sampled() {
        let mut m = BackwardModel::new(4, 2, 1.0).unwrap();
        m.update(3, 1, 0.0, 0).unwrap();
        let mut rng = stream(1, Stream::Agent);
        for _ in 0..100 {
            assert_eq!(m.sample_predecessor(0, &mut rng), Some((3, 1)));
        }
        assert_eq!(m.sample_predecessor(1, &mut rng), None);
        assert_eq!(
            m.query(0),
            BackwardQuery::Visited({
                let mut p = vec![0.0; 8];
                p[7] = 1.0;
                p
            })
        );
    }

    #[test]
    fn sampling_frequencies() {
        let mut m = BackwardModel::new(3, 1, 1.0).unwrap();
        m.update(0, 0, 0.0, 2).unwrap();
        m.update(1, 0, 0.0, 2).unwrap();
        m.update(1, 0, 0.0, 2).unwrap();
        let mut rng = stream(7, Stream::Agent);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| m.sample_predecessor(2, &mut rng) == Some((0, 0)))
            .count();
        assert!((hits as f64 / draws as f64 - 1.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn marginal_over_actions() {
        let mut m = BackwardModel::new(2, 2, 1.0).unwrap();
        m.update(0, 0, 0.0, 1).unwrap();
        m.update(0, 1, 0.0, 1).unwrap();
        m.update(1, 1, 0.0, 1).unwrap();
        m.update(1, 1, 0.0, 1).unwrap();
        assert_eq!(m.state_distribution(1), Some(vec![0.5, 0.5]));
        assert!(m.update(2, 0, 0.0, 0).is_err());
    }
}
