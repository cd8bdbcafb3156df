use super::updates::{BackwardDynamics, ForwardDynamics};
use crate::chain::{induce_chain, reverse_chain, stationary_distribution, TabularChain};
use crate::error::Result;
use crate::mdp::{Policy, TabularMDP};

/// `(other endpoint, action, probability, reward, continuation)`
type Edge = (usize, usize, f64, f64, f64);

/// Exact successor law of an MDP or chain. Terminal states have no
/// successors; entering a terminal state has zero continuation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueForwardModel {
    n_states: usize,
    n_actions: usize,
    /// Indexed `[s][a]`.
    rows: Vec<Vec<Edge>>,
}

impl TrueForwardModel {
    pub fn from_mdp(mdp: &TabularMDP) -> Self {
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let mut rows = Vec::with_capacity(n * m);
        for s in 0..n {
            for a in 0..m {
                let row = if mdp.is_terminal(s) {
                    Vec::new()
                } else {
                    mdp.transition_row(s, a)
                        .iter()
                        .zip(mdp.reward_row(s, a))
                        .enumerate()
                        .filter(|(_, (&p, _))| p > 0.0)
                        .map(|(next, (&p, &r))| {
                            let c = if mdp.is_terminal(next) {
                                0.0
                            } else {
                                mdp.discount()
                            };
                            (next, a, p, r, c)
                        })
                        .collect()
                };
                rows.push(row);
            }
        }
        Self {
            n_states: n,
            n_actions: m,
            rows,
        }
    }

    pub fn from_chain(chain: &TabularChain) -> Self {
        let n = chain.n_states();
        let rows = (0..n)
            .map(|s| {
                if chain.is_terminal(s) {
                    return Vec::new();
                }
                (0..n)
                    .filter(|&next| chain.prob(s, next) > 0.0)
                    .map(|next| {
                        let c = if chain.is_terminal(next) {
                            0.0
                        } else {
                            chain.discount()
                        };
                        (next, 0, chain.prob(s, next), chain.reward_of(s, next), c)
                    })
                    .collect()
            })
            .collect();
        Self {
            n_states: n,
            n_actions: 1,
            rows,
        }
    }
}

impl ForwardDynamics for TrueForwardModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn visit_successors(
        &self,
        s: usize,
        a: usize,
        visit: &mut dyn FnMut(usize, f64, f64, f64),
    ) -> bool {
        let row = &self.rows[s * self.n_actions + a];
        for &(next, _, p, r, c) in row {
            visit(next, p, r, c);
        }
        !row.is_empty()
    }
}

/// Exact on-policy predecessor law. The stationary distribution is taken on
/// the restart-rewired chain; restart edges out of terminal states are not
/// real transitions and are dropped, so states entered only by restarts have
/// no predecessors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueBackwardModel {
    n_states: usize,
    n_actions: usize,
    /// Indexed by destination.
    rows: Vec<Vec<Edge>>,
}

impl TrueBackwardModel {
    pub fn from_chain(chain: &TabularChain) -> Result<Self> {
        let restarted = chain.with_restarts();
        let d = stationary_distribution(&restarted)?;
        let reversed = reverse_chain(&restarted, &d)?;
        let n = chain.n_states();
        let rows = (0..n)
            .map(|s| {
                let edges: Vec<Edge> = (0..n)
                    .filter(|&prev| !chain.is_terminal(prev) && reversed.prob(s, prev) > 0.0)
                    .map(|prev| {
                        (
                            prev,
                            0,
                            reversed.prob(s, prev),
                            chain.reward_of(prev, s),
                            0.0,
                        )
                    })
                    .collect();
                normalised(edges)
            })
            .collect();
        Ok(Self {
            n_states: n,
            n_actions: 1,
            rows,
        })
    }

    /// Joint predecessor law `d(s~) pi(a~|s~) P(s|s~,a~) / d(s)`.
    pub fn from_mdp(mdp: &TabularMDP, policy: &Policy) -> Result<Self> {
        let restarted = mdp.with_restarts();
        let d = stationary_distribution(&induce_chain(&restarted, policy)?)?;
        let (n, m) = (mdp.n_states(), mdp.n_actions());
        let mut rows = vec![Vec::new(); n];
        for prev in (0..n).filter(|&p| !mdp.is_terminal(p)) {
            for a in 0..m {
                let w = d.get(prev) * policy.prob(prev, a);
                if w == 0.0 {
                    continue;
                }
                for (s, (&p, &r)) in mdp
                    .transition_row(prev, a)
                    .iter()
                    .zip(mdp.reward_row(prev, a))
                    .enumerate()
                {
                    if p > 0.0 {
                        rows[s].push((prev, a, w * p, r, 0.0));
                    }
                }
            }
        }
        Ok(Self {
            n_states: n,
            n_actions: m,
            rows: rows.into_iter().map(normalised).collect(),
        })
    }
}

fn normalised(mut edges: Vec<Edge>) -> Vec<Edge> {
    let total: f64 = edges.iter().map(|e| e.2).sum();
    for e in &mut edges {
        e.2 /= total;
    }
    edges
}

impl BackwardDynamics for TrueBackwardModel {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn visit_predecessors(&self, s: usize, visit: &mut dyn FnMut(usize, usize, f64, f64)) -> bool {
        let row = &self.rows[s];
        for &(prev, a, p, r, _) in row {
            visit(prev, a, p, r);
        }
        !row.is_empty()
    }
}
