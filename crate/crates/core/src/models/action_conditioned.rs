use crate::chain::StationaryDistribution;
use crate::error::{invalid, Result};
use crate::mdp::{Policy, TabularMDP};

/// `P(s~ | s, a~)`: predecessor state given the destination and the action
/// taken in the predecessor, under the stationary on-policy law.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionConditionedBackward {
    n_states: usize,
    n_actions: usize,
    /// `pi~(a~|s)`, indexed `[s][a~]`.
    marginal: Vec<f64>,
    /// Indexed `[s][a~][s~]`.
    table: Vec<f64>,
}

impl ActionConditionedBackward {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Backward action marginal `pi~(a~|s)`.
    pub fn action_marginal(&self, s: usize, action: usize) -> f64 {
        self.marginal[s * self.n_actions + action]
    }

    /// Distribution over `s~`, or `None` (undefined) where `pi~(a~|s) = 0`.
    pub fn slice(&self, s: usize, action: usize) -> Option<&[f64]> {
        if self.action_marginal(s, action) == 0.0 {
            return None;
        }
        let start = (s * self.n_actions + action) * self.n_states;
        Some(&self.table[start..start + self.n_states])
    }
}

pub fn action_conditioned_backward(
    mdp: &TabularMDP,
    policy: &Policy,
    d: &StationaryDistribution,
) -> Result<ActionConditionedBackward> {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    if policy.n_states() != n || policy.n_actions() != m || d.len() != n {
        return invalid("policy, distribution and MDP dimensions disagree");
    }
    if let Some(s) = (0..n).find(|&s| d.get(s) <= 0.0) {
        return invalid(format!("stationary mass at state {s} must be positive"));
    }
    // Joint weights d(s~) pi(a~|s~) P(s|s~,a~), accumulated per (s, a~).
    let mut table = vec![0.0; n * m * n];
    let mut marginal = vec![0.0; n * m];
    for prev in 0..n {
        for a in 0..m {
            let w = d.get(prev) * policy.prob(prev, a);
            if w == 0.0 {
                continue;
            }
            for (s, &p) in mdp.transition_row(prev, a).iter().enumerate() {
                table[(s * m + a) * n + prev] += w * p;
            }
        }
    }
    for s in 0..n {
        for a in 0..m {
            let slice = &mut table[(s * m + a) * n..(s * m + a + 1) * n];
            let mass: f64 = slice.iter().sum();
            marginal[s * m + a] = mass / d.get(s);
            if mass > 0.0 {
                slice.iter_mut().for_each(|x| *x /= mass);
            }
        }
    }
    // Ratios of joint to destination mass drift by round-off; renormalise.
    for s in 0..n {
        let total: f64 = marginal[s * m..(s + 1) * m].iter().sum();
        if total > 0.0 {
            marginal[s * m..(s + 1) * m]
                .iter_mut()
                .for_each(|x| *x /= total);
        }
    }
    Ok(ActionConditionedBackward {
        n_states: n,
        n_actions: m,
        marginal,
        table,
    })
}
