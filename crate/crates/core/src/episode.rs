//! Offline forward-view / backward-view TD corrections over a finished episode.

use crate::error::{invalid, Result};
use crate::tables::ValueTable;

/// One `(S_t, A_t, R_{t+1}, gamma_{t+1}, S_{t+1})` tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    /// Continuation discount; zero exactly when `terminal` is set.
    pub discount: f64,
    pub next_state: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    steps: Vec<Transition>,
}

impl Episode {
    pub fn new(steps: Vec<Transition>) -> Result<Self> {
        if steps.is_empty() {
            return invalid("episode has no transitions");
        }
        for (t, pair) in steps.windows(2).enumerate() {
            if pair[0].next_state != pair[1].state {
                return invalid(format!("transition {t} does not chain into {}", t + 1));
            }
        }
        for (t, step) in steps.iter().enumerate() {
            if step.terminal != (step.discount == 0.0) {
                return invalid(format!(
                    "transition {t}: discount must be zero exactly at termination"
                ));
            }
            if step.terminal && t + 1 != steps.len() {
                return invalid(format!("transition {t} terminates before the end"));
            }
            if !(0.0..=1.0).contains(&step.discount) {
                return invalid(format!(
                    "transition {t}: discount {} outside [0, 1]",
                    step.discount
                ));
            }
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Transition] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn is_terminated(&self) -> bool {
        self.steps.last().is_some_and(|s| s.terminal)
    }
}

/// Accumulated parameter corrections of one offline pass.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineCorrections {
    /// `alpha sum_t (G_t - v(S_t)) grad v(S_t)`
    pub forward: Vec<f64>,
    /// `alpha sum_t delta_t sum_{k<=t} gamma^{t-k} grad v(S_k)`
    pub backward: Vec<f64>,
}

/// Computes the forward-view (Monte Carlo return) and backward-view
/// (eligibility trace) corrections for tabular values held fixed over the
/// episode. The two totals coincide for terminating episodes.
pub fn episode_offline_updates(
    episode: &Episode,
    values: &ValueTable,
    step_size: f64,
) -> Result<OfflineCorrections> {
    if !episode.is_terminated() {
        return invalid("offline corrections need a terminating episode");
    }
    for step in episode.steps() {
        values.check_state(step.state)?;
        values.check_state(step.next_state)?;
    }
    let n = values.len();
    let steps = episode.steps();

    // Forward view: returns computed right to left.
    let mut forward = vec![0.0; n];
    let mut ret = 0.0;
    for step in steps.iter().rev() {
        ret = step.reward + step.discount * ret;
        forward[step.state] += step_size * (ret - values.get(step.state));
    }

    // Backward view: accumulating trace over the one-hot gradients.
    let mut backward = vec![0.0; n];
    let mut trace = vec![0.0; n];
    let mut decay = 1.0;
    for step in steps {
        for e in trace.iter_mut() {
            *e *= decay;
        }
        trace[step.state] += 1.0;
        let delta =
            step.reward + step.discount * values.get(step.next_state) - values.get(step.state);
        for (b, e) in backward.iter_mut().zip(&trace) {
            *b += step_size * delta * e;
        }
        decay = step.discount;
    }
    Ok(OfflineCorrections { forward, backward })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(state: usize, reward: f64, discount: f64, next_state: usize) -> Transition {
        Transition {
            state,
            action: 0,
            reward,
            discount,
            next_state,
            terminal: discount == 0.0,
        }
    }

    #[test]
    fn single_transition() {
        let ep = Episode::new(vec![step(0, 2.0, 0.0, 1)]).unwrap();
        let v = ValueTable::from_vec(vec![0.5, 3.0]);
        let c = episode_offline_updates(&ep, &v, 0.1).unwrap();
        let expected = 0.1 * (2.0 - 0.5);
        assert!((c.forward[0] - expected).abs() < 1e-15);
        assert!((c.backward[0] - expected).abs() < 1e-15);
        assert_eq!(c.forward[1], 0.0);
    }

    #[test]
    fn two_transitions_by_hand() {
        // S0=0 -r=1-> S1=1 -r=2, terminal-> 2 ; gamma = 0.5, v = (1, 4, 9)
        let ep = Episode::new(vec![step(0, 1.0, 0.5, 1), step(1, 2.0, 0.0, 2)]).unwrap();
        let v = ValueTable::from_vec(vec![1.0, 4.0, 9.0]);
        let alpha = 0.2;
        let c = episode_offline_updates(&ep, &v, alpha).unwrap();
        // G0 = 1 + 0.5 * 2 = 2, G1 = 2
        let fwd0 = alpha * (2.0 - 1.0);
        let fwd1 = alpha * (2.0 - 4.0);
        // delta0 = 1 + 0.5*4 - 1 = 2, delta1 = 2 - 4 = -2
        let bwd0 = alpha * (2.0 + 0.5 * -2.0);
        let bwd1 = alpha * -2.0;
        assert!((c.forward[0] - fwd0).abs() < 1e-15);
        assert!((c.forward[1] - fwd1).abs() < 1e-15);
        assert!((c.backward[0] - bwd0).abs() < 1e-15);
        assert!((c.backward[1] - bwd1).abs() < 1e-15);
    }

    #[test]
    fn rejects_unterminated_and_broken_episodes() {
        let ep = Episode::new(vec![step(0, 1.0, 0.9, 1)]).unwrap();
        assert!(episode_offline_updates(&ep, &ValueTable::zeros(2), 0.1).is_err());
        assert!(Episode::new(vec![step(0, 1.0, 0.9, 1), step(2, 0.0, 0.0, 0)]).is_err());
        assert!(Episode::new(vec![step(0, 1.0, 0.0, 1), step(1, 0.0, 0.0, 0)]).is_err());
        assert!(Episode::new(vec![]).is_err());
    }
}
