//! Model-free learning rules and schedules.

use crate::error::{invalid, Result};
use crate::tables::{QTable, ValueTable};
use rand::Rng;

/// Linear interpolation from `start` to `end` over `horizon` ticks, then flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: u64,
}

impl LinearSchedule {
    pub fn new(start: f64, end: f64, horizon: u64) -> Self {
        Self {
            start,
            end,
            horizon,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(value, value, 0)
    }

    pub fn value(&self, t: u64) -> f64 {
        if t >= self.horizon {
            return self.end;
        }
        let frac = t as f64 / self.horizon as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// `v(s) += alpha (r + gamma v(s') - v(s))`
pub fn td0_update(
    v: &mut ValueTable,
    s: usize,
    reward: f64,
    discount: f64,
    next: usize,
    step_size: f64,
) -> Result<()> {
    v.check_state(s)?;
    v.check_state(next)?;
    let delta = reward + discount * v.get(next) - v.get(s);
    v.set(s, v.get(s) + step_size * delta);
    Ok(())
}

/// `q(s,a) += alpha (r + gamma max_a' q(s',a') - q(s,a))`; pass a zero
/// discount on termination.
pub fn q_learning_update(
    q: &mut QTable,
    s: usize,
    action: usize,
    reward: f64,
    discount: f64,
    next: usize,
    step_size: f64,
) -> Result<()> {
    q.check_pair(s, action)?;
    q.check_pair(next, 0)?;
    let bootstrap = if discount == 0.0 {
        0.0
    } else {
        discount * q.max_value(next)
    };
    let delta = reward + bootstrap - q.get(s, action);
    q.add(s, action, step_size * delta);
    Ok(())
}

/// Uniform random action with probability `epsilon`, otherwise a uniform
/// pick among the maximising actions.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    q: &QTable,
    s: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("epsilon {epsilon} outside [0, 1]"));
    }
    q.check_pair(s, 0)?;
    let m = q.n_actions();
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..m));
    }
    let best = q.max_value(s);
    let ties: Vec<usize> = (0..m).filter(|&a| q.get(s, a) == best).collect();
    Ok(match ties.len() {
        1 => ties[0],
        k => ties[rng.random_range(0..k)],
    })
}
