use crate::error::{invalid, Result};
use crate::models::{BackwardModel, ForwardModel};
use crate::tables::{QTable, ValueTable};

/// Successor predictions of a forward model.
pub trait ForwardDynamics {
    fn n_states(&self) -> usize;

    fn n_actions(&self) -> usize;

    /// Calls `visit(next, prob, reward, continuation)` for every predicted
    /// successor of `(s, a)`. Returns `false` without calling when the model
    /// has nothing to say about the pair.
    fn visit_successors(
        &self,
        s: usize,
        a: usize,
        visit: &mut dyn FnMut(usize, f64, f64, f64),
    ) -> bool;
}

/// Predecessor predictions of a backward model.
pub trait BackwardDynamics {
    fn n_states(&self) -> usize;

    fn n_actions(&self) -> usize;

    /// Calls `visit(prev, action, prob, reward)` for every predicted
    /// predecessor pair of `s`. Returns `false` when `s` is unvisited.
    fn visit_predecessors(&self, s: usize, visit: &mut dyn FnMut(usize, usize, f64, f64)) -> bool;
}

impl ForwardDynamics for ForwardModel {
    fn n_states(&self) -> usize {
        ForwardModel::n_states(self)
    }

    fn n_actions(&self) -> usize {
        ForwardModel::n_actions(self)
    }

    fn visit_successors(
        &self,
        s: usize,
        a: usize,
        visit: &mut dyn FnMut(usize, f64, f64, f64),
    ) -> bool {
        if !self.is_visited(s, a) {
            return false;
        }
        for (next, p, r, c) in self.successors(s, a) {
            visit(next, p, r, c);
        }
        true
    }
}

impl BackwardDynamics for BackwardModel {
    fn n_states(&self) -> usize {
        BackwardModel::n_states(self)
    }

    fn n_actions(&self) -> usize {
        BackwardModel::n_actions(self)
    }

    fn visit_predecessors(&self, s: usize, visit: &mut dyn FnMut(usize, usize, f64, f64)) -> bool {
        if !self.is_visited(s) {
            return false;
        }
        for (prev, a, p, r) in self.predecessors(s) {
            visit(prev, a, p, r);
        }
        true
    }
}

fn check_q(q: &QTable, n_states: usize, n_actions: usize, s_ref: usize) -> Result<()> {
    if q.n_states() != n_states || q.n_actions() != n_actions {
        return invalid("q-table and model dimensions disagree");
    }
    if s_ref >= n_states {
        return invalid(format!("reference state {s_ref} out of range"));
    }
    Ok(())
}

fn check_v(v: &ValueTable, n_states: usize, s_ref: usize) -> Result<()> {
    if v.len() != n_states {
        return invalid("value table and model dimensions disagree");
    }
    if s_ref >= n_states {
        return invalid(format!("reference state {s_ref} out of range"));
    }
    Ok(())
}

/// Expected forward backup of every modelled action at `s_ref`. Returns
/// the number of actions updated.
pub fn forward_planning_update_q<M: ForwardDynamics + ?Sized>(
    q: &mut QTable,
    model: &M,
    s_ref: usize,
    step_size: f64,
) -> Result<usize> {
    check_q(q, model.n_states(), model.n_actions(), s_ref)?;
    let mut targets = Vec::with_capacity(model.n_actions());
    for a in 0..model.n_actions() {
        let mut target = 0.0;
        let frozen = &*q;
        if model.visit_successors(s_ref, a, &mut |next, p, r, c| {
            let boot = if c == 0.0 {
                0.0
            } else {
                c * frozen.max_value(next)
            };
            target += p * (r + boot);
        }) {
            targets.push((a, target));
        }
    }
    for &(a, target) in &targets {
        let old = q.get(s_ref, a);
        q.set(s_ref, a, old + step_size * (target - old));
    }
    Ok(targets.len())
}

/// Expected backward backup of every modelled predecessor pair of `s_ref`,
/// each weighted by its predecessor probability. Returns `false` when
/// `s_ref` has no predecessors in the model.
pub fn backward_planning_update_q<M: BackwardDynamics + ?Sized>(
    q: &mut QTable,
    model: &M,
    s_ref: usize,
    step_size: f64,
    discount: f64,
) -> Result<bool> {
    check_q(q, model.n_states(), model.n_actions(), s_ref)?;
    let boot = discount * q.max_value(s_ref);
    Ok(model.visit_predecessors(s_ref, &mut |prev, a, p, r| {
        let old = q.get(prev, a);
        q.set(prev, a, old + step_size * p * (r + boot - old));
    }))
}

/// Expected forward backup of `v(s_ref)` under the model's action 0.
pub fn forward_planning_update_v<M: ForwardDynamics + ?Sized>(
    v: &mut ValueTable,
    model: &M,
    s_ref: usize,
    step_size: f64,
) -> Result<bool> {
    check_v(v, model.n_states(), s_ref)?;
    let mut target = 0.0;
    let frozen = &*v;
    let visited = model.visit_successors(s_ref, 0, &mut |next, p, r, c| {
        let boot = if c == 0.0 { 0.0 } else { c * frozen.get(next) };
        target += p * (r + boot);
    });
    if visited {
        let old = v.get(s_ref);
        v.set(s_ref, old + step_size * (target - old));
    }
    Ok(visited)
}

/// Expected backward backup of every predecessor `s~` of `s_ref`,
/// marginalised over predecessor actions.
pub fn backward_planning_update_v<M: BackwardDynamics + ?Sized>(
    v: &mut ValueTable,
    model: &M,
    s_ref: usize,
    step_size: f64,
    discount: f64,
) -> Result<bool> {
    check_v(v, model.n_states(), s_ref)?;
    let boot = discount * v.get(s_ref);
    if model.n_actions() == 1 {
        return Ok(model.visit_predecessors(s_ref, &mut |prev, _, p, r| {
            let old = v.get(prev);
            v.set(prev, old + step_size * p * (r + boot - old));
        }));
    }
    let mut mass = vec![0.0; model.n_states()];
    let mut reward = vec![0.0; model.n_states()];
    let visited = model.visit_predecessors(s_ref, &mut |prev, _, p, r| {
        mass[prev] += p;
        reward[prev] += p * r;
    });
    for (prev, (&p, &pr)) in mass.iter().zip(&reward).enumerate() {
        if p > 0.0 {
            let old = v.get(prev);
            v.set(prev, old + step_size * p * (pr / p + boot - old));
        }
    }
    Ok(visited)
}

/// Backup of one sampled predecessor `prev` of `s_ref`.
pub fn backward_sample_update_v(
    v: &mut ValueTable,
    prev: usize,
    reward: f64,
    s_ref: usize,
    step_size: f64,
    discount: f64,
) -> Result<()> {
    v.check_state(prev)?;
    v.check_state(s_ref)?;
    let old = v.get(prev);
    v.set(
        prev,
        old + step_size * (reward + discount * v.get(s_ref) - old),
    );
    Ok(())
}
