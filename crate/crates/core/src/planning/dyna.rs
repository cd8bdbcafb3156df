use super::true_model::{TrueBackwardModel, TrueForwardModel};
use super::updates::{
    backward_planning_update_q, backward_planning_update_v, forward_planning_update_q,
    forward_planning_update_v,
};
use super::{select_reference_state, Direction, PlannerConfig};
use crate::envs::Environment;
use crate::error::{invalid, Result};
use crate::learn::{epsilon_greedy, q_learning_update, td0_update, LinearSchedule};
use crate::models::{BackwardModel, ForwardModel};
use crate::rng::{stream, Stream};
use crate::tables::{QTable, ValueTable};

/// Model a Dyna agent plans with.
#[derive(Debug, Clone)]
pub enum Planner {
    LearnedForward(ForwardModel),
    LearnedBackward(BackwardModel),
    TrueForward(TrueForwardModel),
    TrueBackward(TrueBackwardModel),
}

impl Planner {
    /// Empty count-based model of the given direction.
    pub fn learned(
        direction: Direction,
        n_states: usize,
        n_actions: usize,
        discount: f64,
    ) -> Result<Self> {
        Ok(match direction {
            Direction::Forward => {
                Planner::LearnedForward(ForwardModel::new(n_states, n_actions, discount, 1.0)?)
            }
            Direction::Backward => {
                Planner::LearnedBackward(BackwardModel::new(n_states, n_actions, 1.0)?)
            }
        })
    }

    pub fn direction(&self) -> Direction {
        match self {
            Planner::LearnedForward(_) | Planner::TrueForward(_) => Direction::Forward,
            Planner::LearnedBackward(_) | Planner::TrueBackward(_) => Direction::Backward,
        }
    }

    fn observe(
        &mut self,
        s: usize,
        a: usize,
        reward: f64,
        next: usize,
        terminated: bool,
        step_size: f64,
    ) -> Result<()> {
        match self {
            Planner::LearnedForward(m) => {
                m.set_step_size(step_size);
                m.update(s, a, reward, next, terminated)
            }
            Planner::LearnedBackward(m) => {
                m.set_step_size(step_size);
                m.update(s, a, reward, next)
            }
            Planner::TrueForward(_) | Planner::TrueBackward(_) => Ok(()),
        }
    }

    fn plan_q(&self, q: &mut QTable, s_ref: usize, step_size: f64, discount: f64) -> Result<()> {
        match self {
            Planner::LearnedForward(m) => {
                forward_planning_update_q(q, m, s_ref, step_size).map(drop)
            }
            Planner::TrueForward(m) => forward_planning_update_q(q, m, s_ref, step_size).map(drop),
            Planner::LearnedBackward(m) => {
                backward_planning_update_q(q, m, s_ref, step_size, discount).map(drop)
            }
            Planner::TrueBackward(m) => {
                backward_planning_update_q(q, m, s_ref, step_size, discount).map(drop)
            }
        }
    }

    fn plan_v(
        &self,
        v: &mut ValueTable,
        s_ref: usize,
        step_size: f64,
        discount: f64,
    ) -> Result<()> {
        match self {
            Planner::LearnedForward(m) => {
                forward_planning_update_v(v, m, s_ref, step_size).map(drop)
            }
            Planner::TrueForward(m) => forward_planning_update_v(v, m, s_ref, step_size).map(drop),
            Planner::LearnedBackward(m) => {
                backward_planning_update_v(v, m, s_ref, step_size, discount).map(drop)
            }
            Planner::TrueBackward(m) => {
                backward_planning_update_v(v, m, s_ref, step_size, discount).map(drop)
            }
        }
    }
}

/// What advances the schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClock {
    PerStep,
    PerEpisode,
}

/// Step-size and exploration schedules. Planning shares `alpha` with
/// model-free learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub alpha: LinearSchedule,
    pub model_alpha: LinearSchedule,
    pub epsilon: LinearSchedule,
    pub clock: DecayClock,
}

impl Schedules {
    pub fn constant(alpha: f64, model_alpha: f64, epsilon: f64) -> Self {
        Self {
            alpha: LinearSchedule::constant(alpha),
            model_alpha: LinearSchedule::constant(model_alpha),
            epsilon: LinearSchedule::constant(epsilon),
            clock: DecayClock::PerStep,
        }
    }
}

fn check_planner(config: &PlannerConfig, planner: &Option<Planner>) -> Result<()> {
    config.validate()?;
    match planner {
        None if config.steps_per_interaction > 0 => {
            invalid("planning steps requested without a model")
        }
        Some(p) if p.direction() != config.direction => {
            invalid("planner model direction differs from the configured direction")
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRun {
    /// Metric after every interaction.
    pub curve: Vec<f64>,
    pub values: ValueTable,
}

/// Online value prediction under the environment's only action. After every
/// interaction `metric` is evaluated on the current estimate.
pub fn run_prediction<E: Environment>(
    env: &mut E,
    config: &PlannerConfig,
    mut planner: Option<Planner>,
    schedules: &Schedules,
    interactions: u64,
    seed: u64,
    mut metric: impl FnMut(&ValueTable) -> f64,
) -> Result<PredictionRun> {
    check_planner(config, &planner)?;
    if interactions == 0 {
        return invalid("need at least one interaction");
    }
    let mut env_rng = stream(seed, Stream::EnvStep);
    let mut v = ValueTable::zeros(env.n_states());
    let mut curve = Vec::with_capacity(interactions as usize);
    let mut s = env.reset(&mut env_rng);
    let mut episode = 0u64;
    for t in 0..interactions {
        let tick = match schedules.clock {
            DecayClock::PerStep => t,
            DecayClock::PerEpisode => episode,
        };
        let alpha = schedules.alpha.value(tick);
        let out = env.step(0, &mut env_rng)?;
        if let Some(p) = planner.as_mut() {
            p.observe(
                s,
                0,
                out.reward,
                out.next_state,
                out.terminated,
                schedules.model_alpha.value(tick),
            )?;
        }
        if config.model_free_learning_enabled {
            td0_update(&mut v, s, out.reward, out.discount, out.next_state, alpha)?;
        }
        if let Some(p) = planner.as_ref() {
            let s_ref = select_reference_state(s, out.next_state, config.reference);
            for _ in 0..config.steps_per_interaction {
                p.plan_v(&mut v, s_ref, alpha, env.discount())?;
            }
        }
        curve.push(metric(&v));
        if out.terminated || out.truncated {
            s = env.reset(&mut env_rng);
            episode += 1;
        } else {
            s = out.next_state;
        }
    }
    Ok(PredictionRun { curve, values: v })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRun {
    /// Steps taken in every episode.
    pub steps: Vec<usize>,
    /// Discounted return of every episode.
    pub returns: Vec<f64>,
    pub q: QTable,
}

/// Online control with epsilon-greedy acting for a fixed number of episodes.
pub fn run_control<E: Environment>(
    env: &mut E,
    config: &PlannerConfig,
    planner: Option<Planner>,
    schedules: &Schedules,
    episodes: u64,
    seed: u64,
) -> Result<ControlRun> {
    run_control_observed(env, config, planner, schedules, episodes, seed, |_, _| {})
}

/// [`run_control`] that hands the action values to `observer` after every
/// episode.
pub fn run_control_observed<E: Environment>(
    env: &mut E,
    config: &PlannerConfig,
    mut planner: Option<Planner>,
    schedules: &Schedules,
    episodes: u64,
    seed: u64,
    mut observer: impl FnMut(u64, &QTable),
) -> Result<ControlRun> {
    check_planner(config, &planner)?;
    if episodes == 0 {
        return invalid("need at least one episode");
    }
    let mut env_rng = stream(seed, Stream::EnvStep);
    let mut agent_rng = stream(seed, Stream::Agent);
    let mut q = QTable::zeros(env.n_states(), env.n_actions());
    let mut steps = Vec::with_capacity(episodes as usize);
    let mut returns = Vec::with_capacity(episodes as usize);
    let mut total_steps = 0u64;
    for episode in 0..episodes {
        let mut s = env.reset(&mut env_rng);
        let (mut n, mut ret, mut scale) = (0usize, 0.0, 1.0);
        loop {
            let tick = match schedules.clock {
                DecayClock::PerStep => total_steps,
                DecayClock::PerEpisode => episode,
            };
            let alpha = schedules.alpha.value(tick);
            let a = epsilon_greedy(&q, s, schedules.epsilon.value(tick), &mut agent_rng)?;
            let out = env.step(a, &mut env_rng)?;
            if let Some(p) = planner.as_mut() {
                p.observe(
                    s,
                    a,
                    out.reward,
                    out.next_state,
                    out.terminated,
                    schedules.model_alpha.value(tick),
                )?;
            }
            if config.model_free_learning_enabled {
                q_learning_update(
                    &mut q,
                    s,
                    a,
                    out.reward,
                    out.discount,
                    out.next_state,
                    alpha,
                )?;
            }
            if let Some(p) = planner.as_ref() {
                let s_ref = select_reference_state(s, out.next_state, config.reference);
                for _ in 0..config.steps_per_interaction {
                    p.plan_q(&mut q, s_ref, alpha, env.discount())?;
                }
            }
            n += 1;
            total_steps += 1;
            ret += scale * out.reward;
            scale *= env.discount();
            if out.terminated || out.truncated {
                break;
            }
            s = out.next_state;
        }
        steps.push(n);
        returns.push(ret);
        observer(episode, &q);
    }
    Ok(ControlRun { steps, returns, q })
}
