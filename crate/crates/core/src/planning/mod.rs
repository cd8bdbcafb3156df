//! Forward and backward planning updates and the online Dyna loops.

mod dyna;
mod true_model;
mod updates;

pub use dyna::{
    run_control, run_control_observed, run_prediction, ControlRun, DecayClock, Planner,
    PredictionRun, Schedules,
};
pub use true_model::{TrueBackwardModel, TrueForwardModel};
pub use updates::{
    backward_planning_update_q, backward_planning_update_v, backward_sample_update_v,
    forward_planning_update_q, forward_planning_update_v, BackwardDynamics, ForwardDynamics,
};

use crate::error::{invalid, Result};

/// Transition endpoint a planning step is launched from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceFrame {
    /// The state `s` the agent just left.
    PreviousState,
    /// The state `s'` the agent just reached.
    CurrentState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub direction: Direction,
    pub reference: ReferenceFrame,
    pub steps_per_interaction: usize,
    pub model_free_learning_enabled: bool,
}

impl PlannerConfig {
    /// Plain model-free learner.
    pub fn model_free() -> Self {
        Self {
            direction: Direction::Backward,
            reference: ReferenceFrame::CurrentState,
            steps_per_interaction: 0,
            model_free_learning_enabled: true,
        }
    }

    pub fn new(direction: Direction, reference: ReferenceFrame) -> Self {
        Self {
            direction,
            reference,
            steps_per_interaction: 1,
            model_free_learning_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_interaction == 0 && !self.model_free_learning_enabled {
            return invalid("a planner with no planning steps must learn from experience");
        }
        Ok(())
    }
}

pub fn select_reference_state(s: usize, next: usize, frame: ReferenceFrame) -> usize {
    match frame {
        ReferenceFrame::PreviousState => s,
        ReferenceFrame::CurrentState => next,
    }
}
