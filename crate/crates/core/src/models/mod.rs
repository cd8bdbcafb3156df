//! Estimated world models.

mod action_conditioned;
mod backward;
mod exp_family;
mod expectation;
mod forward;
mod multistep;

pub use action_conditioned::{action_conditioned_backward, ActionConditionedBackward};
pub use backward::{BackwardModel, BackwardQuery};
pub use exp_family::{
    mle_gradient, planml_gradient, ExpFamilyModelParams, ModelDirection, ObservedTransition,
    PlanningContext,
};
pub use expectation::{expected_linear_backward_step, ExpectationModelBundle};
pub use forward::ForwardModel;
pub use multistep::{n_step_backward, LambdaModel};
