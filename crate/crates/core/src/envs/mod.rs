//! Environments behind a common episodic sampling interface.

mod chain;
mod maze;

pub use chain::{build_leveled_chain, ChainEnv, LeveledChainSpec};
pub use maze::{
    build_maze, Action, MazeEnv, MazeLayout, MazeSpec, Stochasticity, DEFAULT_MAZE_LAYOUT,
};

use crate::error::Result;
use crate::rng::StreamRng;

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    /// Zero at termination, the environment discount otherwise.
    pub discount: f64,
    pub next_state: usize,
    pub terminated: bool,
    /// Episode cut at the step limit; bootstrapping continues.
    pub truncated: bool,
}

pub trait Environment {
    fn n_states(&self) -> usize;

    fn n_actions(&self) -> usize;

    fn discount(&self) -> f64;

    /// Starts a new episode and returns the start state.
    fn reset(&mut self, rng: &mut StreamRng) -> usize;

    fn step(&mut self, action: usize, rng: &mut StreamRng) -> Result<StepOutcome>;

    fn state(&self) -> usize;
}
