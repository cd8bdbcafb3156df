//! Tabular forward and backward planning.

pub mod chain;
pub mod envs;
pub mod episode;
pub mod error;
pub mod learn;
pub mod mdp;
pub mod models;
pub mod planning;
pub mod rng;
pub mod tables;

pub use chain::{
    bellman_residual, exact_value, induce_chain, reverse_chain, stationary_distribution,
    StationaryDistribution, StationarySolver, TabularChain,
};
pub use episode::{episode_offline_updates, Episode, OfflineCorrections, Transition};
pub use error::{Error, Result};
pub use mdp::{Policy, TabularMDP};
pub use tables::{QTable, ValueTable};
