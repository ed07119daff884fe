//! Desk-scale learners: tabular independent Q-learning with a shared
//! table, additive (VDN-style) mixing, linear value projections and
//! Monte-Carlo value estimates for scalar chains.

mod chain;
mod discretize;
mod linear;
mod tabular;

pub use chain::{estimate_chain_values, Kernel, Noise, RewardFn, SteadyChain, ValueEstimate};
pub use discretize::{DiscretizerSpec, StateKey};
pub use linear::{finite_difference_1d, gradient_td_projection, td_projection, BasisFn, LinearModel, Projection};
pub use tabular::{
    argmax, iql_update, select_action, vdn_target, vdn_update, QParams, ReplayBuffer, TabularQ, Transition, N_ACTIONS,
};
