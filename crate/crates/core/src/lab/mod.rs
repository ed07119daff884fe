//! Exact finite-MDP solvers for average-reward and discounted values, the
//! Laurent split between them, and a sampled equivalence check for the
//! position reward.

mod equivalence;
mod mdp;
mod values;

pub use equivalence::{
    equivalence_experiment, stationary_field_mean, DriftAlignment, DriftModel, EquivalenceReport, EquivalenceSetup,
};
pub use mdp::FiniteMdp;
pub use values::{
    action_values, average_reward, centered_discounted_values, differential_values, discounted_values,
    laurent_report, shift_invariance_check, stationary_distribution, LaurentRow, ShiftReport, Stationary,
    ValueBundle, SOLVE_TOL,
};
