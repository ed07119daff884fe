//! Mixed-autonomy multi-lane traffic simulation with pluggable reward
//! families (general, centered, differentiated), desk-scale cooperative
//! learners, and an exact finite-MDP lab for value decomposition checks.
//!
//! Module map:
//!
//! - [`world`]: seeded fixed-step road simulation (arrivals, IDM/MOBIL
//!   human drivers, CAV command execution, collisions, episode traces).
//! - [`percept`]: observation encoding and the 9-way discrete action.
//! - [`rewards`]: general reward, potential field and position rewards,
//!   the external differentiated reward, and reward centering.
//! - [`learners`]: tabular independent Q-learning, additive mixing,
//!   linear and gradient TD projections, steady chains.
//! - [`lab`]: finite MDP solvers (stationary distribution, average
//!   reward, differential and centered discounted values).
//! - [`harness`]: configuration, metrics, training, sweeps, CSV/SVG output.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod lab;
pub mod learners;
pub mod percept;
pub mod rewards;
pub mod world;

pub use error::{Error, Result};
