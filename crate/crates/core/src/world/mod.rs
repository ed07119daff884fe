//! Seeded fixed-step simulation of a unidirectional multi-lane road.
//!
//! One tick runs, in order: purge of vehicles removed last tick, arrivals,
//! CAV lateral moves (ascending p_lon), HDV lane changes, longitudinal
//! motion of everyone (HDV accelerations from the post-lateral snapshot),
//! collision detection, exits.

mod config;
mod dynamics;
mod env;
mod hdv;
mod state;
mod trace;
mod vehicle;

use serde::{Deserialize, Serialize};

pub use config::{HdvParams, PerceptionConfig, RoadConfig};
pub use dynamics::{apply_cav_actions, cav_lateral, cav_longitudinal, detect_collisions, process_exits, spawn_arrivals};
pub use env::{run_episode, run_episode_with, Env, FnPolicy, IdlePolicy, Policy, UniformRandomPolicy};
pub use hdv::{equilibrium_gap, hdv_accelerations, hdv_lateral, idm_accel, step_hdv};
pub use state::{bumper_gap, PendingArrival, WorldState};
pub use trace::{ActionRecord, EpisodeTrace, SpawnRecord, TickRecord, VehicleRecord};
pub use vehicle::{CollisionEvent, Goal, GoalKind, Vehicle, VehicleId, VehicleKind};

use crate::percept::JointAction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneChange {
    pub id: VehicleId,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub id: VehicleId,
    pub kind: VehicleKind,
    pub lane: usize,
    /// Left the road in a lane satisfying its goal.
    pub success: bool,
}

/// What one acting CAV did this tick, measured from its pre-step state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentMotion {
    pub id: VehicleId,
    pub goal: Goal,
    /// Longitudinal position before the step.
    pub x: f64,
    /// Lane before the step.
    pub lane: usize,
    pub v_before: f64,
    /// Speed after the step.
    pub vx: f64,
    /// +1 for an executed move left, -1 right, 0 otherwise.
    pub lateral_velocity: i8,
    pub action: JointAction,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickEvents {
    pub tick: u64,
    pub spawned: Vec<VehicleId>,
    pub lane_changes: Vec<LaneChange>,
    pub collisions: Vec<CollisionEvent>,
    pub exits: Vec<ExitEvent>,
    /// CAVs that entered a goal lane for the first time.
    pub newly_satisfied: Vec<VehicleId>,
    /// Vehicles completing a second lane change inside the rolling window.
    pub frequent_lane_changes: Vec<VehicleId>,
    pub motions: Vec<AgentMotion>,
}
