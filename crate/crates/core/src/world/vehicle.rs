use std::collections::VecDeque;
use std::fmt;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u64);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VehicleKind {
    #[serde(rename = "HDV")]
    Hdv,
    #[serde(rename = "CAV")]
    Cav,
}

impl VehicleKind {
    /// Discretized vehicle type code.
    pub fn tau(self) -> i32 {
        match self {
            VehicleKind::Hdv => 1,
            VehicleKind::Cav => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    Straight,
    TurnLeft,
    TurnRight,
}

impl GoalKind {
    pub const ALL: [GoalKind; 3] = [GoalKind::Straight, GoalKind::TurnLeft, GoalKind::TurnRight];

    pub fn index(self) -> usize {
        match self {
            GoalKind::Straight => 0,
            GoalKind::TurnLeft => 1,
            GoalKind::TurnRight => 2,
        }
    }
}

/// Driving objective. Straight traffic targets the middle lane(s), turning
/// traffic the outermost lane on its side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    pub kind: GoalKind,
}

impl Goal {
    pub fn new(kind: GoalKind) -> Self {
        Self { kind }
    }

    pub fn one_hot(&self) -> [f64; 3] {
        let mut g = [0.0; 3];
        g[self.kind.index()] = 1.0;
        g
    }

    /// Lanes that satisfy the goal (1-based, lane 1 leftmost).
    pub fn target_lanes(&self, n_lanes: usize) -> RangeInclusive<usize> {
        match self.kind {
            GoalKind::TurnLeft => 1..=1,
            GoalKind::TurnRight => n_lanes..=n_lanes,
            GoalKind::Straight if n_lanes.is_multiple_of(2) => n_lanes / 2..=n_lanes / 2 + 1,
            GoalKind::Straight => n_lanes.div_ceil(2)..=n_lanes.div_ceil(2),
        }
    }

    pub fn is_satisfied(&self, lane: usize, n_lanes: usize) -> bool {
        self.target_lanes(n_lanes).contains(&lane)
    }

    /// Target lane nearest to `lane`; ties resolve to the lower index.
    pub fn target_lane_from(&self, lane: usize, n_lanes: usize) -> usize {
        let range = self.target_lanes(n_lanes);
        lane.clamp(*range.start(), *range.end())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub kind: VehicleKind,
    /// Front bumper position along the road.
    pub p_lon: f64,
    /// 1-based lane index, lane 1 leftmost.
    pub lane: usize,
    pub v: f64,
    pub tau: i32,
    pub goal: Goal,
    pub alive: bool,
    pub spawn_tick: u64,
    /// Ticks of recent lane changes, oldest first.
    #[serde(skip)]
    pub recent_lane_changes: VecDeque<u64>,
    /// Set once the vehicle has first entered a goal lane.
    #[serde(skip)]
    pub intention_met: bool,
}

impl Vehicle {
    pub fn new(id: VehicleId, kind: VehicleKind, lane: usize, v: f64, goal: Goal, spawn_tick: u64) -> Self {
        Self {
            id,
            kind,
            p_lon: 0.0,
            lane,
            v,
            tau: kind.tau(),
            goal,
            alive: true,
            spawn_tick,
            recent_lane_changes: VecDeque::new(),
            intention_met: false,
        }
    }

    pub fn is_cav(&self) -> bool {
        self.kind == VehicleKind::Cav
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub lead_id: VehicleId,
    pub follow_id: VehicleId,
    pub tick: u64,
    pub lane: usize,
}
