//! Per-agent observation encoding and the discrete longitudinal x lateral
//! action space.
//!
//! Flat observation layout (`Observation::to_vec`):
//!
//! | offset | field |
//! |--------|-------|
//! | 0 | p_lon |
//! | 1 | p_lat |
//! | 2 | v |
//! | 3 | tau |
//! | 4..7 | goal one-hot (straight, left, right) |
//! | 7 | d_left |
//! | 8 | d_front |
//! | 9 | d_right |
//! | 10 + 5k .. 15 + 5k | neighbor k: d_p_lon, d_p_lat, d_v, d_tau, d_g |
//!
//! Width is `SELF_WIDTH + 5 * max_neighbors` regardless of traffic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{RoadConfig, VehicleId, VehicleKind, WorldState};

pub const SELF_WIDTH: usize = 10;
pub const NEIGHBOR_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LonAction {
    Acc,
    Keep,
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatAction {
    Left,
    Hold,
    Right,
}

impl LatAction {
    /// Lateral velocity in lanes per decision with the lateral axis
    /// pointing left: +1 for a move left, -1 for a move right.
    pub fn lateral_velocity(self) -> i8 {
        match self {
            LatAction::Left => 1,
            LatAction::Hold => 0,
            LatAction::Right => -1,
        }
    }
}

/// One of the nine Cartesian products of longitudinal and lateral actions.
///
/// Index order is `lon * 3 + lat` with lon in (acc, keep, dec) and lat in
/// (left, hold, right).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointAction {
    pub lon: LonAction,
    pub lat: LatAction,
}

impl JointAction {
    pub const COUNT: usize = 9;
    pub const IDLE: JointAction = JointAction { lon: LonAction::Keep, lat: LatAction::Hold };

    pub fn new(lon: LonAction, lat: LatAction) -> Self {
        Self { lon, lat }
    }

    pub fn index(self) -> usize {
        let lon = match self.lon {
            LonAction::Acc => 0,
            LonAction::Keep => 1,
            LonAction::Dec => 2,
        };
        let lat = match self.lat {
            LatAction::Left => 0,
            LatAction::Hold => 1,
            LatAction::Right => 2,
        };
        lon * 3 + lat
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= Self::COUNT {
            return None;
        }
        let lon = [LonAction::Acc, LonAction::Keep, LonAction::Dec][index / 3];
        let lat = [LatAction::Left, LatAction::Hold, LatAction::Right][index % 3];
        Some(Self { lon, lat })
    }

    pub fn all() -> impl Iterator<Item = JointAction> {
        (0..Self::COUNT).filter_map(Self::from_index)
    }
}

/// Next speed after one decision: `clip(v + a * dt, 0, v_max)`.
pub fn apply_kinematics(v: f64, lon: LonAction, cfg: &RoadConfig) -> f64 {
    let a = match lon {
        LonAction::Acc => cfg.perception.a_acc,
        LonAction::Keep => 0.0,
        LonAction::Dec => -cfg.perception.a_dec,
    };
    (v + a * cfg.dt).clamp(0.0, cfg.v_max)
}

/// Lane after a lateral action. Lane 1 is leftmost; a move off the road
/// degenerates to holding.
pub fn lane_transition(lane: usize, lat: LatAction, n_lanes: usize) -> usize {
    match lat {
        LatAction::Left => lane.saturating_sub(1).max(1),
        LatAction::Hold => lane,
        LatAction::Right => (lane + 1).min(n_lanes),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfState {
    pub p_lon: f64,
    pub p_lat: f64,
    pub v: f64,
    pub tau: i32,
    pub g: [f64; 3],
    pub d_left: f64,
    pub d_front: f64,
    pub d_right: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NeighborRow {
    pub d_p_lon: f64,
    pub d_p_lat: f64,
    pub d_v: f64,
    pub d_tau: i32,
    pub d_g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "self")]
    pub self_state: SelfState,
    /// Exactly `max_neighbors` rows; rows past `n_real` are zero.
    pub neighbors: Vec<NeighborRow>,
    pub n_real: usize,
}

impl Observation {
    pub fn width(max_neighbors: usize) -> usize {
        SELF_WIDTH + NEIGHBOR_WIDTH * max_neighbors
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let s = &self.self_state;
        let mut out = Vec::with_capacity(SELF_WIDTH + NEIGHBOR_WIDTH * self.neighbors.len());
        out.extend([s.p_lon, s.p_lat, s.v, f64::from(s.tau)]);
        out.extend(s.g);
        out.extend([s.d_left, s.d_front, s.d_right]);
        for row in &self.neighbors {
            out.extend([row.d_p_lon, row.d_p_lat, row.d_v, f64::from(row.d_tau), row.d_g]);
        }
        out
    }
}

/// Encode the observation of an alive vehicle.
pub fn encode_observation(state: &WorldState, agent_id: VehicleId, cfg: &RoadConfig) -> Result<Observation> {
    let me = state
        .vehicles
        .iter()
        .find(|v| v.id == agent_id && v.alive)
        .ok_or(Error::UnknownAgent(agent_id))?;
    let pc = &cfg.perception;
    let len = cfg.vehicle_length;

    let d_front = state
        .leader_of(me)
        .map(|lead| lead.p_lon - len - me.p_lon)
        .map_or(pc.d_max, |gap| gap.clamp(f64::MIN_POSITIVE, pc.d_max));
    let side_distance = |lane: Option<usize>| -> f64 {
        let Some(lane) = lane else { return pc.d_max };
        state
            .alive_in_lane(lane)
            .filter(|o| o.id != me.id)
            .map(|o| ((o.p_lon - me.p_lon).abs() - len).max(f64::MIN_POSITIVE))
            .fold(pc.d_max, f64::min)
    };
    let d_left = side_distance((me.lane > 1).then(|| me.lane - 1));
    let d_right = side_distance((me.lane < cfg.n_lanes).then(|| me.lane + 1));

    let my_lat = cfg.lane_center(me.lane);
    let my_goal = me.goal.one_hot();
    let mut nbrs: Vec<(f64, VehicleId, NeighborRow)> = state
        .vehicles
        .iter()
        .filter(|o| o.alive && o.id != me.id)
        .filter_map(|o| {
            let d_lon = o.p_lon - me.p_lon;
            let d_lat = cfg.lane_center(o.lane) - my_lat;
            let dist = d_lon.hypot(d_lat);
            let shared = pc.share_cav_perception && me.is_cav() && o.kind == VehicleKind::Cav;
            if dist > pc.radius && !shared {
                return None;
            }
            let og = o.goal.one_hot();
            let d_g = og.iter().zip(&my_goal).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let row = NeighborRow { d_p_lon: d_lon, d_p_lat: d_lat, d_v: o.v - me.v, d_tau: o.tau - me.tau, d_g };
            Some((dist, o.id, row))
        })
        .collect();
    nbrs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    nbrs.truncate(pc.max_neighbors);
    let n_real = nbrs.len();
    let mut neighbors: Vec<NeighborRow> = nbrs.into_iter().map(|(_, _, row)| row).collect();
    neighbors.resize(pc.max_neighbors, NeighborRow::default());

    Ok(Observation {
        self_state: SelfState {
            p_lon: me.p_lon,
            p_lat: my_lat,
            v: me.v,
            tau: me.tau,
            g: my_goal,
            d_left,
            d_front,
            d_right,
        },
        neighbors,
        n_real,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Goal, GoalKind, Vehicle, VehicleKind};

    fn cfg() -> RoadConfig {
        RoadConfig::default()
    }

    fn place(state: &mut WorldState, id: u64, kind: VehicleKind, lane: usize, p: f64, v: f64, goal: GoalKind) {
        let mut veh = Vehicle::new(VehicleId(id), kind, lane, v, Goal::new(goal), 0);
        veh.p_lon = p;
        state.vehicles.push(veh);
    }

    #[test]
    fn kinematics_clip_and_identity() {
        let c = cfg();
        assert!((apply_kinematics(24.9, LonAction::Acc, &c) - 25.0).abs() < 1e-12);
        assert_eq!(apply_kinematics(0.1, LonAction::Dec, &c), 0.0);
        assert_eq!(apply_kinematics(10.0, LonAction::Keep, &c), 10.0);
    }

    #[test]
    fn lane_transition_clamps() {
        assert_eq!(lane_transition(1, LatAction::Left, 4), 1);
        assert_eq!(lane_transition(4, LatAction::Right, 4), 4);
        assert_eq!(lane_transition(2, LatAction::Hold, 4), 2);
        assert_eq!(lane_transition(2, LatAction::Left, 4), 1);
        assert_eq!(lane_transition(2, LatAction::Right, 4), 3);
    }

    #[test]
    fn action_index_round_trip() {
        for i in 0..JointAction::COUNT {
            assert_eq!(JointAction::from_index(i).unwrap().index(), i);
        }
        assert!(JointAction::from_index(9).is_none());
        assert_eq!(JointAction::IDLE.index(), 4);
    }

    #[test]
    fn lone_cav_sees_nothing() {
        let c = cfg();
        let mut s = WorldState::new(1);
        place(&mut s, 1, VehicleKind::Cav, 2, 100.0, 20.0, GoalKind::Straight);
        let obs = encode_observation(&s, VehicleId(1), &c).unwrap();
        let d_max = c.perception.d_max;
        assert_eq!(obs.self_state.d_left, d_max);
        assert_eq!(obs.self_state.d_front, d_max);
        assert_eq!(obs.self_state.d_right, d_max);
        assert_eq!(obs.n_real, 0);
        assert!(obs.neighbors.iter().all(|r| *r == NeighborRow::default()));
        assert_eq!(obs.to_vec().len(), Observation::width(c.perception.max_neighbors));
    }

    #[test]
    fn goal_distance_between_neighbors() {
        let c = cfg();
        let mut s = WorldState::new(1);
        place(&mut s, 1, VehicleKind::Cav, 2, 100.0, 20.0, GoalKind::Straight);
        place(&mut s, 2, VehicleKind::Hdv, 2, 120.0, 18.0, GoalKind::Straight);
        place(&mut s, 3, VehicleKind::Hdv, 3, 90.0, 18.0, GoalKind::TurnRight);
        let obs = encode_observation(&s, VehicleId(1), &c).unwrap();
        assert_eq!(obs.n_real, 2);
        // nearest first: id 3 at distance hypot(10, 3.5), then id 2 at 20
        assert!((obs.neighbors[0].d_g - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(obs.neighbors[1].d_g, 0.0);
        assert_eq!(obs.neighbors[1].d_tau, -1);
        assert!((obs.self_state.d_front - 15.0).abs() < 1e-12);
        assert!((obs.self_state.d_right - 5.0).abs() < 1e-12);
        assert_eq!(obs.self_state.d_left, c.perception.d_max);
    }

    #[test]
    fn neighbors_outside_radius_are_dropped() {
        let c = cfg();
        let mut s = WorldState::new(1);
        place(&mut s, 1, VehicleKind::Cav, 2, 0.0, 20.0, GoalKind::Straight);
        place(&mut s, 2, VehicleKind::Cav, 2, 60.0, 20.0, GoalKind::Straight);
        let obs = encode_observation(&s, VehicleId(1), &c).unwrap();
        assert_eq!(obs.n_real, 0);
        assert!((obs.self_state.d_front - 55.0).abs() < 1e-12);

        let mut shared = c.clone();
        shared.perception.share_cav_perception = true;
        let obs = encode_observation(&s, VehicleId(1), &shared).unwrap();
        assert_eq!(obs.n_real, 1);
    }

    #[test]
    fn dead_agent_is_rejected() {
        let c = cfg();
        let mut s = WorldState::new(1);
        place(&mut s, 1, VehicleKind::Cav, 2, 0.0, 20.0, GoalKind::Straight);
        s.vehicles[0].alive = false;
        assert!(matches!(encode_observation(&s, VehicleId(1), &c), Err(Error::UnknownAgent(_))));
    }

    #[test]
    fn neighbor_rows_truncate_to_capacity() {
        let c = cfg();
        let mut s = WorldState::new(1);
        place(&mut s, 0, VehicleKind::Cav, 2, 100.0, 20.0, GoalKind::Straight);
        for k in 1..=10u64 {
            let lane = 1 + (k as usize % 4);
            place(&mut s, k, VehicleKind::Hdv, lane, 100.0 + 8.0 * k as f64 - 40.0, 15.0, GoalKind::TurnLeft);
        }
        let obs = encode_observation(&s, VehicleId(0), &c).unwrap();
        assert_eq!(obs.n_real, c.perception.max_neighbors);
        assert_eq!(obs.neighbors.len(), c.perception.max_neighbors);
        let dists: Vec<f64> = obs.neighbors.iter().map(|r| r.d_p_lon.hypot(r.d_p_lat)).collect();
        assert!(dists.windows(2).all(|w| w[0] <= w[1]));
    }
}
