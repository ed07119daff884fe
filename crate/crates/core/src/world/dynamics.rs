//! Arrivals, CAV command execution, collisions and exits.

use std::collections::BTreeMap;

use rand::Rng;

use super::config::RoadConfig;
use super::hdv::integrate;
use super::state::{bumper_gap, PendingArrival, WorldState};
use super::vehicle::{CollisionEvent, Goal, GoalKind, Vehicle, VehicleId, VehicleKind};
use super::{ExitEvent, LaneChange};
use crate::error::{Error, Result};
use crate::percept::{apply_kinematics, lane_transition, JointAction};

/// Bernoulli-thinned Poisson arrivals: every lane independently receives an
/// arrival with probability `arrival_rate * dt / 3600`. Arrivals wait in a
/// per-lane queue while the entry zone is occupied. Returns spawned ids.
pub fn spawn_arrivals(state: &mut WorldState, cfg: &RoadConfig) -> Vec<VehicleId> {
    if state.pending.len() != cfg.n_lanes {
        state.pending.resize_with(cfg.n_lanes, Default::default);
    }
    let p = cfg.arrival_probability();
    let open = cfg.spawn_window.is_none_or(|w| (state.t as f64) * cfg.dt < w - 1e-9);
    let goal_total: f64 = cfg.goal_weights.iter().sum();
    let mut spawned = Vec::new();

    for lane in 1..=cfg.n_lanes {
        // draws depend only on the seed, never on where vehicles are
        let u: f64 = state.rng.random();
        if open && p > 0.0 && u < p {
            let kind = if state.rng.random::<f64>() < cfg.penetration { VehicleKind::Cav } else { VehicleKind::Hdv };
            let mut pick = state.rng.random::<f64>() * goal_total;
            let mut goal = GoalKind::TurnRight;
            for (k, w) in GoalKind::ALL.iter().zip(cfg.goal_weights) {
                if pick < w {
                    goal = *k;
                    break;
                }
                pick -= w;
            }
            let lo = cfg.spawn_speed_frac * cfg.v_max;
            let v = lo + state.rng.random::<f64>() * (cfg.v_max - lo);
            state.pending[lane - 1].push_back(PendingArrival { kind, goal: Goal::new(goal), v });
            state.arrivals += 1;
        }
        if state.pending[lane - 1].is_empty() {
            continue;
        }
        let blocked = state.alive_in_lane(lane).any(|o| o.p_lon - cfg.vehicle_length < cfg.entry_zone);
        if blocked {
            continue;
        }
        let arrival = state.pending[lane - 1].pop_front().expect("non-empty");
        let id = VehicleId(state.next_id);
        state.next_id += 1;
        let mut veh = Vehicle::new(id, arrival.kind, lane, arrival.v, arrival.goal, state.t);
        veh.intention_met = veh.goal.is_satisfied(lane, cfg.n_lanes);
        state.vehicles.push(veh);
        spawned.push(id);
    }
    spawned
}

fn check_agents(state: &WorldState, actions: &BTreeMap<VehicleId, JointAction>) -> Result<()> {
    for id in actions.keys() {
        match state.get(*id) {
            Some(v) if v.alive && v.is_cav() => {}
            _ => return Err(Error::UnknownAgent(*id)),
        }
    }
    Ok(())
}

/// Lateral part of CAV commands, applied in ascending p_lon order. A move
/// that would overlap a vehicle already in the target lane (including one
/// that moved there earlier this tick) falls back to holding.
pub fn cav_lateral(
    state: &mut WorldState,
    actions: &BTreeMap<VehicleId, JointAction>,
    cfg: &RoadConfig,
) -> Result<Vec<LaneChange>> {
    check_agents(state, actions)?;
    let mut order: Vec<(f64, VehicleId)> =
        actions.keys().filter_map(|id| state.get(*id).map(|v| (v.p_lon, *id))).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut changes = Vec::new();
    for (p, id) in order {
        let idx = state.vehicles.iter().position(|v| v.id == id).expect("checked above");
        let from = state.vehicles[idx].lane;
        let to = lane_transition(from, actions[&id].lat, cfg.n_lanes);
        if to == from || state.overlaps(to, p, id, cfg.vehicle_length) {
            continue;
        }
        state.vehicles[idx].lane = to;
        changes.push(LaneChange { id, from, to });
    }
    Ok(changes)
}

/// Longitudinal part of CAV commands.
pub fn cav_longitudinal(state: &mut WorldState, actions: &BTreeMap<VehicleId, JointAction>, cfg: &RoadConfig) {
    for veh in state.vehicles.iter_mut().filter(|v| v.alive) {
        if let Some(action) = actions.get(&veh.id) {
            let next = apply_kinematics(veh.v, action.lon, cfg);
            integrate(veh, next, cfg.dt);
        }
    }
}

/// Lateral rule then longitudinal kinematics for the commanded CAVs.
pub fn apply_cav_actions(
    state: &mut WorldState,
    actions: &BTreeMap<VehicleId, JointAction>,
    cfg: &RoadConfig,
) -> Result<Vec<LaneChange>> {
    let changes = cav_lateral(state, actions, cfg)?;
    cav_longitudinal(state, actions, cfg);
    Ok(changes)
}

/// Same-lane adjacent pairs with bumper gap <= 0. Every vehicle involved is
/// marked not alive after the pass.
pub fn detect_collisions(state: &mut WorldState, vehicle_length: f64) -> Vec<CollisionEvent> {
    let mut lanes: BTreeMap<usize, Vec<(f64, VehicleId)>> = BTreeMap::new();
    for v in state.alive() {
        lanes.entry(v.lane).or_default().push((v.p_lon, v.id));
    }
    let mut events = Vec::new();
    for (lane, mut cars) in lanes {
        cars.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for pair in cars.windows(2) {
            let (follow, lead) = (pair[0], pair[1]);
            if bumper_gap(lead.0, follow.0, vehicle_length) <= 0.0 {
                events.push(CollisionEvent { lead_id: lead.1, follow_id: follow.1, tick: state.t, lane });
            }
        }
    }
    for e in &events {
        for v in state.vehicles.iter_mut().filter(|v| v.id == e.lead_id || v.id == e.follow_id) {
            v.alive = false;
        }
    }
    state.collisions_this_tick = events.clone();
    events
}

/// Remove vehicles past the road end, scoring whether they left in a goal lane.
pub fn process_exits(state: &mut WorldState, cfg: &RoadConfig) -> Vec<ExitEvent> {
    let mut exits = Vec::new();
    for v in state.vehicles.iter_mut().filter(|v| v.alive && v.p_lon > cfg.road_length) {
        v.alive = false;
        exits.push(ExitEvent {
            id: v.id,
            kind: v.kind,
            lane: v.lane,
            success: v.goal.is_satisfied(v.lane, cfg.n_lanes),
        });
    }
    exits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percept::{LatAction, LonAction};

    fn put(state: &mut WorldState, id: u64, kind: VehicleKind, lane: usize, p: f64, v: f64) {
        let mut veh = Vehicle::new(VehicleId(id), kind, lane, v, Goal::new(GoalKind::Straight), 0);
        veh.p_lon = p;
        state.vehicles.push(veh);
    }

    #[test]
    fn zero_rate_never_spawns() {
        let cfg = RoadConfig { arrival_rate: 0.0, ..RoadConfig::default() };
        let mut s = WorldState::new(3);
        for _ in 0..10_000 {
            assert!(spawn_arrivals(&mut s, &cfg).is_empty());
            s.t += 1;
        }
        assert_eq!(s.arrivals, 0);
    }

    #[test]
    fn per_lane_probability_from_defaults() {
        let p = RoadConfig::default().arrival_probability();
        assert!((p - 250.0 * 0.1 / 3600.0).abs() < 1e-15);
        assert!((p - 0.006944).abs() < 1e-6);
    }

    #[test]
    fn occupied_entry_defers_arrival() {
        let cfg = RoadConfig { arrival_rate: 3000.0, n_lanes: 2, ..RoadConfig::default() };
        let mut s = WorldState::new(11);
        put(&mut s, 900, VehicleKind::Hdv, 1, 8.0, 0.0);
        put(&mut s, 901, VehicleKind::Hdv, 2, 8.0, 0.0);
        s.next_id = 0;
        let mut spawned = 0;
        for _ in 0..200 {
            spawned += spawn_arrivals(&mut s, &cfg).len();
            s.t += 1;
        }
        assert_eq!(spawned, 0);
        assert!(s.arrivals > 0);
        assert_eq!(s.pending.iter().map(|q| q.len() as u64).sum::<u64>(), s.arrivals);
        s.vehicles.clear();
        let now = spawn_arrivals(&mut s, &cfg);
        assert_eq!(now.len(), 2);
    }

    #[test]
    fn identity_action_changes_nothing() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Cav, 2, 50.0, 12.0);
        let actions = BTreeMap::from([(VehicleId(1), JointAction::IDLE)]);
        apply_cav_actions(&mut s, &actions, &cfg).unwrap();
        assert_eq!(s.vehicles[0].lane, 2);
        assert_eq!(s.vehicles[0].v, 12.0);
        assert!((s.vehicles[0].p_lon - 51.2).abs() < 1e-12);
    }

    #[test]
    fn accelerate_left_composes() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Cav, 2, 50.0, 12.0);
        let actions = BTreeMap::from([(VehicleId(1), JointAction::new(LonAction::Acc, LatAction::Left))]);
        let changes = apply_cav_actions(&mut s, &actions, &cfg).unwrap();
        assert_eq!(changes, vec![LaneChange { id: VehicleId(1), from: 2, to: 1 }]);
        assert_eq!(s.vehicles[0].lane, 1);
        assert!(s.vehicles[0].v > 12.0);
    }

    #[test]
    fn unknown_agent_rejects_step() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Hdv, 2, 50.0, 12.0);
        let before = s.vehicles.clone();
        let actions = BTreeMap::from([(VehicleId(1), JointAction::IDLE)]);
        assert!(matches!(apply_cav_actions(&mut s, &actions, &cfg), Err(Error::UnknownAgent(_))));
        let actions = BTreeMap::from([(VehicleId(7), JointAction::IDLE)]);
        assert!(apply_cav_actions(&mut s, &actions, &cfg).is_err());
        assert_eq!(s.vehicles, before);
    }

    #[test]
    fn contested_gap_goes_to_rearmost_cav_in_either_insertion_order() {
        let cfg = RoadConfig::default();
        let left = JointAction::new(LonAction::Keep, LatAction::Left);
        let right = JointAction::new(LonAction::Keep, LatAction::Right);
        let run = |first_a: bool| {
            let mut s = WorldState::new(0);
            if first_a {
                put(&mut s, 1, VehicleKind::Cav, 1, 50.0, 10.0);
                put(&mut s, 2, VehicleKind::Cav, 3, 52.0, 10.0);
            } else {
                put(&mut s, 2, VehicleKind::Cav, 3, 52.0, 10.0);
                put(&mut s, 1, VehicleKind::Cav, 1, 50.0, 10.0);
            }
            let actions = BTreeMap::from([(VehicleId(1), right), (VehicleId(2), left)]);
            let changes = cav_lateral(&mut s, &actions, &cfg).unwrap();
            let lanes: BTreeMap<VehicleId, usize> = s.vehicles.iter().map(|v| (v.id, v.lane)).collect();
            (changes, lanes)
        };
        let (c1, l1) = run(true);
        let (c2, l2) = run(false);
        assert_eq!(c1, c2);
        assert_eq!(l1, l2);
        assert_eq!(l1[&VehicleId(1)], 2);
        assert_eq!(l1[&VehicleId(2)], 3);
    }

    #[test]
    fn gap_of_five_is_not_a_collision() {
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Hdv, 2, 60.0, 10.0);
        put(&mut s, 2, VehicleKind::Hdv, 2, 50.0, 10.0);
        assert!(detect_collisions(&mut s, 5.0).is_empty());
    }

    #[test]
    fn touching_bumpers_collide() {
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Hdv, 2, 55.0, 10.0);
        put(&mut s, 2, VehicleKind::Cav, 2, 50.0, 10.0);
        let events = detect_collisions(&mut s, 5.0);
        assert_eq!(events.len(), 1);
        assert_eq!((events[0].lead_id, events[0].follow_id), (VehicleId(1), VehicleId(2)));
        assert!(s.vehicles.iter().all(|v| !v.alive));
    }

    #[test]
    fn three_way_pileup_reports_adjacent_pairs() {
        let len = 5.0;
        let mut s = WorldState::new(0);
        put(&mut s, 1, VehicleKind::Hdv, 1, 50.0, 10.0);
        put(&mut s, 2, VehicleKind::Hdv, 1, 48.0, 10.0);
        put(&mut s, 3, VehicleKind::Hdv, 1, 46.5, 10.0);
        // brute-force oracle: all overlapping pairs, then adjacency filter
        let ps = [(50.0, 1u64), (48.0, 2), (46.5, 3)];
        let mut all_pairs = 0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j && ps[i].0 > ps[j].0 && ps[i].0 - len - ps[j].0 <= 0.0 {
                    all_pairs += 1;
                }
            }
        }
        assert_eq!(all_pairs, 3);
        let events = detect_collisions(&mut s, len);
        assert_eq!(events.len(), 2);
    }
}
