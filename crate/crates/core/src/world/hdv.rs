//! Human-driven vehicle behaviour: Intelligent Driver Model car following
//! and a MOBIL-style lane change rule with a goal-lane bias.

use super::config::{HdvParams, RoadConfig};
use super::state::{bumper_gap, WorldState};
use super::vehicle::{Vehicle, VehicleId, VehicleKind};
use super::LaneChange;

/// IDM acceleration. `lead` is `(bumper gap, leader speed)`.
pub fn idm_accel(p: &HdvParams, v: f64, desired: f64, lead: Option<(f64, f64)>) -> f64 {
    let free = 1.0 - (v / desired).powf(p.exponent);
    let interaction = match lead {
        None => 0.0,
        Some((gap, _)) if gap <= 0.0 => return -p.max_brake,
        Some((gap, v_lead)) => {
            let s_star = p.min_gap + (v * p.time_headway + v * (v - v_lead) / (2.0 * (p.max_accel * p.comfort_decel).sqrt())).max(0.0);
            (s_star / gap).powi(2)
        }
    };
    (p.max_accel * (free - interaction)).max(-p.max_brake)
}

fn desired_speed(cfg: &RoadConfig) -> f64 {
    cfg.hdv.desired_speed_frac * cfg.v_max
}

/// IDM acceleration of `me` given the vehicle (if any) ahead of it.
fn accel_behind(cfg: &RoadConfig, me_v: f64, me_p: f64, lead: Option<&Vehicle>) -> f64 {
    let lead = lead.map(|l| (bumper_gap(l.p_lon, me_p, cfg.vehicle_length), l.v));
    idm_accel(&cfg.hdv, me_v, desired_speed(cfg), lead)
}

/// IDM accelerations of every alive HDV, evaluated on the current snapshot.
pub fn hdv_accelerations(state: &WorldState, cfg: &RoadConfig) -> Vec<(VehicleId, f64)> {
    state
        .alive()
        .filter(|v| v.kind == VehicleKind::Hdv)
        .map(|v| (v.id, accel_behind(cfg, v.v, v.p_lon, state.leader_of(v))))
        .collect()
}

fn lane_distance(veh: &Vehicle, lane: usize, n_lanes: usize) -> usize {
    lane.abs_diff(veh.goal.target_lane_from(lane, n_lanes))
}

/// MOBIL evaluation of moving `me` into `target`. Returns the incentive when
/// the move is safe.
fn mobil_incentive(state: &WorldState, cfg: &RoadConfig, me: &Vehicle, target: usize) -> Option<f64> {
    let len = cfg.vehicle_length;
    let p = &cfg.hdv;
    if state.overlaps(target, me.p_lon, me.id, len) {
        return None;
    }
    let new_lead = state.leader_at(target, me.p_lon, Some(me.id));
    let new_follow = state.follower_at(target, me.p_lon, Some(me.id));

    let a_new_follow_after = new_follow.map(|f| accel_behind(cfg, f.v, f.p_lon, Some(me)));
    if a_new_follow_after.is_some_and(|a| a < -p.safe_decel) {
        return None;
    }
    let a_self_now = accel_behind(cfg, me.v, me.p_lon, state.leader_of(me));
    let a_self_after = accel_behind(cfg, me.v, me.p_lon, new_lead);
    if a_self_after < -p.safe_decel {
        return None;
    }

    let mut others = 0.0;
    if let (Some(f), Some(after)) = (new_follow, a_new_follow_after) {
        others += after - accel_behind(cfg, f.v, f.p_lon, state.leader_of(f));
    }
    if let Some(f) = state.follower_of(me) {
        let before = accel_behind(cfg, f.v, f.p_lon, Some(me));
        let after = accel_behind(cfg, f.v, f.p_lon, state.leader_of(me));
        others += after - before;
    }

    let now = lane_distance(me, me.lane, cfg.n_lanes);
    let then = lane_distance(me, target, cfg.n_lanes);
    let bias = match then.cmp(&now) {
        std::cmp::Ordering::Less => p.goal_bias,
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => -p.goal_bias * 4.0,
    };
    Some(a_self_after - a_self_now + p.politeness * others + bias)
}

/// Lane changes for every alive HDV, processed by ascending p_lon so later
/// decisions see earlier moves.
pub fn hdv_lateral(state: &mut WorldState, cfg: &RoadConfig) -> Vec<LaneChange> {
    let cooldown = (cfg.hdv.lc_cooldown / cfg.dt).round() as u64;
    let mut order: Vec<(f64, VehicleId)> =
        state.alive().filter(|v| v.kind == VehicleKind::Hdv).map(|v| (v.p_lon, v.id)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut changes = Vec::new();
    for (_, id) in order {
        let Some(idx) = state.vehicles.iter().position(|v| v.id == id) else { continue };
        let me = &state.vehicles[idx];
        let t = state.t;
        if me.recent_lane_changes.back().is_some_and(|&last| t < last + cooldown) {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for target in [me.lane.checked_sub(1).filter(|&l| l >= 1), Some(me.lane + 1).filter(|&l| l <= cfg.n_lanes)]
            .into_iter()
            .flatten()
        {
            if let Some(gain) = mobil_incentive(state, cfg, me, target) {
                if gain > cfg.hdv.lc_threshold && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, target));
                }
            }
        }
        if let Some((_, target)) = best {
            let from = state.vehicles[idx].lane;
            state.vehicles[idx].lane = target;
            changes.push(LaneChange { id, from, to: target });
        }
    }
    changes
}

/// Integrate one tick of longitudinal motion at constant acceleration with
/// the speed clipped to `[0, v_max]`.
pub fn integrate(veh: &mut Vehicle, next_v: f64, dt: f64) {
    veh.p_lon += 0.5 * (veh.v + next_v) * dt;
    veh.v = next_v;
}

/// Full HDV update in isolation: lane changes, then car following.
pub fn step_hdv(state: &mut WorldState, cfg: &RoadConfig) -> Vec<LaneChange> {
    let changes = hdv_lateral(state, cfg);
    let accels = hdv_accelerations(state, cfg);
    for (id, a) in accels {
        if let Some(veh) = state.vehicles.iter_mut().find(|v| v.id == id) {
            let next = (veh.v + a * cfg.dt).clamp(0.0, cfg.v_max);
            integrate(veh, next, cfg.dt);
        }
    }
    changes
}

/// Equilibrium bumper gap of the IDM at speed `v` behind an equal-speed leader.
pub fn equilibrium_gap(p: &HdvParams, v: f64, desired: f64) -> Option<f64> {
    let free = 1.0 - (v / desired).powf(p.exponent);
    (free > 0.0).then(|| (p.min_gap + v * p.time_headway) / free.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Goal, GoalKind};

    fn hdv(id: u64, lane: usize, p: f64, v: f64) -> Vehicle {
        let mut veh = Vehicle::new(VehicleId(id), VehicleKind::Hdv, lane, v, Goal::new(GoalKind::Straight), 0);
        veh.p_lon = p;
        veh
    }

    #[test]
    fn lone_hdv_approaches_but_never_exceeds_v_max() {
        let cfg = RoadConfig { road_length: 1e6, ..RoadConfig::default() };
        let mut s = WorldState::new(0);
        s.vehicles.push(hdv(1, 2, 0.0, 5.0));
        let mut last = 5.0;
        for _ in 0..2000 {
            step_hdv(&mut s, &cfg);
            let v = s.vehicles[0].v;
            assert!(v <= cfg.v_max && v >= last - 1e-12);
            last = v;
        }
        assert!(last > 0.95 * cfg.v_max);
    }

    #[test]
    fn brakes_behind_stopped_leader_at_min_gap() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        s.vehicles.push(hdv(1, 2, 100.0, 0.0));
        s.vehicles.push(hdv(2, 2, 100.0 - cfg.vehicle_length - cfg.hdv.min_gap, 10.0));
        let accels = hdv_accelerations(&s, &cfg);
        let a = accels.iter().find(|(id, _)| *id == VehicleId(2)).unwrap().1;
        assert!(a < 0.0);
    }

    #[test]
    fn follower_at_equilibrium_has_zero_acceleration() {
        let cfg = RoadConfig::default();
        let v = 15.0;
        let desired = cfg.v_max;
        // oracle: bisection on the follower's IDM acceleration in the gap
        let accel = |gap: f64| idm_accel(&cfg.hdv, v, desired, Some((gap, v)));
        let (mut lo, mut hi) = (1e-3, 1e4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if accel(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let gap = 0.5 * (lo + hi);
        let closed = equilibrium_gap(&cfg.hdv, v, desired).unwrap();
        assert!((gap - closed).abs() < 1e-8);

        let mut s = WorldState::new(0);
        s.vehicles.push(hdv(1, 2, 200.0, v));
        s.vehicles.push(hdv(2, 2, 200.0 - cfg.vehicle_length - gap, v));
        let accels = hdv_accelerations(&s, &cfg);
        let a = accels.iter().find(|(id, _)| *id == VehicleId(2)).unwrap().1;
        assert!(a.abs() < 1e-6, "follower accel {a}");
    }

    #[test]
    fn overlapping_gap_is_max_brake() {
        let p = HdvParams::default();
        assert_eq!(idm_accel(&p, 10.0, 25.0, Some((-1.0, 0.0))), -p.max_brake);
    }

    #[test]
    fn slow_leader_triggers_overtake() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        // goal straight: lanes 2 and 3 both satisfy it
        s.vehicles.push(hdv(1, 2, 40.0, 2.0));
        s.vehicles.push(hdv(2, 2, 20.0, 20.0));
        let changes = hdv_lateral(&mut s, &cfg);
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].id, VehicleId(2));
        assert_eq!(changes[0].to, 3);
    }

    #[test]
    fn hdv_drifts_toward_goal_lane() {
        let cfg = RoadConfig::default();
        let mut s = WorldState::new(0);
        let mut v = hdv(1, 3, 50.0, 20.0);
        v.goal = Goal::new(GoalKind::TurnLeft);
        s.vehicles.push(v);
        let changes = hdv_lateral(&mut s, &cfg);
        assert_eq!(changes.len(), 1);
        assert_eq!(changes[0].to, 2);
    }
}
