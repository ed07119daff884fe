use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::field::{position_reward, PositionRewardForm, PotentialFieldParams};
use crate::percept::{JointAction, LonAction};
use crate::world::{Goal, RoadConfig, TickEvents, VehicleId, WorldState};

/// Weights of the external reward: action, position, flow, safety. `lambda`
/// weights a position term added to a centered base reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffRewardWeights {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub lambda: f64,
}

impl Default for DiffRewardWeights {
    fn default() -> Self {
        Self { omega1: 0.2, omega2: 1.0, omega3: 0.5, omega4: -5.0, lambda: 1.0 }
    }
}

impl DiffRewardWeights {
    pub fn is_valid(&self) -> bool {
        self.omega1 >= 0.0 && self.omega2 >= 0.0 && self.omega3 >= 0.0 && self.omega4 <= 0.0
    }
}

/// Shape of the per-agent potential fields; `l` is the road end and the
/// target lane follows each agent's goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSettings {
    pub sigma: f64,
    pub zeta: f64,
    pub form: PositionRewardForm,
}

impl Default for FieldSettings {
    fn default() -> Self {
        Self { sigma: 100.0, zeta: 1.0, form: PositionRewardForm::Discrete }
    }
}

impl FieldSettings {
    pub fn params_for(&self, goal: &Goal, lane: usize, cfg: &RoadConfig) -> PotentialFieldParams {
        PotentialFieldParams {
            sigma: self.sigma,
            zeta: self.zeta,
            l: cfg.road_length,
            y_tar: goal.target_lane_from(lane, cfg.n_lanes) as f64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_a_mean: f64,
    pub r_p_mean: f64,
    pub r_flow: f64,
    pub r_safe: f64,
    pub total: f64,
    /// Per-agent `(r_a, r_p)`.
    pub per_agent: BTreeMap<VehicleId, (f64, f64)>,
}

/// Mean normalized speed over every vehicle on the road; zero when empty.
pub fn flow_reward(state: &WorldState, v_max: f64) -> f64 {
    if state.vehicles.is_empty() {
        return 0.0;
    }
    state.vehicles.iter().map(|v| v.v / v_max).sum::<f64>() / state.vehicles.len() as f64
}

/// Number of distinct vehicles involved in a collision this tick.
pub fn safety_term(events: &TickEvents) -> f64 {
    let involved: BTreeSet<VehicleId> = events.collisions.iter().flat_map(|c| [c.lead_id, c.follow_id]).collect();
    involved.len() as f64
}

/// 1 when accelerating or keeping a high speed, else 0.
pub fn action_reward(action: JointAction, v: f64, v_max: f64, high_speed_frac: f64) -> f64 {
    match action.lon {
        LonAction::Acc => 1.0,
        LonAction::Keep if v >= high_speed_frac * v_max => 1.0,
        _ => 0.0,
    }
}

/// External reward averaged over the acting CAVs plus flow and safety terms.
pub fn env_reward(
    state: &WorldState,
    events: &TickEvents,
    w: &DiffRewardWeights,
    field: &FieldSettings,
    high_speed_frac: f64,
    cfg: &RoadConfig,
) -> RewardBreakdown {
    let mut per_agent = BTreeMap::new();
    for m in &events.motions {
        let r_a = action_reward(m.action, m.v_before, cfg.v_max, high_speed_frac);
        let p = field.params_for(&m.goal, m.lane, cfg);
        let r_p = position_reward(field.form, m.vx, m.lateral_velocity, m.x, m.lane as f64, &p);
        per_agent.insert(m.id, (r_a, r_p));
    }
    let n = per_agent.len();
    let (r_a_mean, r_p_mean) = if n == 0 {
        (0.0, 0.0)
    } else {
        let (sa, sp) = per_agent.values().fold((0.0, 0.0), |(a, p), (ra, rp)| (a + ra, p + rp));
        (sa / n as f64, sp / n as f64)
    };
    let r_flow = flow_reward(state, cfg.v_max);
    let r_safe = safety_term(events);
    let total = w.omega1 * r_a_mean + w.omega2 * r_p_mean + w.omega3 * r_flow + w.omega4 * r_safe;
    RewardBreakdown { r_a_mean, r_p_mean, r_flow, r_safe, total, per_agent }
}
