use serde::{Deserialize, Serialize};

use crate::world::{TickEvents, WorldState};

/// Weights of the general reward: normalized speed, intention
/// satisfaction, collisions, frequent lane changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralRewardWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for GeneralRewardWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0, w3: -5.0, w4: -0.1 }
    }
}

impl GeneralRewardWeights {
    pub fn is_valid(&self) -> bool {
        self.w1 >= 0.0 && self.w2 >= 0.0 && self.w3 <= 0.0 && self.w4 <= 0.0
    }
}

/// `(1/N) (w1 sum v_i / v_max + w2 N_sat + w3 N_col + w4 N_LC)` over the N
/// vehicles on the road this tick; zero on an empty road.
pub fn general_reward(state: &WorldState, events: &TickEvents, w: &GeneralRewardWeights, v_max: f64) -> f64 {
    let n = state.vehicles.len();
    if n == 0 {
        return 0.0;
    }
    let speed: f64 = state.vehicles.iter().map(|v| v.v / v_max).sum();
    let n_sat = events.newly_satisfied.len() as f64;
    let n_col = events.collisions.len() as f64;
    let n_lc = events.frequent_lane_changes.len() as f64;
    (w.w1 * speed + w.w2 * n_sat + w.w3 * n_col + w.w4 * n_lc) / n as f64
}
