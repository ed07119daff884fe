//! Reward families: general (GR), centered (CR) and differentiated (DR).

mod centering;
mod differentiated;
mod field;
mod general;

use serde::{Deserialize, Serialize};

pub use centering::{center_reward, CenteringMode, CenteringState};
pub use differentiated::{
    action_reward, env_reward, flow_reward, safety_term, DiffRewardWeights, FieldSettings, RewardBreakdown,
};
pub use field::{
    lateral_position_term, position_reward, position_reward_continuous, position_reward_discrete, potential,
    potential_gradient, FieldGradient, PositionRewardForm, PotentialFieldParams,
};
pub use general::{general_reward, GeneralRewardWeights};

use crate::error::{Error, Result};
use crate::world::{RoadConfig, TickEvents, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RewardVariant {
    GR,
    CR,
    DR,
}

impl RewardVariant {
    pub const ALL: [RewardVariant; 3] = [RewardVariant::GR, RewardVariant::CR, RewardVariant::DR];

    pub fn name(self) -> &'static str {
        match self {
            RewardVariant::GR => "GR",
            RewardVariant::CR => "CR",
            RewardVariant::DR => "DR",
        }
    }
}

impl std::str::FromStr for RewardVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GR" => Ok(RewardVariant::GR),
            "CR" => Ok(RewardVariant::CR),
            "DR" => Ok(RewardVariant::DR),
            other => Err(Error::Config(format!("unknown reward variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSettings {
    pub variant: RewardVariant,
    pub general: GeneralRewardWeights,
    pub diff: DiffRewardWeights,
    pub field: FieldSettings,
    pub centering: CenteringState,
    /// Keeping speed earns the action reward at or above this fraction of v_max.
    pub high_speed_frac: f64,
}

impl Default for RewardSettings {
    fn default() -> Self {
        Self {
            variant: RewardVariant::DR,
            general: GeneralRewardWeights::default(),
            diff: DiffRewardWeights::default(),
            field: FieldSettings::default(),
            centering: CenteringState::default(),
            high_speed_frac: 0.9,
        }
    }
}

impl RewardSettings {
    pub fn validate(&self) -> Result<()> {
        if !self.general.is_valid() {
            return Err(Error::Config("general weights need w1, w2 >= 0 and w3, w4 <= 0".into()));
        }
        if !self.diff.is_valid() {
            return Err(Error::Config("external weights need omega1..3 >= 0 and omega4 <= 0".into()));
        }
        if !(self.field.sigma > 0.0 && self.field.zeta > 0.0) {
            return Err(Error::Config("field sigma and zeta must be positive".into()));
        }
        Ok(())
    }
}

/// All reward signals of one tick. `signal` is the one selected by the variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickRewards {
    pub general: f64,
    pub centered: f64,
    pub differentiated: RewardBreakdown,
    pub signal: f64,
}

/// Evaluates every reward family each tick and owns the centering state.
#[derive(Debug, Clone)]
pub struct RewardEngine {
    pub settings: RewardSettings,
    pub centering: CenteringState,
}

impl RewardEngine {
    pub fn new(settings: RewardSettings) -> Self {
        let centering = settings.centering;
        Self { settings, centering }
    }

    pub fn evaluate(&mut self, state: &WorldState, events: &TickEvents, cfg: &RoadConfig) -> TickRewards {
        let s = &self.settings;
        let general = general_reward(state, events, &s.general, cfg.v_max);
        let centered = center_reward(general, &mut self.centering);
        let differentiated = env_reward(state, events, &s.diff, &s.field, s.high_speed_frac, cfg);
        let signal = match s.variant {
            RewardVariant::GR => general,
            RewardVariant::CR => centered,
            RewardVariant::DR => differentiated.total,
        };
        TickRewards { general, centered, differentiated, signal }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percept::{JointAction, LatAction, LonAction};
    use crate::world::{AgentMotion, CollisionEvent, Goal, GoalKind, Vehicle, VehicleId, VehicleKind};

    fn state_with_speeds(speeds: &[f64]) -> WorldState {
        let mut s = WorldState::new(0);
        for (i, v) in speeds.iter().enumerate() {
            let mut veh = Vehicle::new(VehicleId(i as u64), VehicleKind::Cav, 1 + i % 4, *v, Goal::new(GoalKind::Straight), 0);
            veh.p_lon = 10.0 * i as f64;
            s.vehicles.push(veh);
        }
        s
    }

    fn collision(a: u64, b: u64) -> CollisionEvent {
        CollisionEvent { lead_id: VehicleId(a), follow_id: VehicleId(b), tick: 0, lane: 1 }
    }

    #[test]
    fn general_reward_worked_values() {
        let only_speed = GeneralRewardWeights { w1: 1.0, w2: 0.0, w3: 0.0, w4: 0.0 };
        let ev = TickEvents::default();
        assert_eq!(general_reward(&state_with_speeds(&[25.0, 25.0]), &ev, &only_speed, 25.0), 1.0);
        assert_eq!(general_reward(&state_with_speeds(&[0.0, 0.0, 0.0]), &ev, &only_speed, 25.0), 0.0);

        let w = GeneralRewardWeights { w1: 1.0, w2: 0.0, w3: -1.0, w4: 0.0 };
        let ev = TickEvents { collisions: vec![collision(0, 1)], ..TickEvents::default() };
        let r = general_reward(&state_with_speeds(&[12.5; 4]), &ev, &w, 25.0);
        assert!((r - 0.25).abs() < 1e-15);
        assert_eq!(general_reward(&WorldState::new(0), &ev, &w, 25.0), 0.0);
    }

    #[test]
    fn flow_and_safety_terms() {
        assert_eq!(flow_reward(&state_with_speeds(&[25.0; 3]), 25.0), 1.0);
        assert_eq!(flow_reward(&state_with_speeds(&[0.0; 3]), 25.0), 0.0);
        assert_eq!(flow_reward(&state_with_speeds(&[25.0, 0.0, 25.0, 0.0]), 25.0), 0.5);
        assert_eq!(flow_reward(&WorldState::new(0), 25.0), 0.0);

        assert_eq!(safety_term(&TickEvents::default()), 0.0);
        let one = TickEvents { collisions: vec![collision(1, 2)], ..TickEvents::default() };
        assert_eq!(safety_term(&one), 2.0);
        let two = TickEvents { collisions: vec![collision(1, 2), collision(3, 4)], ..TickEvents::default() };
        assert_eq!(safety_term(&two), 4.0);
    }

    #[test]
    fn action_reward_cases() {
        let acc = JointAction::new(LonAction::Acc, LatAction::Left);
        let keep = JointAction::new(LonAction::Keep, LatAction::Hold);
        let dec = JointAction::new(LonAction::Dec, LatAction::Hold);
        assert_eq!(action_reward(acc, 0.0, 25.0, 0.9), 1.0);
        assert_eq!(action_reward(dec, 25.0, 25.0, 0.9), 0.0);
        assert_eq!(action_reward(keep, 25.0, 25.0, 0.9), 1.0);
        assert_eq!(action_reward(keep, 10.0, 25.0, 0.9), 0.0);
    }

    fn single_cav_events(action: JointAction, x: f64, v: f64) -> (WorldState, TickEvents) {
        let cfg = RoadConfig::default();
        let mut s = state_with_speeds(&[cfg.v_max]);
        s.vehicles[0].p_lon = x;
        s.vehicles[0].lane = 2;
        let motion = AgentMotion {
            id: VehicleId(0),
            goal: Goal::new(GoalKind::Straight),
            x,
            lane: 2,
            v_before: v,
            vx: v,
            lateral_velocity: 0,
            action,
        };
        (s, TickEvents { motions: vec![motion], ..TickEvents::default() })
    }

    #[test]
    fn env_reward_single_cav() {
        let cfg = RoadConfig::default();
        // at the field peak with no lateral motion the position reward is 0
        let (s, ev) = single_cav_events(JointAction::new(LonAction::Acc, LatAction::Hold), cfg.road_length, cfg.v_max);
        let w = DiffRewardWeights { omega1: 1.0, omega2: 1.0, omega3: 1.0, omega4: -1.0, lambda: 1.0 };
        let b = env_reward(&s, &ev, &w, &FieldSettings::default(), 0.9, &cfg);
        assert_eq!(b.per_agent[&VehicleId(0)], (1.0, 0.0));
        assert!((b.total - 2.0).abs() < 1e-15);

        let zero = DiffRewardWeights { omega1: 0.0, omega2: 0.0, omega3: 0.0, omega4: 0.0, lambda: 0.0 };
        assert_eq!(env_reward(&s, &ev, &zero, &FieldSettings::default(), 0.9, &cfg).total, 0.0);
    }

    #[test]
    fn env_reward_is_linear_in_weights() {
        let cfg = RoadConfig::default();
        let (s, ev) = single_cav_events(JointAction::new(LonAction::Keep, LatAction::Hold), 180.0, 20.0);
        let w = DiffRewardWeights::default();
        let doubled = DiffRewardWeights {
            omega1: 2.0 * w.omega1,
            omega2: 2.0 * w.omega2,
            omega3: 2.0 * w.omega3,
            omega4: 2.0 * w.omega4,
            lambda: w.lambda,
        };
        let field = FieldSettings::default();
        let a = env_reward(&s, &ev, &w, &field, 0.9, &cfg);
        let b = env_reward(&s, &ev, &doubled, &field, 0.9, &cfg);
        assert!((b.total - 2.0 * a.total).abs() < 1e-9 * a.total.abs().max(1.0));
        let recomposed = w.omega1 * a.r_a_mean + w.omega2 * a.r_p_mean + w.omega3 * a.r_flow + w.omega4 * a.r_safe;
        assert!((a.total - recomposed).abs() < 1e-12);
    }

    #[test]
    fn empty_cav_set_keeps_flow_and_safety() {
        let cfg = RoadConfig::default();
        let s = state_with_speeds(&[25.0]);
        let ev = TickEvents { collisions: vec![collision(7, 8)], ..TickEvents::default() };
        let w = DiffRewardWeights::default();
        let b = env_reward(&s, &ev, &w, &FieldSettings::default(), 0.9, &cfg);
        assert!((b.total - (w.omega3 * 1.0 + w.omega4 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn engine_selects_variant_signal() {
        let cfg = RoadConfig::default();
        let (s, ev) = single_cav_events(JointAction::IDLE, 100.0, 20.0);
        for variant in RewardVariant::ALL {
            let settings = RewardSettings { variant, centering: CenteringState::oracle(0.25), ..RewardSettings::default() };
            let mut engine = RewardEngine::new(settings);
            let r = engine.evaluate(&s, &ev, &cfg);
            let expected = match variant {
                RewardVariant::GR => r.general,
                RewardVariant::CR => r.general - 0.25,
                RewardVariant::DR => r.differentiated.total,
            };
            assert_eq!(r.signal, expected);
        }
        assert_eq!("dr".parse::<RewardVariant>().unwrap(), RewardVariant::DR);
        assert!("XR".parse::<RewardVariant>().is_err());
    }
}
