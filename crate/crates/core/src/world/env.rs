use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RoadConfig;
use super::dynamics::{cav_lateral, cav_longitudinal, detect_collisions, process_exits, spawn_arrivals};
use super::hdv::{hdv_accelerations, hdv_lateral, integrate};
use super::state::WorldState;
use super::trace::{EpisodeTrace, TickRecord};
use super::vehicle::VehicleId;
use super::{AgentMotion, LaneChange, TickEvents};
use crate::error::{Error, Result};
use crate::percept::{encode_observation, JointAction, Observation};
use crate::rewards::{RewardEngine, RewardSettings};

/// A road episode driven one decision at a time.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: RoadConfig,
    state: WorldState,
}

impl Env {
    pub fn new(cfg: RoadConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, state: WorldState::new(seed) })
    }

    /// Wrap an existing state (for scripted scenarios).
    pub fn from_state(cfg: RoadConfig, state: WorldState) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, state })
    }

    pub fn config(&self) -> &RoadConfig {
        &self.cfg
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn tick(&self) -> u64 {
        self.state.t
    }

    pub fn is_done(&self) -> bool {
        self.state.t >= self.cfg.n_ticks()
    }

    /// Alive CAVs, ascending id.
    pub fn agents(&self) -> Vec<VehicleId> {
        self.state.cav_ids()
    }

    pub fn observe(&self, id: VehicleId) -> Result<Observation> {
        encode_observation(&self.state, id, &self.cfg)
    }

    /// Advance one tick. Alive CAVs missing from `actions` keep speed and lane.
    /// An id that is not an alive CAV rejects the whole step.
    pub fn step(&mut self, actions: &BTreeMap<VehicleId, JointAction>) -> Result<TickEvents> {
        let cfg = &self.cfg;
        let state = &mut self.state;
        state.vehicles.retain(|v| v.alive);
        state.collisions_this_tick.clear();
        for id in actions.keys() {
            if !state.get(*id).is_some_and(|v| v.alive && v.is_cav()) {
                return Err(Error::UnknownAgent(*id));
            }
        }

        let mut commands = actions.clone();
        for id in state.cav_ids() {
            commands.entry(id).or_insert(JointAction::IDLE);
        }
        let before: BTreeMap<VehicleId, (f64, usize, f64)> =
            state.alive().filter(|v| v.is_cav()).map(|v| (v.id, (v.p_lon, v.lane, v.v))).collect();

        let tick = state.t;
        let spawned = spawn_arrivals(state, cfg);
        let mut lane_changes = cav_lateral(state, &commands, cfg)?;
        lane_changes.extend(hdv_lateral(state, cfg));

        let accels = hdv_accelerations(state, cfg);
        cav_longitudinal(state, &commands, cfg);
        for (id, a) in accels {
            if let Some(veh) = state.vehicles.iter_mut().find(|v| v.id == id) {
                let next = (veh.v + a * cfg.dt).clamp(0.0, cfg.v_max);
                integrate(veh, next, cfg.dt);
            }
        }

        let collisions = detect_collisions(state, cfg.vehicle_length);
        let exits = process_exits(state, cfg);

        let window = (cfg.frequent_lc_window / cfg.dt).round() as u64;
        let mut frequent = Vec::new();
        for LaneChange { id, .. } in &lane_changes {
            if let Some(v) = state.vehicles.iter_mut().find(|v| v.id == *id) {
                while v.recent_lane_changes.front().is_some_and(|&t0| tick >= t0 + window) {
                    v.recent_lane_changes.pop_front();
                }
                v.recent_lane_changes.push_back(tick);
                if v.recent_lane_changes.len() >= 2 {
                    frequent.push(*id);
                }
            }
        }
        let mut newly_satisfied = Vec::new();
        for v in state.vehicles.iter_mut().filter(|v| v.is_cav() && !v.intention_met) {
            if v.goal.is_satisfied(v.lane, cfg.n_lanes) {
                v.intention_met = true;
                newly_satisfied.push(v.id);
            }
        }

        let motions = before
            .iter()
            .filter_map(|(id, &(x, lane, v_before))| {
                let veh = state.get(*id)?;
                Some(AgentMotion {
                    id: *id,
                    goal: veh.goal,
                    x,
                    lane,
                    v_before,
                    vx: veh.v,
                    lateral_velocity: (lane as i64 - veh.lane as i64).signum() as i8,
                    action: commands[id],
                })
            })
            .collect();

        state.t += 1;
        Ok(TickEvents {
            tick,
            spawned,
            lane_changes,
            collisions,
            exits,
            newly_satisfied,
            frequent_lane_changes: frequent,
            motions,
        })
    }
}

/// Source of CAV commands for an episode.
pub trait Policy {
    fn act(&mut self, env: &Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String>;
}

/// Every CAV keeps its speed and lane.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdlePolicy;

impl Policy for IdlePolicy {
    fn act(&mut self, env: &Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String> {
        Ok(env.agents().into_iter().map(|id| (id, JointAction::IDLE)).collect())
    }
}

/// Uniformly random joint actions from its own seeded stream.
#[derive(Debug, Clone)]
pub struct UniformRandomPolicy {
    rng: ChaCha8Rng,
}

impl UniformRandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for UniformRandomPolicy {
    fn act(&mut self, env: &Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String> {
        Ok(env
            .agents()
            .into_iter()
            .map(|id| (id, JointAction::from_index(self.rng.random_range(0..JointAction::COUNT)).expect("in range")))
            .collect())
    }
}

/// Adapter for closures.
pub struct FnPolicy<F>(pub F);

impl<F> Policy for FnPolicy<F>
where
    F: FnMut(&Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String>,
{
    fn act(&mut self, env: &Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String> {
        (self.0)(env)
    }
}

/// Roll out one episode with default reward settings.
pub fn run_episode(cfg: &RoadConfig, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeTrace> {
    run_episode_with(cfg, &RewardSettings::default(), policy, seed)
}

/// Roll out one episode of exactly `episode_duration / dt` ticks. A policy
/// failure stops the rollout and returns the partial trace marked invalid.
pub fn run_episode_with(
    cfg: &RoadConfig,
    rewards: &RewardSettings,
    policy: &mut dyn Policy,
    seed: u64,
) -> Result<EpisodeTrace> {
    let mut env = Env::new(cfg.clone(), seed)?;
    let mut engine = RewardEngine::new(rewards.clone());
    let mut trace = EpisodeTrace::new(seed);
    while !env.is_done() {
        let actions = match policy.act(&env) {
            Ok(a) => a,
            Err(reason) => {
                trace.fail(Error::Policy { tick: env.tick(), reason }.to_string());
                return Ok(trace);
            }
        };
        let events = match env.step(&actions) {
            Ok(e) => e,
            Err(e) => {
                trace.fail(Error::Policy { tick: env.tick(), reason: e.to_string() }.to_string());
                return Ok(trace);
            }
        };
        let rewards = engine.evaluate(env.state(), &events, env.config());
        trace.ticks.push(TickRecord::capture(env.state(), &events, &actions, rewards));
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::VehicleKind;

    #[test]
    fn reference_episode_has_180_ticks() {
        let cfg = RoadConfig::default();
        assert_eq!(cfg.n_ticks(), 180);
        let trace = run_episode(&cfg, &mut IdlePolicy, 1).unwrap();
        assert!(trace.valid);
        assert_eq!(trace.ticks.len(), 180);
    }

    #[test]
    fn same_seed_same_trace() {
        let cfg = RoadConfig::default();
        let a = run_episode(&cfg, &mut UniformRandomPolicy::new(3), 7).unwrap();
        let b = run_episode(&cfg, &mut UniformRandomPolicy::new(3), 7).unwrap();
        assert_eq!(a.to_jsonl().unwrap(), b.to_jsonl().unwrap());
    }

    #[test]
    fn full_penetration_has_no_hdvs() {
        let cfg = RoadConfig { penetration: 1.0, arrival_rate: 900.0, ..RoadConfig::default() };
        let trace = run_episode(&cfg, &mut IdlePolicy, 5).unwrap();
        let kinds: Vec<VehicleKind> = trace.ticks.iter().flat_map(|t| t.vehicles.iter().map(|v| v.kind)).collect();
        assert!(!kinds.is_empty());
        assert!(kinds.iter().all(|k| *k == VehicleKind::Cav));
    }

    #[test]
    fn policy_failure_marks_trace_invalid() {
        let cfg = RoadConfig::default();
        let mut calls = 0;
        let mut failing = FnPolicy(|env: &Env| {
            calls += 1;
            if env.tick() == 10 {
                Err("boom".to_string())
            } else {
                Ok(BTreeMap::new())
            }
        });
        let trace = run_episode(&cfg, &mut failing, 1).unwrap();
        assert!(!trace.valid);
        assert_eq!(trace.ticks.len(), 10);
        assert!(trace.failure.as_deref().unwrap().contains("boom"));
    }

    #[test]
    fn collided_vehicles_are_gone_next_tick() {
        let cfg = RoadConfig { arrival_rate: 0.0, ..RoadConfig::default() };
        let mut state = WorldState::new(0);
        let mut a = super::super::Vehicle::new(
            VehicleId(1),
            VehicleKind::Cav,
            2,
            0.0,
            super::super::Goal::new(super::super::GoalKind::Straight),
            0,
        );
        a.p_lon = 50.0;
        let mut b = a.clone();
        b.id = VehicleId(2);
        b.p_lon = 44.0;
        b.v = 20.0;
        state.vehicles.extend([a, b]);
        let mut env = Env::from_state(cfg, state).unwrap();
        let events = env.step(&BTreeMap::new()).unwrap();
        assert_eq!(events.collisions.len(), 1);
        assert!(env.state().vehicles.iter().all(|v| !v.alive));
        env.step(&BTreeMap::new()).unwrap();
        assert!(env.state().vehicles.is_empty());
    }
}
