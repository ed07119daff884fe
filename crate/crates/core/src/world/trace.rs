use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::state::WorldState;
use super::vehicle::{CollisionEvent, Goal, VehicleId, VehicleKind};
use super::{ExitEvent, LaneChange, TickEvents};
use crate::error::Result;
use crate::percept::JointAction;
use crate::rewards::TickRewards;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub id: VehicleId,
    pub kind: VehicleKind,
    pub lane: usize,
    pub p_lon: f64,
    pub v: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnRecord {
    pub id: VehicleId,
    pub kind: VehicleKind,
    pub goal: Goal,
    pub lane: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub id: VehicleId,
    pub action: usize,
}

/// State after one tick plus everything that happened during it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub vehicles: Vec<VehicleRecord>,
    pub spawned: Vec<SpawnRecord>,
    pub lane_changes: Vec<LaneChange>,
    pub collisions: Vec<CollisionEvent>,
    pub exits: Vec<ExitEvent>,
    pub newly_satisfied: Vec<VehicleId>,
    pub frequent_lane_changes: Vec<VehicleId>,
    pub actions: Vec<ActionRecord>,
    pub rewards: TickRewards,
}

impl TickRecord {
    pub fn capture(
        state: &WorldState,
        events: &TickEvents,
        actions: &BTreeMap<VehicleId, JointAction>,
        rewards: TickRewards,
    ) -> Self {
        let vehicles = state
            .vehicles
            .iter()
            .map(|v| VehicleRecord { id: v.id, kind: v.kind, lane: v.lane, p_lon: v.p_lon, v: v.v, alive: v.alive })
            .collect();
        let spawned = events
            .spawned
            .iter()
            .filter_map(|id| state.get(*id))
            .map(|v| SpawnRecord { id: v.id, kind: v.kind, goal: v.goal, lane: v.lane })
            .collect();
        Self {
            tick: events.tick,
            vehicles,
            spawned,
            lane_changes: events.lane_changes.clone(),
            collisions: events.collisions.clone(),
            exits: events.exits.clone(),
            newly_satisfied: events.newly_satisfied.clone(),
            frequent_lane_changes: events.frequent_lane_changes.clone(),
            actions: actions.iter().map(|(id, a)| ActionRecord { id: *id, action: a.index() }).collect(),
            rewards,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub ticks: Vec<TickRecord>,
    pub valid: bool,
    pub failure: Option<String>,
}

impl EpisodeTrace {
    pub fn new(seed: u64) -> Self {
        Self { seed, ticks: Vec::new(), valid: true, failure: None }
    }

    pub fn fail(&mut self, reason: String) {
        self.valid = false;
        self.failure = Some(reason);
    }

    pub fn collisions(&self) -> usize {
        self.ticks.iter().map(|t| t.collisions.len()).sum()
    }

    pub fn total_signal(&self) -> f64 {
        self.ticks.iter().map(|t| t.rewards.signal).sum()
    }

    /// One JSON object per tick, preceded by a header line with seed and status.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({ "seed": self.seed, "valid": self.valid, "failure": self.failure });
        writeln!(w, "{header}")?;
        for t in &self.ticks {
            serde_json::to_writer(&mut w, t)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            seed: u64,
            valid: bool,
            failure: Option<String>,
        }
        let mut lines = r.lines();
        let header: Header = match lines.next() {
            Some(line) => serde_json::from_str(&line?)?,
            None => return Err(crate::Error::Config("empty trace".into())),
        };
        let mut ticks = Vec::new();
        for line in lines {
            let line = line?;
            if !line.trim().is_empty() {
                ticks.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self { seed: header.seed, ticks, valid: header.valid, failure: header.failure })
    }
}
