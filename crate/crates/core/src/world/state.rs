use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vehicle::{CollisionEvent, Goal, Vehicle, VehicleId, VehicleKind};

/// An arrival drawn from the traffic stream, waiting for its entry zone.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingArrival {
    pub kind: VehicleKind,
    pub goal: Goal,
    pub v: f64,
}

/// Everything on the road at one tick plus the traffic random stream.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub t: u64,
    pub vehicles: Vec<Vehicle>,
    pub collisions_this_tick: Vec<CollisionEvent>,
    /// Drives arrivals only, so traffic is identical across policies for a seed.
    pub rng: ChaCha8Rng,
    /// Arrivals waiting for a free entry zone, per lane (index 0 is lane 1).
    pub pending: Vec<VecDeque<PendingArrival>>,
    /// Bernoulli arrival successes so far, including deferred ones.
    pub arrivals: u64,
    pub next_id: u64,
}

impl WorldState {
    pub fn new(seed: u64) -> Self {
        Self {
            t: 0,
            vehicles: Vec::new(),
            collisions_this_tick: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: Vec::new(),
            arrivals: 0,
            next_id: 0,
        }
    }

    pub fn get(&self, id: VehicleId) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn alive(&self) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(|v| v.alive)
    }

    pub fn alive_in_lane(&self, lane: usize) -> impl Iterator<Item = &Vehicle> {
        self.vehicles.iter().filter(move |v| v.alive && v.lane == lane)
    }

    /// Alive CAV ids in ascending id order.
    pub fn cav_ids(&self) -> Vec<VehicleId> {
        let mut ids: Vec<VehicleId> = self.alive().filter(|v| v.is_cav()).map(|v| v.id).collect();
        ids.sort();
        ids
    }

    /// Nearest alive vehicle ahead of `me` in its lane, ordering by (p_lon, id).
    pub fn leader_of(&self, me: &Vehicle) -> Option<&Vehicle> {
        self.leader_at(me.lane, me.p_lon, Some(me.id))
    }

    pub fn follower_of(&self, me: &Vehicle) -> Option<&Vehicle> {
        self.follower_at(me.lane, me.p_lon, Some(me.id))
    }

    /// Nearest alive vehicle ahead of a (possibly hypothetical) position.
    pub fn leader_at(&self, lane: usize, p: f64, me: Option<VehicleId>) -> Option<&Vehicle> {
        let key = (p, me.map_or(u64::MAX, |id| id.0));
        self.alive_in_lane(lane)
            .filter(|o| Some(o.id) != me && (o.p_lon, o.id.0) > key)
            .min_by(|a, b| a.p_lon.total_cmp(&b.p_lon).then(a.id.cmp(&b.id)))
    }

    pub fn follower_at(&self, lane: usize, p: f64, me: Option<VehicleId>) -> Option<&Vehicle> {
        let key = (p, me.map_or(0, |id| id.0));
        self.alive_in_lane(lane)
            .filter(|o| Some(o.id) != me && (o.p_lon, o.id.0) < key)
            .max_by(|a, b| a.p_lon.total_cmp(&b.p_lon).then(a.id.cmp(&b.id)))
    }

    /// True when a body at front position `p` in `lane` would overlap an
    /// alive vehicle other than `me`.
    pub fn overlaps(&self, lane: usize, p: f64, me: VehicleId, length: f64) -> bool {
        self.alive_in_lane(lane).any(|o| o.id != me && (o.p_lon - p).abs() <= length)
    }
}

/// Bumper-to-bumper distance from a follower front at `follow` to a leader
/// front at `lead`.
pub fn bumper_gap(lead: f64, follow: f64, length: f64) -> f64 {
    lead - length - follow
}
