//! Traffic metrics computed from episode traces alone.
//!
//! A vehicle record counts as on the road when `p_lon <= road_length`; this
//! keeps vehicles that collided during the tick and drops those that exited.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::world::{EpisodeTrace, RoadConfig, TickRecord, VehicleId, VehicleKind, VehicleRecord};

fn on_road<'a>(tick: &'a TickRecord, cfg: &'a RoadConfig) -> impl Iterator<Item = &'a VehicleRecord> {
    tick.vehicles.iter().filter(move |v| v.p_lon <= cfg.road_length)
}

/// Mean over non-empty ticks of the per-tick mean speed. `None` if every tick is empty.
pub fn avg_speed(trace: &EpisodeTrace, cfg: &RoadConfig) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for tick in &trace.ticks {
        let (s, n) = on_road(tick, cfg).fold((0.0, 0usize), |(s, n), v| (s + v.v, n + 1));
        if n > 0 {
            sum += s / n as f64;
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Smallest same-lane bumper gap of an episode, clamped at 0; `d_max` when
/// no two vehicles ever share a lane.
pub fn episode_min_gap(trace: &EpisodeTrace, cfg: &RoadConfig) -> f64 {
    let mut best = f64::INFINITY;
    for tick in &trace.ticks {
        let mut lanes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for v in on_road(tick, cfg) {
            lanes.entry(v.lane).or_default().push(v.p_lon);
        }
        for ps in lanes.values_mut() {
            ps.sort_by(f64::total_cmp);
            for w in ps.windows(2) {
                best = best.min(w[1] - w[0] - cfg.vehicle_length);
            }
        }
    }
    if best.is_finite() {
        best.max(0.0)
    } else {
        cfg.perception.d_max
    }
}

/// Mean of the episode minima.
pub fn min_gap(traces: &[EpisodeTrace], cfg: &RoadConfig) -> Option<f64> {
    (!traces.is_empty()).then(|| traces.iter().map(|t| episode_min_gap(t, cfg)).sum::<f64>() / traces.len() as f64)
}

fn kinds(trace: &EpisodeTrace) -> HashMap<VehicleId, VehicleKind> {
    trace.ticks.iter().flat_map(|t| t.vehicles.iter().map(|v| (v.id, v.kind))).collect()
}

/// CAV lane changes per CAV-step; 0 without CAV-steps.
pub fn lc_frequency(trace: &EpisodeTrace, cfg: &RoadConfig) -> f64 {
    let kinds = kinds(trace);
    let mut changes = 0usize;
    let mut cav_steps = 0usize;
    for tick in &trace.ticks {
        changes += tick.lane_changes.iter().filter(|lc| kinds.get(&lc.id) == Some(&VehicleKind::Cav)).count();
        cav_steps += on_road(tick, cfg).filter(|v| v.kind == VehicleKind::Cav).count();
    }
    if cav_steps == 0 {
        0.0
    } else {
        changes as f64 / cav_steps as f64
    }
}

/// Per-step ratio converted to lane changes per CAV-minute.
pub fn per_minute(ratio: f64, dt: f64) -> f64 {
    ratio * 60.0 / dt
}

/// CAVs that exited in a goal lane over CAVs spawned. `None` without CAVs.
pub fn success_rate(trace: &EpisodeTrace) -> Option<f64> {
    let spawned = trace.ticks.iter().flat_map(|t| &t.spawned).filter(|s| s.kind == VehicleKind::Cav).count();
    let success = trace.ticks.iter().flat_map(|t| &t.exits).filter(|e| e.kind == VehicleKind::Cav && e.success).count();
    (spawned > 0).then(|| success as f64 / spawned as f64)
}

/// Metrics of a batch of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub seed: u64,
    pub avg_speed: f64,
    pub min_gap: f64,
    pub lc_freq: f64,
    pub lc_per_minute: f64,
    pub succ_rate: f64,
    pub succ_rate_pct: f64,
    pub episode_return: f64,
    pub collisions: usize,
}

impl MetricsRecord {
    /// Aggregate several episodes: speeds, LC rates, success rates and
    /// returns are episode means; `min_gap` is the mean of episode minima.
    pub fn from_traces(traces: &[EpisodeTrace], cfg: &RoadConfig, episode: usize, seed: u64) -> Self {
        let mean = |xs: Vec<f64>| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        let avg_speed = mean(traces.iter().filter_map(|t| avg_speed(t, cfg)).collect());
        let lc_freq = mean(traces.iter().map(|t| lc_frequency(t, cfg)).collect());
        let succ_rate = mean(traces.iter().filter_map(success_rate).collect());
        let episode_return = mean(traces.iter().map(EpisodeTrace::total_signal).collect());
        Self {
            episode,
            seed,
            avg_speed,
            min_gap: min_gap(traces, cfg).unwrap_or(cfg.perception.d_max),
            lc_freq,
            lc_per_minute: per_minute(lc_freq, cfg.dt),
            succ_rate,
            succ_rate_pct: 100.0 * succ_rate,
            episode_return,
            collisions: traces.iter().map(EpisodeTrace::collisions).sum(),
        }
    }
}
