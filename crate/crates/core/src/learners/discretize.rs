use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percept::Observation;
use crate::world::RoadConfig;

/// Packed discrete state (mixed radix over the binned components).
pub type StateKey = u64;

/// Binning of an observation into a finite key space.
///
/// Components, most significant first: speed, d_front, d_left, d_right,
/// lane, goal, relative speed of the nearest neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizerSpec {
    pub speed_bins: usize,
    /// Bins per gap distance, log-spaced between `gap_floor` and d_max.
    pub gap_bins: usize,
    pub gap_floor: f64,
    /// Buckets: slower than `-rel_speed_band`, within the band, faster.
    pub rel_speed_bins: usize,
    pub rel_speed_band: f64,
}

impl Default for DiscretizerSpec {
    fn default() -> Self {
        Self { speed_bins: 5, gap_bins: 4, gap_floor: 5.0, rel_speed_bins: 3, rel_speed_band: 2.0 }
    }
}

impl DiscretizerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.speed_bins == 0 || self.gap_bins == 0 || !(self.gap_floor > 0.0) {
            return Err(Error::Config("discretizer needs at least one bin and a positive gap floor".into()));
        }
        if !matches!(self.rel_speed_bins, 1 | 3) {
            return Err(Error::Config("rel_speed_bins must be 1 or 3".into()));
        }
        Ok(())
    }

    fn radices(&self, n_lanes: usize) -> [u64; 7] {
        let g = self.gap_bins as u64;
        [self.speed_bins as u64, g, g, g, n_lanes as u64, 3, self.rel_speed_bins as u64]
    }

    /// Number of distinct keys for a road with `n_lanes` lanes.
    pub fn key_space(&self, n_lanes: usize) -> u64 {
        self.radices(n_lanes).iter().product()
    }

    fn gap_bin(&self, d: f64, d_max: f64) -> u64 {
        if self.gap_bins == 1 || d <= self.gap_floor {
            return 0;
        }
        let ratio = (d / self.gap_floor).ln() / (d_max / self.gap_floor).ln();
        ((ratio * self.gap_bins as f64) as u64).min(self.gap_bins as u64 - 1)
    }

    /// Component bins in key order.
    pub fn bins(&self, obs: &Observation, cfg: &RoadConfig) -> [u64; 7] {
        let s = &obs.self_state;
        let d_max = cfg.perception.d_max;
        let speed = ((s.v / cfg.v_max * self.speed_bins as f64) as u64).min(self.speed_bins as u64 - 1);
        let lane = (cfg.n_lanes as f64 + 0.5 - s.p_lat / cfg.lane_width).round() as u64;
        let lane = lane.clamp(1, cfg.n_lanes as u64) - 1;
        let goal = s.g.iter().position(|&x| x == 1.0).unwrap_or(0) as u64;
        let rel = if self.rel_speed_bins == 1 || obs.n_real == 0 {
            self.rel_speed_bins as u64 / 2
        } else {
            let dv = obs.neighbors[0].d_v;
            if dv < -self.rel_speed_band {
                0
            } else if dv > self.rel_speed_band {
                2
            } else {
                1
            }
        };
        [
            speed,
            self.gap_bin(s.d_front, d_max),
            self.gap_bin(s.d_left, d_max),
            self.gap_bin(s.d_right, d_max),
            lane,
            goal,
            rel,
        ]
    }

    pub fn key(&self, obs: &Observation, cfg: &RoadConfig) -> StateKey {
        let bins = self.bins(obs, cfg);
        self.radices(cfg.n_lanes).iter().zip(bins).fold(0, |acc, (r, b)| acc * r + b)
    }
}
