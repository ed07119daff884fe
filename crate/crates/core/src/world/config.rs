use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Road segment and traffic demand.
///
/// Defaults reproduce the reference scenario: 250 m, four lanes, 25 m/s
/// limit, 250 veh/h/lane, 18 s episodes decided every 0.1 s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoadConfig {
    pub road_length: f64,
    pub n_lanes: usize,
    pub v_max: f64,
    /// Vehicles per hour per lane.
    pub arrival_rate: f64,
    pub episode_duration: f64,
    pub dt: f64,
    /// Fraction of arrivals that are CAVs.
    pub penetration: f64,
    pub vehicle_length: f64,
    /// A lane accepts a new vehicle only when no body overlaps `[0, entry_zone)`.
    pub entry_zone: f64,
    /// Spawn speed is uniform in `[spawn_speed_frac * v_max, v_max]`.
    pub spawn_speed_frac: f64,
    /// Relative weights of straight / left / right goals.
    pub goal_weights: [f64; 3],
    /// Arrivals stop after this many seconds when set.
    pub spawn_window: Option<f64>,
    pub lane_width: f64,
    /// Two lane changes of one vehicle inside this many seconds count as frequent.
    pub frequent_lc_window: f64,
    pub perception: PerceptionConfig,
    pub hdv: HdvParams,
}

impl Default for RoadConfig {
    fn default() -> Self {
        Self {
            road_length: 250.0,
            n_lanes: 4,
            v_max: 25.0,
            arrival_rate: 250.0,
            episode_duration: 18.0,
            dt: 0.1,
            penetration: 0.5,
            vehicle_length: 5.0,
            entry_zone: 10.0,
            spawn_speed_frac: 0.5,
            goal_weights: [1.0, 1.0, 1.0],
            spawn_window: None,
            lane_width: 3.5,
            frequent_lc_window: 3.0,
            perception: PerceptionConfig::default(),
            hdv: HdvParams::default(),
        }
    }
}

impl RoadConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(self.road_length > 0.0) {
            return fail("road_length must be positive");
        }
        if self.n_lanes < 2 {
            return fail("n_lanes must be at least 2");
        }
        if !(self.v_max > 0.0) {
            return fail("v_max must be positive");
        }
        if !(self.dt > 0.0) {
            return fail("dt must be positive");
        }
        if !(self.arrival_rate >= 0.0) {
            return fail("arrival_rate must be non-negative");
        }
        let ratio = self.episode_duration / self.dt;
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return fail("episode_duration must be a positive integer multiple of dt");
        }
        if !(0.0..=1.0).contains(&self.penetration) {
            return fail("penetration must lie in [0, 1]");
        }
        if self.arrival_probability() >= 1.0 {
            return fail("per-tick arrival probability must be below 1");
        }
        if !(self.vehicle_length > 0.0) || !(self.entry_zone >= 0.0) || !(self.lane_width > 0.0) {
            return fail("vehicle_length, entry_zone and lane_width must be positive");
        }
        if !(0.0..=1.0).contains(&self.spawn_speed_frac) {
            return fail("spawn_speed_frac must lie in [0, 1]");
        }
        if self.goal_weights.iter().any(|w| !(*w >= 0.0)) || self.goal_weights.iter().sum::<f64>() <= 0.0 {
            return fail("goal_weights must be non-negative with a positive sum");
        }
        self.perception.validate()?;
        Ok(())
    }

    /// Number of decision ticks per episode.
    pub fn n_ticks(&self) -> u64 {
        (self.episode_duration / self.dt).round() as u64
    }

    /// Bernoulli thinning of the Poisson arrival rate for one lane and one tick.
    pub fn arrival_probability(&self) -> f64 {
        self.arrival_rate * self.dt / 3600.0
    }

    /// Lateral coordinate of a lane center. The lateral axis points left,
    /// so lane 1 (leftmost) has the largest coordinate.
    pub fn lane_center(&self, lane: usize) -> f64 {
        (self.n_lanes as f64 - lane as f64 + 0.5) * self.lane_width
    }
}

/// Observation and CAV actuation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionConfig {
    /// Perception radius R.
    pub radius: f64,
    /// Neighbor rows N_max.
    pub max_neighbors: usize,
    /// Distance reported when no vehicle is present.
    pub d_max: f64,
    pub a_acc: f64,
    /// Magnitude of the deceleration command.
    pub a_dec: f64,
    /// Include every CAV as a neighbor regardless of the radius.
    pub share_cav_perception: bool,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self {
            radius: 50.0,
            max_neighbors: 6,
            d_max: 100.0,
            a_acc: 2.0,
            a_dec: 3.0,
            share_cav_perception: false,
        }
    }
}

impl PerceptionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.d_max > 0.0 && self.a_acc >= 0.0 && self.a_dec >= 0.0) {
            return Err(Error::Config("perception radius, d_max and accelerations must be positive".into()));
        }
        Ok(())
    }
}

/// Intelligent Driver Model plus a MOBIL-style lane change rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdvParams {
    /// Desired speed as a fraction of v_max.
    pub desired_speed_frac: f64,
    pub time_headway: f64,
    pub max_accel: f64,
    pub comfort_decel: f64,
    pub min_gap: f64,
    pub exponent: f64,
    /// Hard braking limit applied to the IDM output.
    pub max_brake: f64,
    pub politeness: f64,
    pub lc_threshold: f64,
    /// Largest deceleration a lane change may impose on the new follower.
    pub safe_decel: f64,
    /// Incentive added for moves toward the goal lane (and subtracted for moves away).
    pub goal_bias: f64,
    /// Minimum time between two lane changes of the same HDV.
    pub lc_cooldown: f64,
}

impl Default for HdvParams {
    fn default() -> Self {
        Self {
            desired_speed_frac: 1.0,
            time_headway: 1.5,
            max_accel: 1.5,
            comfort_decel: 2.0,
            min_gap: 2.0,
            exponent: 4.0,
            max_brake: 9.0,
            politeness: 0.3,
            lc_threshold: 0.2,
            safe_decel: 4.0,
            goal_bias: 0.6,
            lc_cooldown: 3.0,
        }
    }
}
