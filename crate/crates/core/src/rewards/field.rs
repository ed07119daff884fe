//! Goal-centered potential field and the position reward derived from it.
//!
//! `f(x, y) = exp(-(l - x)^2 / (2 sigma^2)) / (zeta |y_tar - y| + 1)` with `x`
//! the longitudinal position and `y` the lane index (increasing to the
//! right). The position reward is the agent velocity dotted with the field
//! gradient, in two forms:
//!
//! - [`position_reward_continuous`]: `vx * df/dx + lane_rate * df/dy`, where
//!   `lane_rate` is the change of lane index per decision.
//! - [`position_reward_discrete`]: the discrete form
//!   `[vx (l - x) + zeta vy sign(y - y_tar) / (zeta |y_tar - y| + 1)] f`
//!   with `vy` the lateral velocity on a left-pointing axis (+1 for a move
//!   left) and `sign(y - y_tar) := -vy` on the target lane.
//!
//! With `vy = -lane_rate` the two lateral terms coincide off the target
//! lane; the longitudinal terms differ by the factor `1 / sigma^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialFieldParams {
    /// Longitudinal decay.
    pub sigma: f64,
    /// Lateral decay per lane.
    pub zeta: f64,
    /// Target longitudinal coordinate (the road exit).
    pub l: f64,
    /// Target lane index.
    pub y_tar: f64,
}

impl PotentialFieldParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 && self.zeta > 0.0 && self.l > 0.0 {
            Ok(())
        } else {
            Err(Error::Config("potential field needs sigma > 0, zeta > 0, l > 0".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionRewardForm {
    /// The discrete closed form with its target-lane sign convention.
    #[default]
    Discrete,
    /// Velocity dotted with the analytic gradient; the discrete lateral
    /// term is used on the target lane where `df/dy` has a kink.
    Analytic,
}

pub fn potential(x: f64, y: f64, p: &PotentialFieldParams) -> f64 {
    let lon = (-(p.l - x).powi(2) / (2.0 * p.sigma * p.sigma)).exp();
    lon / (p.zeta * (p.y_tar - y).abs() + 1.0)
}

/// Partial derivatives of the field. `dy` is `None` on the target lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGradient {
    pub dx: f64,
    pub dy: Option<f64>,
}

pub fn potential_gradient(x: f64, y: f64, p: &PotentialFieldParams) -> FieldGradient {
    let f = potential(x, y, p);
    let dx = f * (p.l - x) / (p.sigma * p.sigma);
    let dy = (y != p.y_tar).then(|| {
        let s = (y - p.y_tar).signum();
        -f * p.zeta * s / (p.zeta * (p.y_tar - y).abs() + 1.0)
    });
    FieldGradient { dx, dy }
}

/// `vx * df/dx + lane_rate * df/dy`. Fails on the target lane, where the
/// caller must fall back to the discrete convention.
pub fn position_reward_continuous(vx: f64, lane_rate: f64, x: f64, y: f64, p: &PotentialFieldParams) -> Result<f64> {
    let g = potential_gradient(x, y, p);
    let dy = g.dy.ok_or(Error::LateralKink)?;
    Ok(vx * g.dx + lane_rate * dy)
}

/// Lateral bracket term of the discrete position reward (before the factor f).
pub fn lateral_position_term(vy: i8, y: f64, p: &PotentialFieldParams) -> f64 {
    let vy = f64::from(vy);
    let s = if y == p.y_tar { -vy } else { (y - p.y_tar).signum() };
    p.zeta * vy * s / (p.zeta * (p.y_tar - y).abs() + 1.0)
}

/// Discrete position reward, `vy` in {-1, 0, 1} with +1 meaning a move left.
pub fn position_reward_discrete(vx: f64, vy: i8, x: f64, y: f64, p: &PotentialFieldParams) -> f64 {
    (vx * (p.l - x) + lateral_position_term(vy, y, p)) * potential(x, y, p)
}

/// Position reward in the selected form.
pub fn position_reward(form: PositionRewardForm, vx: f64, vy: i8, x: f64, y: f64, p: &PotentialFieldParams) -> f64 {
    match form {
        PositionRewardForm::Discrete => position_reward_discrete(vx, vy, x, y, p),
        PositionRewardForm::Analytic => match position_reward_continuous(vx, -f64::from(vy), x, y, p) {
            Ok(r) => r,
            Err(_) => {
                let f = potential(x, y, p);
                vx * potential_gradient(x, y, p).dx + lateral_position_term(vy, y, p) * f
            }
        },
    }
}
