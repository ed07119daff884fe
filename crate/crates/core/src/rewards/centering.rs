use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenteringMode {
    /// Subtract a fixed, externally supplied average reward.
    #[default]
    Oracle,
    /// Subtract a running estimate updated by an exponential moving average.
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CenteringState {
    pub mean_estimate: f64,
    pub beta: f64,
    pub mode: CenteringMode,
}

impl Default for CenteringState {
    fn default() -> Self {
        Self { mean_estimate: 0.0, beta: 0.01, mode: CenteringMode::Oracle }
    }
}

impl CenteringState {
    pub fn oracle(mean: f64) -> Self {
        Self { mean_estimate: mean, beta: 0.0, mode: CenteringMode::Oracle }
    }

    pub fn running(initial: f64, beta: f64) -> Self {
        Self { mean_estimate: initial, beta, mode: CenteringMode::Running }
    }
}

/// Center one reward. Running mode centers with the estimate from before
/// this reward, then moves the estimate toward it.
pub fn center_reward(r: f64, c: &mut CenteringState) -> f64 {
    let centered = r - c.mean_estimate;
    if c.mode == CenteringMode::Running {
        c.mean_estimate += c.beta * centered;
    }
    centered
}
