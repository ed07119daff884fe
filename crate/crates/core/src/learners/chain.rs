use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Driving noise `N(t+1)` of a [`SteadyChain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// No noise; the chain is deterministic.
    None,
    Gaussian { std: f64 },
    /// Uniform on `[0, 1)`, convenient for inverse-CDF finite chains.
    Uniform,
}

impl Noise {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { std } => std * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng),
            Noise::Uniform => rng.random(),
        }
    }
}

pub type Kernel = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type RewardFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scalar nonlinear state-space chain `S(t+1) = a(S(t), N(t+1))` with reward `R(S(t))`.
#[derive(Clone)]
pub struct SteadyChain {
    pub transition: Kernel,
    pub noise: Noise,
    pub reward: RewardFn,
    /// Trajectories leaving `[-bound, bound]` count as diverged.
    pub bound: f64,
}

impl fmt::Debug for SteadyChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteadyChain").field("noise", &self.noise).field("bound", &self.bound).finish()
    }
}

impl SteadyChain {
    pub fn new(
        transition: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        noise: Noise,
        reward: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { transition: Arc::new(transition), noise, reward: Arc::new(reward), bound: 1e9 }
    }

    pub fn step<R: Rng>(&self, s: f64, rng: &mut R) -> f64 {
        (self.transition)(s, self.noise.draw(rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate {
    pub start: f64,
    pub mean: f64,
    pub std_err: f64,
}

/// Monte-Carlo discounted value from each start state. Rollout `k` uses the
/// same random stream for every start (common random numbers).
pub fn estimate_chain_values(
    chain: &SteadyChain,
    starts: &[f64],
    gamma: f64,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<ValueEstimate>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config("gamma must lie in (0, 1)".into()));
    }
    if gamma.powi(horizon as i32) >= 1e-6 {
        return Err(Error::Config(format!("horizon {horizon} too short for gamma {gamma}")));
    }
    if n_rollouts == 0 {
        return Err(Error::Config("need at least one rollout".into()));
    }
    starts
        .iter()
        .map(|&s0| {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for k in 0..n_rollouts {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let mut s = s0;
                let mut g = 0.0;
                let mut disc = 1.0;
                for _ in 0..horizon {
                    g += disc * (chain.reward)(s);
                    disc *= gamma;
                    s = chain.step(s, &mut rng);
                    if !s.is_finite() || s.abs() > chain.bound {
                        return Err(Error::Diverged(format!("state {s} from start {s0}")));
                    }
                }
                sum += g;
                sum_sq += g * g;
            }
            let n = n_rollouts as f64;
            let mean = sum / n;
            let var = if n_rollouts > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
            Ok(ValueEstimate { start: s0, mean, std_err: (var / n).sqrt() })
        })
        .collect()
}
