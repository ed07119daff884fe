//! Monte-Carlo check that adding a scaled position reward to a centered
//! reward leaves its stationary mean unchanged.
//!
//! The state is a longitudinal position `x` on the target lane of a
//! potential field. Each step earns the centered reward
//! `R~ = f(x) - E_mu[f]` and the position reward `r_p = (x' - x) df/dx(x)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rewards::{potential, potential_gradient, PotentialFieldParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftModel {
    /// `x' = l + rho (x - l) + noise`: drift toward the field peak.
    MeanReverting { rho: f64, noise_std: f64 },
    /// Parked at the field peak.
    Frozen,
    /// Constant speed plus noise on a ring of the given circumference with
    /// the field peak at its middle. The drift does not follow the gradient.
    Ring { speed: f64, noise_std: f64, circumference: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftAlignment {
    /// Drift and field gradient are positively correlated under the chain.
    Aligned,
    NotAligned,
    /// Zero drift or zero gradient along the path.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSetup {
    pub drift: DriftModel,
    pub field: PotentialFieldParams,
    /// `None` calibrates lambda as std(R~) / std(r_p) on a pilot run.
    pub lambda: Option<f64>,
    pub n_steps: usize,
    pub batches: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub lambda: f64,
    pub mean_with: f64,
    pub mean_without: f64,
    pub difference: f64,
    /// Batch-means standard error of the paired difference.
    pub std_err: f64,
    pub within_3se: bool,
    /// Correlation of drift and gradient along the path.
    pub drift_cosine: f64,
    pub alignment: DriftAlignment,
    /// Stationary mean of f used for centering.
    pub oracle_mean: f64,
}

impl EquivalenceReport {
    /// Equivalence is only claimed when the drift condition holds.
    pub fn condition_holds(&self) -> bool {
        self.alignment != DriftAlignment::NotAligned
    }
}

struct Walker<'a> {
    setup: &'a EquivalenceSetup,
    rng: ChaCha8Rng,
}

impl Walker<'_> {
    fn normal(&mut self) -> f64 {
        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut self.rng)
    }

    fn start(&mut self) -> f64 {
        let l = self.setup.field.l;
        match self.setup.drift {
            DriftModel::MeanReverting { rho, noise_std } => l + noise_std / (1.0 - rho * rho).sqrt() * self.normal(),
            DriftModel::Frozen => l,
            DriftModel::Ring { circumference, .. } => self.rng.random_range(0.0..circumference),
        }
    }

    /// Next state and the conditional drift `E[x' - x | x]`.
    fn step(&mut self, x: f64) -> (f64, f64) {
        let l = self.setup.field.l;
        match self.setup.drift {
            DriftModel::MeanReverting { rho, noise_std } => {
                let drift = (rho - 1.0) * (x - l);
                (x + drift + noise_std * self.normal(), drift)
            }
            DriftModel::Frozen => (x, 0.0),
            DriftModel::Ring { speed, noise_std, .. } => (x + speed + noise_std * self.normal(), speed),
        }
    }
}

/// Position on the ring measured so the peak sits at `l`.
fn wrap(x: f64, drift: &DriftModel) -> f64 {
    match *drift {
        DriftModel::Ring { circumference, .. } => x.rem_euclid(circumference),
        _ => x,
    }
}

/// Stationary mean of `f(x, y_tar)`.
pub fn stationary_field_mean(setup: &EquivalenceSetup) -> f64 {
    let p = &setup.field;
    match setup.drift {
        DriftModel::MeanReverting { rho, noise_std } => {
            let var = noise_std * noise_std / (1.0 - rho * rho);
            p.sigma / (p.sigma * p.sigma + var).sqrt()
        }
        DriftModel::Frozen => 1.0,
        DriftModel::Ring { circumference, .. } => {
            // Uniform stationary law on the ring; trapezoid rule on the periodic integrand.
            let n = 200_000;
            let h = circumference / n as f64;
            (0..n).map(|i| potential(i as f64 * h, p.y_tar, p)).sum::<f64>() / n as f64
        }
    }
}

fn validate(setup: &EquivalenceSetup) -> Result<()> {
    setup.field.validate()?;
    if setup.n_steps == 0 || setup.batches < 2 || !setup.n_steps.is_multiple_of(setup.batches) {
        return Err(Error::Config("n_steps must be a positive multiple of batches (>= 2)".into()));
    }
    match setup.drift {
        DriftModel::MeanReverting { rho, noise_std } if !(rho.abs() < 1.0 && noise_std >= 0.0) => {
            Err(Error::Config("mean reversion needs |rho| < 1 and noise_std >= 0".into()))
        }
        DriftModel::Ring { circumference, noise_std, .. } if !(circumference > 0.0 && noise_std >= 0.0) => {
            Err(Error::Config("ring needs a positive circumference".into()))
        }
        DriftModel::Ring { circumference, .. } if (setup.field.l - circumference / 2.0).abs() > 1e-9 => {
            Err(Error::Config("ring field peak must sit at half the circumference".into()))
        }
        _ => Ok(()),
    }
}

struct PathStats {
    r_tilde: Vec<f64>,
    r_p: Vec<f64>,
    drift_dot_grad: f64,
    drift_sq: f64,
    grad_sq: f64,
}

fn simulate(setup: &EquivalenceSetup, n: usize, stream: u64, oracle_mean: f64) -> Result<PathStats> {
    let p = &setup.field;
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);
    rng.set_stream(stream);
    let mut walker = Walker { setup, rng };
    let mut x = walker.start();
    let limit = 1e6 * (p.l.abs() + p.sigma);
    let mut stats = PathStats {
        r_tilde: Vec::with_capacity(n),
        r_p: Vec::with_capacity(n),
        drift_dot_grad: 0.0,
        drift_sq: 0.0,
        grad_sq: 0.0,
    };
    for t in 0..n {
        let pos = wrap(x, &setup.drift);
        let grad = potential_gradient(pos, p.y_tar, p).dx;
        let (next, drift) = walker.step(x);
        if !next.is_finite() || (next - p.l).abs() > limit {
            return Err(Error::Diverged(format!("state {next} at step {t}")));
        }
        stats.r_tilde.push(potential(pos, p.y_tar, p) - oracle_mean);
        stats.r_p.push((next - x) * grad);
        stats.drift_dot_grad += drift * grad;
        stats.drift_sq += drift * drift;
        stats.grad_sq += grad * grad;
        x = next;
    }
    Ok(stats)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
}

pub fn equivalence_experiment(setup: &EquivalenceSetup) -> Result<EquivalenceReport> {
    validate(setup)?;
    let oracle_mean = stationary_field_mean(setup);
    let lambda = match setup.lambda {
        Some(l) => l,
        None => {
            let pilot = simulate(setup, (setup.n_steps / 10).clamp(1000, 100_000), 1, oracle_mean)?;
            let sp = std_dev(&pilot.r_p);
            if sp > 0.0 {
                std_dev(&pilot.r_tilde) / sp
            } else {
                0.0
            }
        }
    };
    let path = simulate(setup, setup.n_steps, 0, oracle_mean)?;
    let n = setup.n_steps as f64;
    let with: f64 = path.r_tilde.iter().zip(&path.r_p).map(|(r, p)| r + lambda * p).sum();
    let without: f64 = path.r_tilde.iter().sum();
    let mean_with = with / n;
    let mean_without = without / n;
    let difference = mean_with - mean_without;

    let size = setup.n_steps / setup.batches;
    let batch_means: Vec<f64> =
        path.r_p.chunks(size).map(|c| lambda * c.iter().sum::<f64>() / c.len() as f64).collect();
    let std_err = std_dev(&batch_means) / (setup.batches as f64).sqrt();

    let (drift_cosine, alignment) = if path.drift_sq == 0.0 || path.grad_sq == 0.0 {
        (0.0, DriftAlignment::Degenerate)
    } else {
        let c = path.drift_dot_grad / (path.drift_sq * path.grad_sq).sqrt();
        (c, if c > 0.5 { DriftAlignment::Aligned } else { DriftAlignment::NotAligned })
    };
    Ok(EquivalenceReport {
        lambda,
        mean_with,
        mean_without,
        difference,
        std_err,
        within_3se: difference.abs() <= 3.0 * std_err,
        drift_cosine,
        alignment,
        oracle_mean,
    })
}
