use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LearnerKind};
use super::metrics::MetricsRecord;
use crate::error::Result;
use crate::learners::{iql_update, select_action, vdn_update, DiscretizerSpec, StateKey, TabularQ, Transition};
use crate::percept::JointAction;
use crate::rewards::{RewardEngine, RewardSettings};
use crate::world::{run_episode_with, Env, EpisodeTrace, Policy, RoadConfig, VehicleId};

/// Traffic seed of training episode `episode` of run `seed`. Independent of
/// the reward variant, so variants face identical arrivals.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (episode as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Evaluation episodes draw from a stream disjoint from training.
pub fn eval_seed(seed: u64, episode: usize) -> u64 {
    episode_seed(seed ^ 0x5EED_0000_0000_0000, episode)
}

/// Greedy action from a table, for evaluation rollouts.
pub struct GreedyPolicy<'a> {
    pub q: &'a TabularQ,
    pub spec: &'a DiscretizerSpec,
}

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, env: &Env) -> std::result::Result<BTreeMap<VehicleId, JointAction>, String> {
        env.agents()
            .into_iter()
            .map(|id| {
                let obs = env.observe(id).map_err(|e| e.to_string())?;
                let a = self.q.greedy(self.spec.key(&obs, env.config()));
                Ok((id, JointAction::from_index(a).expect("table actions are in range")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub episode_return: f64,
    pub epsilon: f64,
    pub table_size: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub seed: u64,
    pub curve: Vec<EpisodeRow>,
    /// Periodic greedy evaluations (when `eval_every > 0`).
    pub evals: Vec<MetricsRecord>,
    /// Greedy evaluation after the last episode.
    pub final_metrics: MetricsRecord,
    pub q: TabularQ,
}

fn keys(env: &Env, spec: &DiscretizerSpec) -> Result<BTreeMap<VehicleId, StateKey>> {
    env.agents().into_iter().map(|id| Ok((id, spec.key(&env.observe(id)?, env.config())))).collect()
}

/// One training episode; returns the summed reward signal.
fn train_episode(
    q: &mut TabularQ,
    kind: LearnerKind,
    road: &RoadConfig,
    spec: &DiscretizerSpec,
    engine: &mut RewardEngine,
    traffic_seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut env = Env::new(road.clone(), traffic_seed)?;
    let mut total = 0.0;
    while !env.is_done() {
        let states = keys(&env, spec)?;
        let actions: BTreeMap<VehicleId, usize> =
            states.iter().map(|(id, s)| (*id, select_action(q, *s, rng))).collect();
        let commands = actions
            .iter()
            .map(|(id, a)| (*id, JointAction::from_index(*a).expect("in range")))
            .collect();
        let events = env.step(&commands)?;
        let r = engine.evaluate(env.state(), &events, env.config()).signal;
        total += r;

        let mut joint = Vec::with_capacity(states.len());
        for (id, s) in &states {
            let alive = env.state().get(*id).is_some_and(|v| v.alive);
            let s_next = if alive { spec.key(&env.observe(*id)?, env.config()) } else { 0 };
            joint.push((*s, actions[id], s_next, !alive));
        }
        match kind {
            LearnerKind::Iql => {
                for &(s, a, s_next, done) in &joint {
                    let t = Transition { s, a, r, s_next, done };
                    iql_update(q, &t);
                    q.buffer.push(t);
                }
                if q.params.replay_batch > 0 {
                    for t in q.buffer.sample(q.params.replay_batch, rng) {
                        iql_update(q, &t);
                    }
                }
            }
            LearnerKind::Vdn => {
                vdn_update(q, &joint, r);
            }
        }
    }
    q.end_episode();
    Ok(total)
}

/// Greedy rollouts on evaluation seeds.
pub fn evaluate(
    q: &TabularQ,
    road: &RoadConfig,
    settings: &RewardSettings,
    spec: &DiscretizerSpec,
    seed: u64,
    n: usize,
) -> Result<Vec<EpisodeTrace>> {
    (0..n)
        .map(|k| run_episode_with(road, settings, &mut GreedyPolicy { q, spec }, eval_seed(seed, k)))
        .collect()
}

/// Train one (variant, penetration, seed) cell described by `cfg`.
pub fn train_cell(cfg: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let settings = cfg.settings();
    let mut engine = RewardEngine::new(settings.clone());
    let mut q = TabularQ::new(cfg.learner.params.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut curve = Vec::with_capacity(cfg.n_episodes);
    let mut evals = Vec::new();
    for ep in 0..cfg.n_episodes {
        let epsilon = q.epsilon;
        let ret =
            train_episode(&mut q, cfg.learner.kind, &cfg.road, &cfg.discretizer, &mut engine, episode_seed(seed, ep), &mut rng)?;
        curve.push(EpisodeRow { episode: ep, episode_return: ret, epsilon, table_size: q.len() });
        if cfg.eval_every > 0 && (ep + 1) % cfg.eval_every == 0 {
            let traces = evaluate(&q, &cfg.road, &settings, &cfg.discretizer, seed, cfg.eval_episodes)?;
            evals.push(MetricsRecord::from_traces(&traces, &cfg.road, ep + 1, seed));
        }
    }
    let traces = evaluate(&q, &cfg.road, &settings, &cfg.discretizer, seed, cfg.eval_episodes)?;
    let final_metrics = MetricsRecord::from_traces(&traces, &cfg.road, cfg.n_episodes, seed);
    Ok(TrainOutcome { seed, curve, evals, final_metrics, q })
}

/// Trailing mean over up to `window` episodes ending at each index.
pub fn smooth(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// First episode whose smoothed return has covered `frac` of the way from
/// the first full window to the plateau (mean raw return of the last 10%).
/// `None` if the curve is too short or never gets there.
pub fn convergence_episode(returns: &[f64], window: usize, frac: f64) -> Option<usize> {
    if returns.len() < window.max(10) {
        return None;
    }
    let smoothed = smooth(returns, window);
    let tail = (returns.len() / 10).max(1);
    let plateau = returns[returns.len() - tail..].iter().sum::<f64>() / tail as f64;
    let start = smoothed[window - 1];
    let threshold = start + frac * (plateau - start);
    let rising = plateau >= start;
    (window - 1..smoothed.len()).find(|&i| if rising { smoothed[i] >= threshold } else { smoothed[i] <= threshold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_window() {
        assert_eq!(smooth(&[1.0, 3.0, 5.0, 7.0], 2), vec![1.0, 2.0, 4.0, 6.0]);
        assert_eq!(smooth(&[2.0; 5], 100), vec![2.0; 5]);
    }

    #[test]
    fn convergence_on_a_ramp() {
        let returns: Vec<f64> = (0..1000).map(|i| (i.min(500)) as f64).collect();
        let ep = convergence_episode(&returns, 1, 0.8).unwrap();
        assert_eq!(ep, 400);
        let flat = vec![1.0; 100];
        assert_eq!(convergence_episode(&flat, 10, 0.8), Some(9));
        assert_eq!(convergence_episode(&flat[..5], 10, 0.8), None);
    }

    #[test]
    fn short_training_run_is_deterministic() {
        let road = RoadConfig { road_length: 150.0, n_lanes: 3, arrival_rate: 600.0, ..RoadConfig::default() };
        let cfg = ExperimentConfig {
            road,
            n_episodes: 3,
            eval_episodes: 2,
            learner: super::super::config::LearnerConfig {
                params: crate::learners::QParams { replay_batch: 2, ..crate::learners::QParams::fast() },
                ..Default::default()
            },
            ..ExperimentConfig::default()
        };
        let a = train_cell(&cfg, 4).unwrap();
        let b = train_cell(&cfg, 4).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.final_metrics, b.final_metrics);
        assert!(!a.q.is_empty());
        assert!((a.curve[1].epsilon - 0.99).abs() < 1e-15);
    }
}
