//! Batch reports over random finite MDPs and the equivalence chains.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lab::{
    equivalence_experiment, laurent_report, shift_invariance_check, DriftModel, EquivalenceReport, EquivalenceSetup,
    FiniteMdp, ValueBundle,
};
use crate::rewards::PotentialFieldParams;

/// One CSV row: a metric of one MDP at one discount.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabRow {
    pub mdp_seed: u64,
    pub gamma: f64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub n_mdps: usize,
    pub max_states: usize,
    pub n_actions: usize,
    pub gammas: Vec<f64>,
    pub smoothing: f64,
    pub equivalence_steps: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            n_mdps: 100,
            max_states: 12,
            n_actions: 3,
            gammas: vec![0.5, 0.9, 0.99, 0.999],
            smoothing: 1e-3,
            equivalence_steps: 1_000_000,
        }
    }
}

/// Random MDP number `k` of a batch rooted at `seed`, with 2..=max_states states.
pub fn batch_mdp(seed: u64, k: usize, cfg: &LabConfig) -> FiniteMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let n = rng.random_range(2..=cfg.max_states.max(2));
    FiniteMdp::random(n, cfg.n_actions, cfg.smoothing, &mut rng)
}

/// Rows per (MDP, gamma): decomposition error, Laurent residual and shift
/// diagnostics for a random shift in [-10, 10].
pub fn mdp_rows(seed: u64, cfg: &LabConfig) -> Result<Vec<LabRow>> {
    let mut rows = Vec::new();
    for k in 0..cfg.n_mdps {
        let mdp = batch_mdp(seed, k, cfg);
        let mdp_seed = k as u64;
        let mut shift_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
        shift_rng.set_stream(k as u64);
        let c = shift_rng.random_range(-10.0..=10.0);
        let laurent = laurent_report(&mdp, &cfg.gammas)?;
        for (&gamma, lr) in cfg.gammas.iter().zip(&laurent) {
            let bundle = ValueBundle::compute(&mdp, gamma)?;
            let shift = shift_invariance_check(&mdp, c, gamma)?;
            let mut push = |metric: &str, value: f64| rows.push(LabRow { mdp_seed, gamma, metric: metric.into(), value });
            push("decomposition_error", bundle.decomposition_error());
            push("laurent_residual", lr.max_abs_residual);
            push("shift_c", c);
            push("shift_value_error", shift.value_shift_error);
            push("shift_centered_change", shift.centered_change);
            push("shift_argmax_changes", shift.argmax_changes.len() as f64);
        }
    }
    Ok(rows)
}

/// The three reference chains: aligned drift, zero drift at the peak, and a ring.
pub fn equivalence_setups(n_steps: usize, seed: u64) -> Vec<(&'static str, EquivalenceSetup)> {
    let field = PotentialFieldParams { sigma: 100.0, zeta: 1.0, l: 250.0, y_tar: 2.0 };
    let base = EquivalenceSetup { drift: DriftModel::Frozen, field, lambda: None, n_steps, batches: 100, seed };
    let rho = 1.0 - 1e-6;
    vec![
        (
            "mean_reverting",
            EquivalenceSetup {
                drift: DriftModel::MeanReverting { rho, noise_std: 30.0 * (1.0 - rho * rho).sqrt() },
                ..base
            },
        ),
        ("frozen", base),
        ("ring", EquivalenceSetup { drift: DriftModel::Ring { speed: 1.0, noise_std: 0.5, circumference: 500.0 }, ..base }),
    ]
}

pub fn equivalence_reports(n_steps: usize, seed: u64) -> Result<Vec<(&'static str, EquivalenceReport)>> {
    equivalence_setups(n_steps, seed).into_iter().map(|(name, s)| Ok((name, equivalence_experiment(&s)?))).collect()
}

/// Plain-text digest of the lab rows and equivalence reports.
pub fn summary_text(rows: &[LabRow], eq: &[(&'static str, EquivalenceReport)]) -> String {
    let mut out = String::new();
    let max_of = |metric: &str, gamma: f64| {
        rows.iter().filter(|r| r.metric == metric && r.gamma == gamma).map(|r| r.value.abs()).fold(0.0, f64::max)
    };
    let mut gammas: Vec<f64> = rows.iter().map(|r| r.gamma).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let _ = writeln!(out, "gamma     max|decomp err|  max|e^gamma|  max|shift value err|  max|centered change|  argmax changes");
    for g in gammas {
        let _ = writeln!(
            out,
            "{g:<9} {:<16.3e} {:<13.3e} {:<21.3e} {:<21.3e} {}",
            max_of("decomposition_error", g),
            max_of("laurent_residual", g),
            max_of("shift_value_error", g),
            max_of("shift_centered_change", g),
            max_of("shift_argmax_changes", g)
        );
    }
    for (name, r) in eq {
        let _ = writeln!(
            out,
            "{name}: lambda={:.4} diff={:.3e} se={:.3e} within_3se={} alignment={:?} cos={:.3}",
            r.lambda, r.difference, r.std_err, r.within_3se, r.alignment, r.drift_cosine
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_batch_rows() {
        let cfg = LabConfig { n_mdps: 3, gammas: vec![0.5, 0.9], ..LabConfig::default() };
        let rows = mdp_rows(1, &cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 6);
        assert!(rows.iter().filter(|r| r.metric == "decomposition_error").all(|r| r.value <= 1e-10));
        let text = summary_text(&rows, &[]);
        assert_eq!(text.lines().count(), 3);
    }
}
