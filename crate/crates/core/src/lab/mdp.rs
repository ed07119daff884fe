use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ROW_TOL: f64 = 1e-12;

/// Finite MDP with a fixed stochastic policy. Row-major storage:
/// `p[(s * n_actions + a) * n_states + s2]`, `r[s * n_actions + a]`,
/// `policy[s * n_actions + a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    pub policy: Vec<f64>,
}

impl FiniteMdp {
    pub fn new(n_states: usize, n_actions: usize, p: Vec<f64>, r: Vec<f64>, policy: Vec<f64>) -> Result<Self> {
        let mdp = Self { n_states, n_actions, p, r, policy };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_states, self.n_actions);
        if n == 0 || m == 0 {
            return Err(Error::Mdp("need at least one state and one action".into()));
        }
        if self.p.len() != n * m * n || self.r.len() != n * m || self.policy.len() != n * m {
            return Err(Error::Mdp("tensor sizes do not match n_states and n_actions".into()));
        }
        for (i, row) in self.p.chunks(n).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::Mdp(format!("P(.|s={}, a={}) sums to {sum}", i / m, i % m)));
            }
        }
        for (s, row) in self.policy.chunks(m).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::Mdp(format!("pi(.|s={s}) sums to {sum}")));
            }
        }
        if self.r.iter().any(|x| !x.is_finite()) {
            return Err(Error::Mdp("rewards must be finite".into()));
        }
        Ok(())
    }

    /// Single-action MDP from a Markov chain and per-state rewards.
    pub fn from_chain(p: &[Vec<f64>], rewards: &[f64]) -> Result<Self> {
        let n = p.len();
        Self::new(n, 1, p.concat(), rewards.to_vec(), vec![1.0; n])
    }

    pub fn prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.p[(s * self.n_actions + a) * self.n_states + s2]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.r[s * self.n_actions + a]
    }

    pub fn pi(&self, s: usize, a: usize) -> f64 {
        self.policy[s * self.n_actions + a]
    }

    /// Policy-induced transition matrix.
    pub fn p_pi(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_states, self.n_states, |s, s2| {
            (0..self.n_actions).map(|a| self.pi(s, a) * self.prob(s, a, s2)).sum()
        })
    }

    /// Policy-averaged reward per state.
    pub fn r_pi(&self) -> DVector<f64> {
        DVector::from_fn(self.n_states, |s, _| (0..self.n_actions).map(|a| self.pi(s, a) * self.reward(s, a)).sum())
    }

    /// Same MDP with every reward shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { r: self.r.iter().map(|x| x + c).collect(), ..self.clone() }
    }

    /// Dirichlet(1) transition rows smoothed by `smoothing` and renormalized,
    /// rewards uniform on [-1, 1], Dirichlet(1) policy rows.
    pub fn random<R: Rng>(n_states: usize, n_actions: usize, smoothing: f64, rng: &mut R) -> Self {
        let mut simplex = |k: usize| -> Vec<f64> {
            let mut x: Vec<f64> = (0..k).map(|_| <Exp1 as Distribution<f64>>::sample(&Exp1, rng)).collect();
            let sum: f64 = x.iter().sum();
            x.iter_mut().for_each(|v| *v /= sum);
            x
        };
        let mut p = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            p.extend(simplex(n_states).into_iter().map(|x| x + smoothing));
        }
        for row in p.chunks_mut(n_states) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
        let policy: Vec<f64> = (0..n_states).flat_map(|_| simplex(n_actions)).collect();
        let r = (0..n_states * n_actions).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self { n_states, n_actions, p, r, policy }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_mdp_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..10 {
            let mdp = FiniteMdp::random(n, 3, 1e-3, &mut rng);
            mdp.validate().unwrap();
            assert!(mdp.p.iter().all(|&x| x > 0.0));
            assert!(mdp.r.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(FiniteMdp::from_chain(&[vec![0.5, 0.4], vec![0.5, 0.5]], &[0.0, 0.0]).is_err());
        assert!(FiniteMdp::from_chain(&[vec![1.0]], &[f64::NAN]).is_err());
    }

    #[test]
    fn policy_matrix_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mdp = FiniteMdp::random(6, 4, 1e-3, &mut rng);
        let p = mdp.p_pi();
        for row in p.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}
