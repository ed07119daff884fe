use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::mdp::FiniteMdp;
use crate::error::{Error, Result};

/// Linear solves are accepted when the residual max-norm is below this.
pub const SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub mu: DVector<f64>,
    /// Period of the chain is greater than one (the distribution is still unique).
    pub periodic: bool,
}

fn reach(p: &DMatrix<f64>, transpose: bool) -> Vec<Option<usize>> {
    let n = p.nrows();
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let w = if transpose { p[(v, u)] } else { p[(u, v)] };
            if w > 0.0 && level[v].is_none() {
                level[v] = Some(level[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn solve(a: DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let x = a.clone().lu().solve(b).ok_or_else(|| Error::Mdp(format!("{what}: singular system")))?;
    let res = (&a * &x - b).amax();
    if !(res <= SOLVE_TOL) {
        return Err(Error::Mdp(format!("{what}: residual {res:e} above tolerance")));
    }
    Ok(x)
}

/// Unique stationary distribution of an irreducible chain, by replacing one
/// balance equation with the normalization.
pub fn stationary_distribution(p: &DMatrix<f64>) -> Result<Stationary> {
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(Error::Mdp("transition matrix must be square and non-empty".into()));
    }
    let fwd = reach(p, false);
    let bwd = reach(p, true);
    let unreachable: Vec<usize> = (0..n).filter(|&s| fwd[s].is_none() || bwd[s].is_none()).collect();
    if !unreachable.is_empty() {
        return Err(Error::Reducible { unreachable });
    }
    let mut period = 0;
    for u in 0..n {
        for v in 0..n {
            if p[(u, v)] > 0.0 {
                let (lu, lv) = (fwd[u].unwrap(), fwd[v].unwrap());
                period = gcd(period, (lu + 1).abs_diff(lv));
            }
        }
    }
    let mut a = p.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let mu = solve(a, &b, "stationary distribution")?;
    Ok(Stationary { mu, periodic: period > 1 })
}

/// `r(pi) = sum_s mu(s) sum_a pi(a|s) R(s, a)`.
pub fn average_reward(mdp: &FiniteMdp) -> Result<f64> {
    let st = stationary_distribution(&mdp.p_pi())?;
    Ok(st.mu.dot(&mdp.r_pi()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::Mdp(format!("discount {gamma} outside [0, 1)")))
    }
}

fn bellman_solve(mdp: &FiniteMdp, rewards: &DVector<f64>, gamma: f64) -> Result<DVector<f64>> {
    check_gamma(gamma)?;
    let n = mdp.n_states;
    solve(DMatrix::identity(n, n) - mdp.p_pi() * gamma, rewards, "discounted values")
}

/// `h^gamma` from `(I - gamma P_pi) h = R_pi`.
pub fn discounted_values(mdp: &FiniteMdp, gamma: f64) -> Result<DVector<f64>> {
    bellman_solve(mdp, &mdp.r_pi(), gamma)
}

/// Differential values: the Poisson equation `h = R_pi - r 1 + P_pi h` with
/// `mu . h = 0`, solved as `(I - P_pi + 1 mu^T) h = R_pi - r 1`.
pub fn differential_values(mdp: &FiniteMdp) -> Result<DVector<f64>> {
    let p = mdp.p_pi();
    let n = mdp.n_states;
    let mu = stationary_distribution(&p)?.mu;
    let r_pi = mdp.r_pi();
    let r = mu.dot(&r_pi);
    let a = DMatrix::identity(n, n) - &p + DVector::from_element(n, 1.0) * mu.transpose();
    solve(a, &r_pi.add_scalar(-r), "differential values")
}

/// `h~^gamma` from the Bellman system with centered rewards `R - r(pi)`.
pub fn centered_discounted_values(mdp: &FiniteMdp, gamma: f64) -> Result<DVector<f64>> {
    let r = average_reward(mdp)?;
    bellman_solve(mdp, &mdp.r_pi().add_scalar(-r), gamma)
}

/// Every value family of one MDP at one discount.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBundle {
    pub gamma: f64,
    pub r_pi: f64,
    pub mu: DVector<f64>,
    pub h_gamma: DVector<f64>,
    pub h_tilde: DVector<f64>,
    pub h_tilde_gamma: DVector<f64>,
    /// Laurent residual `h~^gamma - h~`.
    pub e_gamma: DVector<f64>,
}

impl ValueBundle {
    pub fn compute(mdp: &FiniteMdp, gamma: f64) -> Result<Self> {
        let mu = stationary_distribution(&mdp.p_pi())?.mu;
        let r_pi = mu.dot(&mdp.r_pi());
        let h_gamma = discounted_values(mdp, gamma)?;
        let h_tilde = differential_values(mdp)?;
        let h_tilde_gamma = centered_discounted_values(mdp, gamma)?;
        let e_gamma = &h_tilde_gamma - &h_tilde;
        Ok(Self { gamma, r_pi, mu, h_gamma, h_tilde, h_tilde_gamma, e_gamma })
    }

    /// `max_s |h^gamma(s) - r/(1-gamma) - h~^gamma(s)|`.
    pub fn decomposition_error(&self) -> f64 {
        let offset = self.r_pi / (1.0 - self.gamma);
        self.h_gamma.iter().zip(self.h_tilde_gamma.iter()).map(|(h, c)| (h - offset - c).abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaurentRow {
    pub gamma: f64,
    pub max_abs_residual: f64,
}

pub fn laurent_report(mdp: &FiniteMdp, gammas: &[f64]) -> Result<Vec<LaurentRow>> {
    let h_tilde = differential_values(mdp)?;
    gammas
        .iter()
        .map(|&gamma| {
            let c = centered_discounted_values(mdp, gamma)?;
            Ok(LaurentRow { gamma, max_abs_residual: (&c - &h_tilde).amax() })
        })
        .collect()
}

/// `Q^gamma(s, a) = R(s, a) + gamma sum_s' P(s'|s, a) h^gamma(s')`, row-major.
pub fn action_values(mdp: &FiniteMdp, gamma: f64) -> Result<Vec<f64>> {
    let h = discounted_values(mdp, gamma)?;
    let mut q = Vec::with_capacity(mdp.n_states * mdp.n_actions);
    for s in 0..mdp.n_states {
        for a in 0..mdp.n_actions {
            let next: f64 = (0..mdp.n_states).map(|s2| mdp.prob(s, a, s2) * h[s2]).sum();
            q.push(mdp.reward(s, a) + gamma * next);
        }
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub c: f64,
    pub gamma: f64,
    /// `max_s |h'^gamma - h^gamma - c/(1-gamma)|`.
    pub value_shift_error: f64,
    /// `|r'(pi) - r(pi) - c|`.
    pub average_shift_error: f64,
    /// `max_s |h~'^gamma - h~^gamma|`.
    pub centered_change: f64,
    /// States whose greedy action changed.
    pub argmax_changes: Vec<usize>,
}

impl ShiftReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.value_shift_error <= tol
            && self.average_shift_error <= tol
            && self.centered_change <= tol
            && self.argmax_changes.is_empty()
    }
}

pub fn shift_invariance_check(mdp: &FiniteMdp, c: f64, gamma: f64) -> Result<ShiftReport> {
    let shifted = mdp.shifted(c);
    let h = discounted_values(mdp, gamma)?;
    let h2 = discounted_values(&shifted, gamma)?;
    let value_shift_error = (&h2 - &h).add_scalar(-c / (1.0 - gamma)).amax();
    let average_shift_error = (average_reward(&shifted)? - average_reward(mdp)? - c).abs();
    let centered_change = (centered_discounted_values(&shifted, gamma)? - centered_discounted_values(mdp, gamma)?).amax();
    let q = action_values(mdp, gamma)?;
    let q2 = action_values(&shifted, gamma)?;
    let m = mdp.n_actions;
    let argmax_changes = (0..mdp.n_states)
        .filter(|&s| {
            crate::learners::argmax(&q[s * m..(s + 1) * m]) != crate::learners::argmax(&q2[s * m..(s + 1) * m])
        })
        .collect();
    Ok(ShiftReport { c, gamma, value_shift_error, average_shift_error, centered_change, argmax_changes })
}
