//! Linear value models and their weighted least-squares fits, against
//! oracle values or oracle gradients.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Continuously differentiable basis function on a point of `R^l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasisFn {
    Constant,
    /// `s[dim]^power`.
    Power { dim: usize, power: i32 },
    /// `exp(-|s - center|^2 / (2 width^2))`.
    Rbf { center: Vec<f64>, width: f64 },
    /// 1 within `tol` (max norm) of `point`, else 0. Piecewise constant, so
    /// only useful for value projections on a grid.
    Indicator { point: Vec<f64>, tol: f64 },
}

impl BasisFn {
    pub fn value(&self, s: &[f64]) -> f64 {
        match self {
            BasisFn::Constant => 1.0,
            BasisFn::Power { dim, power } => s[*dim].powi(*power),
            BasisFn::Rbf { center, width } => {
                let d2: f64 = s.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * width * width)).exp()
            }
            BasisFn::Indicator { point, tol } => {
                let near = s.iter().zip(point).all(|(a, b)| (a - b).abs() <= *tol);
                f64::from(u8::from(near))
            }
        }
    }

    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; s.len()];
        match self {
            BasisFn::Constant | BasisFn::Indicator { .. } => {}
            BasisFn::Power { dim, power } => {
                g[*dim] = if *power == 0 { 0.0 } else { f64::from(*power) * s[*dim].powi(power - 1) };
            }
            BasisFn::Rbf { center, width } => {
                let v = self.value(s);
                for (gi, (a, b)) in g.iter_mut().zip(s.iter().zip(center)) {
                    *gi = -(a - b) / (width * width) * v;
                }
            }
        }
        g
    }

    /// Zero gradient everywhere.
    pub fn is_constant(&self) -> bool {
        matches!(self, BasisFn::Constant | BasisFn::Power { power: 0, .. })
    }
}

/// `h_theta(s) = sum_j theta_j psi_j(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub theta: Vec<f64>,
    pub basis: Vec<BasisFn>,
}

impl LinearModel {
    pub fn new(basis: Vec<BasisFn>) -> Self {
        Self { theta: vec![0.0; basis.len()], basis }
    }

    /// One indicator per grid point.
    pub fn tabular(grid: &[Vec<f64>]) -> Self {
        Self::new(grid.iter().map(|p| BasisFn::Indicator { point: p.clone(), tol: 0.0 }).collect())
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        self.theta.iter().zip(&self.basis).map(|(t, b)| t * b.value(s)).sum()
    }

    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; s.len()];
        for (t, b) in self.theta.iter().zip(&self.basis) {
            for (gi, bi) in g.iter_mut().zip(b.gradient(s)) {
                *gi += t * bi;
            }
        }
        g
    }

    pub fn features(&self, grid: &[Vec<f64>]) -> DMatrix<f64> {
        DMatrix::from_fn(grid.len(), self.basis.len(), |i, j| self.basis[j].value(&grid[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub theta: Vec<f64>,
    /// Weighted squared residual norm of the fitted objective.
    pub residual: f64,
}

const RANK_TOL: f64 = 1e-10;

fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::Config(format!("expected {n} weights, got {}", weights.len())));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Config("weights must be non-negative with a positive sum".into()));
    }
    Ok(())
}

/// Solve `min |A x - b|^2` for full column rank `A`; `columns` maps A's
/// columns back to basis indices for the rank error.
fn least_squares(a: DMatrix<f64>, b: DVector<f64>, columns: &[usize]) -> Result<(DVector<f64>, f64)> {
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let rank = r.diagonal().iter().take_while(|x| x.abs() > RANK_TOL * scale.max(f64::MIN_POSITIVE)).count();
    if rank < a.ncols() {
        // The pivoted QR moves dependent columns last.
        let mut order = DMatrix::from_fn(1, a.ncols(), |_, j| j as f64);
        qr.p().permute_columns(&mut order);
        let mut indices: Vec<usize> = order.iter().skip(rank).map(|&j| columns[j as usize]).collect();
        indices.sort_unstable();
        return Err(Error::RankDeficient { indices });
    }
    let x = a
        .clone()
        .svd(true, true)
        .solve(&b, 0.0)
        .map_err(|e| Error::Config(format!("least squares failed: {e}")))?;
    let residual = (&a * &x - &b).norm_squared();
    Ok((x, residual))
}

/// `argmin_theta |h_theta - oracle|^2_pi` over the grid.
pub fn td_projection(model: &LinearModel, grid: &[Vec<f64>], oracle: &[f64], weights: &[f64]) -> Result<Projection> {
    if oracle.len() != grid.len() {
        return Err(Error::Config("oracle and grid sizes differ".into()));
    }
    check_weights(weights, grid.len())?;
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let phi = model.features(grid);
    let a = DMatrix::from_fn(grid.len(), phi.ncols(), |i, j| sw[i] * phi[(i, j)]);
    let b = DVector::from_fn(grid.len(), |i, _| sw[i] * oracle[i]);
    let columns: Vec<usize> = (0..phi.ncols()).collect();
    let (x, residual) = least_squares(a, b, &columns)?;
    Ok(Projection { theta: x.iter().copied().collect(), residual })
}

/// `argmin_theta |grad h_theta - oracle_gradient|^2_pi`. Constant basis
/// functions do not enter the objective; their coefficients are pinned to 0.
pub fn gradient_td_projection(
    model: &LinearModel,
    grid: &[Vec<f64>],
    oracle_gradient: &[Vec<f64>],
    weights: &[f64],
) -> Result<Projection> {
    if oracle_gradient.len() != grid.len() {
        return Err(Error::Config("oracle gradient and grid sizes differ".into()));
    }
    check_weights(weights, grid.len())?;
    let active: Vec<usize> = (0..model.basis.len()).filter(|&j| !model.basis[j].is_constant()).collect();
    if active.is_empty() {
        return Err(Error::AllConstantBasis);
    }
    let dim = grid.first().map_or(0, Vec::len);
    let rows = grid.len() * dim;
    let mut a = DMatrix::zeros(rows, active.len());
    let mut b = DVector::zeros(rows);
    for (i, s) in grid.iter().enumerate() {
        let sw = weights[i].sqrt();
        for (c, &j) in active.iter().enumerate() {
            for (k, g) in model.basis[j].gradient(s).into_iter().enumerate() {
                a[(i * dim + k, c)] = sw * g;
            }
        }
        for k in 0..dim {
            b[i * dim + k] = sw * oracle_gradient[i][k];
        }
    }
    let (x, residual) = least_squares(a, b, &active)?;
    let mut theta = vec![0.0; model.basis.len()];
    for (c, &j) in active.iter().enumerate() {
        theta[j] = x[c];
    }
    Ok(Projection { theta, residual })
}

/// Central differences of samples on a uniform 1-D grid (one-sided at the ends).
pub fn finite_difference_1d(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            _ if n < 2 => 0.0,
            0 => (values[1] - values[0]) / spacing,
            _ if i == n - 1 => (values[n - 1] - values[n - 2]) / spacing,
            _ => (values[i + 1] - values[i - 1]) / (2.0 * spacing),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_1d(n: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![lo + (hi - lo) * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn square_is_represented_exactly() {
        let grid = grid_1d(11, -1.0, 1.0);
        let oracle: Vec<f64> = grid.iter().map(|s| s[0] * s[0]).collect();
        let w = vec![1.0; grid.len()];
        let model = LinearModel::new(vec![BasisFn::Power { dim: 0, power: 2 }]);
        let p = td_projection(&model, &grid, &oracle, &w).unwrap();
        assert!((p.theta[0] - 1.0).abs() < 1e-12);
        let grads: Vec<Vec<f64>> = grid.iter().map(|s| vec![2.0 * s[0]]).collect();
        let g = gradient_td_projection(&model, &grid, &grads, &w).unwrap();
        assert!((g.theta[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_basis_is_rank_deficient() {
        let grid = grid_1d(5, 0.0, 1.0);
        let model = LinearModel::new(vec![
            BasisFn::Power { dim: 0, power: 1 },
            BasisFn::Constant,
            BasisFn::Power { dim: 0, power: 1 },
        ]);
        let err = td_projection(&model, &grid, &[0.0; 5], &[1.0; 5]).unwrap_err();
        match err {
            Error::RankDeficient { indices } => assert_eq!(indices.len(), 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn constants_are_excluded_from_gradient_fit() {
        let grid = grid_1d(9, -2.0, 2.0);
        let grads: Vec<Vec<f64>> = grid.iter().map(|s| vec![2.0 * s[0] + 1.0]).collect();
        let w = vec![1.0; grid.len()];
        let base = vec![BasisFn::Power { dim: 0, power: 2 }, BasisFn::Power { dim: 0, power: 1 }];
        let a = gradient_td_projection(&LinearModel::new(base.clone()), &grid, &grads, &w).unwrap();
        let mut with_const = base;
        with_const.push(BasisFn::Constant);
        let b = gradient_td_projection(&LinearModel::new(with_const), &grid, &grads, &w).unwrap();
        assert!((a.theta[0] - b.theta[0]).abs() < 1e-12 && (a.theta[1] - b.theta[1]).abs() < 1e-12);
        assert_eq!(b.theta[2], 0.0);
        let only = LinearModel::new(vec![BasisFn::Constant]);
        assert!(matches!(gradient_td_projection(&only, &grid, &grads, &w), Err(Error::AllConstantBasis)));
    }

    #[test]
    fn rbf_gradient_matches_finite_difference() {
        let b = BasisFn::Rbf { center: vec![0.3, -0.2], width: 0.7 };
        let s = [0.1, 0.4];
        let h = 1e-6;
        let g = b.gradient(&s);
        for k in 0..2 {
            let mut up = s;
            let mut dn = s;
            up[k] += h;
            dn[k] -= h;
            let fd = (b.value(&up) - b.value(&dn)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn finite_difference_of_square() {
        let d = finite_difference_1d(&[0.0, 1.0, 4.0, 9.0], 1.0);
        assert_eq!(d, vec![1.0, 2.0, 4.0, 5.0]);
    }
}
