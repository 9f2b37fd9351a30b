//! Two-marginal transport solvers and the dense simplex oracle.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tol;

pub mod entropic;
mod flow;
pub mod simplex;

pub use entropic::{solve_entropic, EntropicParams, EntropicSolution};
pub use flow::solve_exact_transport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Dual potentials with `u[a] + v[b] <= cost[a][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Duals {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Sparse coupling of two discrete measures.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub value: f64,
    pub duals: Option<Duals>,
}

impl TransportPlan {
    pub fn to_dense(&self, rows: usize, cols: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, cols);
        for e in &self.entries {
            m[(e.source, e.target)] += e.mass;
        }
        m
    }

    /// Largest per-atom deviation of the plan marginals from `(mu, nu)`.
    pub fn marginal_violation(&self, mu: &[f64], nu: &[f64]) -> f64 {
        let dense = self.to_dense(mu.len(), nu.len());
        let rows = dense.row_sums();
        let cols = dense.col_sums();
        rows.iter()
            .zip(mu)
            .chain(cols.iter().zip(nu))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `sum_{a,b} plan[a][b] * cost[a][b]`, skipping zero-mass cells.
pub fn plan_value(entries: &[PlanEntry], cost: &Matrix) -> f64 {
    entries.iter().filter(|e| e.mass > 0.0).map(|e| e.mass * cost[(e.source, e.target)]).sum()
}

pub(crate) fn check_inputs(mu: &[f64], nu: &[f64], cost: &Matrix) -> Result<()> {
    if cost.shape() != (mu.len(), nu.len()) {
        return Err(Error::Shape(format!(
            "cost is {:?}, measures are {}x{}",
            cost.shape(),
            mu.len(),
            nu.len()
        )));
    }
    for w in mu.iter().chain(nu) {
        if !(*w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidArgument(format!("bad weight {w}")));
        }
    }
    for m in [mu, nu] {
        let mass: f64 = m.iter().sum();
        if (mass - 1.0).abs() > tol::MARGINAL {
            return Err(Error::NotNormalized { mass });
        }
    }
    if cost.as_slice().iter().any(|c| c.is_nan() || *c < 0.0) {
        return Err(Error::InvalidArgument("cost entries must be >= 0 or +inf".into()));
    }
    Ok(())
}
