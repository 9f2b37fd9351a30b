//! Entropic transport by log-domain Sinkhorn scaling.

use alloc::vec;
use alloc::vec::Vec;

use super::{check_inputs, plan_value, solve_exact_transport, Duals, PlanEntry, TransportPlan};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicParams {
    pub epsilon: f64,
    pub max_iter: usize,
    /// Stop once the max-norm marginal violation drops below this.
    pub stop_tol: f64,
}

impl Default for EntropicParams {
    fn default() -> Self {
        Self { epsilon: 1e-2, max_iter: 100_000, stop_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropicSolution {
    /// Rounded, exactly feasible plan; `value` is its primal cost.
    pub plan: TransportPlan,
    /// Scaling potentials `(f, g)`; `-inf` on zero-mass atoms.
    pub duals: Duals,
    pub iterations: usize,
    /// Marginal violation of the unrounded Sinkhorn plan at exit.
    pub violation: f64,
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(values.map(|v| libm::exp(v - max)).sum::<f64>())
}

/// Sinkhorn iterations on the kernel `exp(-cost / epsilon)`.
///
/// Forbidden cells are outside the kernel support. The returned plan is the
/// Sinkhorn plan rounded onto the exact marginals (row and column clipping
/// followed by a rank-one correction).
pub fn solve_entropic(
    mu: &[f64],
    nu: &[f64],
    cost: &Matrix,
    params: EntropicParams,
) -> Result<EntropicSolution> {
    check_inputs(mu, nu, cost)?;
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let eps = params.epsilon;
    let (m, n) = (mu.len(), nu.len());
    let rows: Vec<usize> = (0..m).filter(|&a| mu[a] > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&b| nu[b] > 0.0).collect();
    let mut f = vec![f64::NEG_INFINITY; m];
    let mut g = vec![f64::NEG_INFINITY; n];
    for &a in &rows {
        f[a] = 0.0;
    }
    for &b in &cols {
        g[b] = 0.0;
    }

    let plan_cell = |f: &[f64], g: &[f64], a: usize, b: usize| -> f64 {
        let c = cost[(a, b)];
        if c == f64::INFINITY {
            0.0
        } else {
            libm::exp((f[a] + g[b] - c) / eps)
        }
    };

    let mut violation = f64::INFINITY;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        for &a in &rows {
            let lse = log_sum_exp(cols.iter().map(|&b| (g[b] - cost[(a, b)]) / eps));
            if lse == f64::NEG_INFINITY {
                return Err(Error::Infeasible);
            }
            f[a] = eps * libm::log(mu[a]) - eps * lse;
        }
        for &b in &cols {
            let lse = log_sum_exp(rows.iter().map(|&a| (f[a] - cost[(a, b)]) / eps));
            if lse == f64::NEG_INFINITY {
                return Err(Error::Infeasible);
            }
            g[b] = eps * libm::log(nu[b]) - eps * lse;
        }
        violation = rows
            .iter()
            .map(|&a| (cols.iter().map(|&b| plan_cell(&f, &g, a, b)).sum::<f64>() - mu[a]).abs())
            .fold(0.0, f64::max);
        if violation < params.stop_tol {
            break;
        }
    }
    if !(violation < params.stop_tol) {
        return Err(Error::NotConverged { iterations, violation });
    }

    let mut plan = Matrix::from_fn(m, n, |a, b| {
        if f[a] == f64::NEG_INFINITY || g[b] == f64::NEG_INFINITY {
            0.0
        } else {
            plan_cell(&f, &g, a, b)
        }
    });
    round_to_marginals(&mut plan, mu, nu, cost)?;

    let entries: Vec<PlanEntry> = (0..m)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter(|&(a, b)| plan[(a, b)] > 0.0)
        .map(|(a, b)| PlanEntry { source: a, target: b, mass: plan[(a, b)] })
        .collect();
    let value = plan_value(&entries, cost);
    Ok(EntropicSolution {
        plan: TransportPlan { entries, value, duals: None },
        duals: Duals { u: f, v: g },
        iterations,
        violation,
    })
}

fn round_to_marginals(plan: &mut Matrix, mu: &[f64], nu: &[f64], cost: &Matrix) -> Result<()> {
    let (m, n) = plan.shape();
    let rows = plan.row_sums();
    for a in 0..m {
        if rows[a] > mu[a] {
            let x = mu[a] / rows[a];
            for b in 0..n {
                plan[(a, b)] *= x;
            }
        }
    }
    let cols = plan.col_sums();
    for b in 0..n {
        if cols[b] > nu[b] {
            let y = nu[b] / cols[b];
            for a in 0..m {
                plan[(a, b)] *= y;
            }
        }
    }
    let err_r: Vec<f64> = mu.iter().zip(plan.row_sums()).map(|(w, r)| (w - r).max(0.0)).collect();
    let err_c: Vec<f64> = nu.iter().zip(plan.col_sums()).map(|(w, c)| (w - c).max(0.0)).collect();
    let total: f64 = err_r.iter().sum();
    if total <= 0.0 {
        return Ok(());
    }
    let blocked = (0..m).any(|a| {
        err_r[a] > 0.0 && (0..n).any(|b| err_c[b] > 0.0 && cost[(a, b)] == f64::INFINITY)
    });
    if !blocked {
        for a in 0..m {
            for b in 0..n {
                plan[(a, b)] += err_r[a] * err_c[b] / total;
            }
        }
        return Ok(());
    }
    // The rank-one correction would touch forbidden cells; route the residual exactly.
    let col_total: f64 = err_c.iter().sum();
    let r: Vec<f64> = err_r.iter().map(|x| x / total).collect();
    let c: Vec<f64> = err_c.iter().map(|x| x / col_total).collect();
    let fix = solve_exact_transport(&r, &c, cost)?;
    for e in fix.entries {
        plan[(e.source, e.target)] += e.mass * total;
    }
    Ok(())
}
