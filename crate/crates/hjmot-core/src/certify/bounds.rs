use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{AugIndex, DiscreteMeasure, Path, ProblemInstance};
use crate::path::{active_indices, max_adjacent_matrix};
use crate::solver::HjmotSolution;
use crate::tol;
use crate::transport::solve_exact_transport;

/// Sum of two-stage transport costs under the maximum adjacent cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeBound {
    /// `C~_i` for each consecutive pair `(i, i + 1)`; `+inf` when infeasible.
    pub per_stage: Vec<f64>,
    pub bound: f64,
    pub m: f64,
    /// `M <= bound` within the relative tolerance.
    pub holds: bool,
}

fn stage_measures(instance: &ProblemInstance, intermediate: &[DiscreteMeasure]) -> Result<Vec<Vec<f64>>> {
    let k = instance.k();
    if intermediate.len() != k.saturating_sub(1) {
        return Err(Error::Shape(alloc::format!(
            "expected {} intermediate measures, got {}",
            k.saturating_sub(1),
            intermediate.len()
        )));
    }
    let mut out = Vec::with_capacity(k + 1);
    out.push(instance.mu0.weights.clone());
    for (j, m) in intermediate.iter().enumerate() {
        let aug = m.augmented();
        if aug.len() != instance.aug_len(j + 1) {
            return Err(Error::Shape(alloc::format!("stage {} measure has length {}", j + 1, aug.len())));
        }
        out.push(aug);
    }
    out.push(instance.mu_k.weights.clone());
    Ok(out)
}

/// `sum_i C~_i(mu_i, mu_{i+1})` for the given intermediate marginals, compared
/// against the objective `m_value`.
pub fn upper_bound_via_tilde(
    instance: &ProblemInstance,
    intermediate: &[DiscreteMeasure],
    m_value: f64,
) -> Result<TildeBound> {
    let measures = stage_measures(instance, intermediate)?;
    let mut per_stage = Vec::with_capacity(instance.k());
    for i in 0..instance.k() {
        let cost = max_adjacent_matrix(instance, i);
        let value = match solve_exact_transport(&measures[i], &measures[i + 1], &cost) {
            Ok(plan) => plan.value,
            Err(Error::Infeasible) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        per_stage.push(value);
    }
    let bound: f64 = per_stage.iter().sum();
    Ok(TildeBound { per_stage, bound, m: m_value, holds: tol::leq(m_value, bound) })
}

/// Stage-wise decomposition of `M` through the realized transition costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `C^_i` for each consecutive pair.
    pub per_stage: Vec<f64>,
    pub sum: f64,
    pub m: f64,
    /// `|sum - M|`.
    pub gap: f64,
    pub pass: bool,
}

fn precondition(instance: &ProblemInstance, solution: &HjmotSolution) -> Result<()> {
    let mut by_source: BTreeMap<usize, &Path> = BTreeMap::new();
    for atom in &solution.atoms {
        if let Some(prev) = by_source.insert(atom.path.source(), &atom.path) {
            return Err(Error::MongePrecondition {
                stage: 0,
                detail: alloc::format!("source {} splits over several paths", atom.path.source()),
                paths: alloc::vec![prev.clone(), atom.path.clone()],
            });
        }
    }
    for i in 1..instance.k() {
        let mut seen: BTreeMap<usize, &Path> = BTreeMap::new();
        for atom in &solution.atoms {
            let AugIndex::Point(x) = atom.path.0[i] else { continue };
            match seen.get(&x) {
                Some(prev) if prev.0[i..] != atom.path.0[i..] => {
                    return Err(Error::MongePrecondition {
                        stage: i,
                        detail: alloc::format!("paths through point {x} continue differently"),
                        paths: alloc::vec![(*prev).clone(), atom.path.clone()],
                    });
                }
                Some(_) => {}
                None => {
                    seen.insert(x, &atom.path);
                }
            }
        }
    }
    Ok(())
}

/// Realized transition costs between stages `i` and `i + 1` over augmented
/// positions. A pair visited by a support path costs the next leg of that
/// path: `c_{i,i+1}` between two points, the leg to the next active stage when
/// a point is followed by skip, and 0 when leaving skip. Pairs no support path
/// visits are `+inf`.
///
/// Requires the Monge-type precondition: one path per source, and identical
/// continuations for paths that share a point.
pub fn realized_transition_costs(instance: &ProblemInstance, solution: &HjmotSolution, i: usize) -> Result<Matrix> {
    precondition(instance, solution)?;
    Ok(transition_matrix(instance, solution, i))
}

fn transition_matrix(instance: &ProblemInstance, solution: &HjmotSolution, i: usize) -> Matrix {
    let mut m = Matrix::filled(instance.aug_len(i), instance.aug_len(i + 1), f64::INFINITY);
    for atom in &solution.atoms {
        let p = &atom.path.0;
        let value = match (p[i], p[i + 1]) {
            (AugIndex::Point(x), AugIndex::Point(y)) => instance.pair_cost(i, i + 1, x, y),
            (AugIndex::Point(x), AugIndex::Skip) => {
                let active = active_indices(&atom.path).indices;
                let j = active.iter().copied().find(|&j| j > i).unwrap_or(instance.k());
                let y = p[j].point().unwrap_or(0);
                instance.pair_cost(i, j, x, y)
            }
            (AugIndex::Skip, _) => 0.0,
        };
        let a = instance.aug_position(i, p[i]);
        let b = instance.aug_position(i + 1, p[i + 1]);
        m[(a, b)] = value;
    }
    m
}

/// Solves each two-stage problem between the solution's marginals under the
/// realized transition costs and compares `sum_i C^_i` with `M`.
/// `pass` means the gap is within `tol * max(1, |M|)`.
pub fn decomposition_check(instance: &ProblemInstance, solution: &HjmotSolution, tol: f64) -> Result<Decomposition> {
    precondition(instance, solution)?;
    let mut per_stage = Vec::with_capacity(instance.k());
    for i in 0..instance.k() {
        let cost = transition_matrix(instance, solution, i);
        let mu = solution.stage_measure(instance, i);
        let nu = solution.stage_measure(instance, i + 1);
        per_stage.push(solve_exact_transport(&mu, &nu, &cost)?.value);
    }
    let sum: f64 = per_stage.iter().sum();
    let gap = (sum - solution.value).abs();
    let pass = gap <= tol * solution.value.abs().max(1.0);
    Ok(Decomposition { per_stage, sum, m: solution.value, gap, pass })
}
