use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CheckResult, Witness};
use crate::error::{Error, Result};
use crate::model::{Path, ProblemInstance};
use crate::path::{path_cost, paths, random_path};
use crate::solver::HjmotSolution;

/// Path spaces up to this size are checked exhaustively.
pub const EXHAUSTIVE_LIMIT: u128 = 20_000;
/// Number of random paths drawn when the path space is larger.
pub const SAMPLED_PATHS: usize = 100_000;

/// Per-stage potentials `v[k][x]` over augmented positions, with
/// `sum_k v_k(x_k) <= c(path)` for every path.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingPotentials {
    pub v: Vec<Vec<f64>>,
}

impl SplittingPotentials {
    pub fn sum_along(&self, instance: &ProblemInstance, path: &Path) -> f64 {
        path.0.iter().enumerate().map(|(k, &x)| self.v[k][instance.aug_position(k, x)]).sum()
    }
}

/// Potentials built from the reduced-problem duals: `u` on the first stage,
/// `v` on the last, zero in between. The gauge puts `v_K = 0` at the first
/// terminal reached by the solution.
pub fn splitting_potentials(instance: &ProblemInstance, solution: &HjmotSolution) -> Result<SplittingPotentials> {
    let duals = solution.duals.as_ref().ok_or(Error::MissingDuals)?;
    let k = instance.k();
    if duals.u.len() != instance.stage_len(0) || duals.v.len() != instance.stage_len(k) {
        return Err(Error::Shape("duals do not match the endpoint stages".into()));
    }
    let shift = solution
        .atoms
        .iter()
        .map(|a| a.path.terminal())
        .min()
        .map_or(0.0, |b| duals.v[b]);
    let mut v: Vec<Vec<f64>> = (0..=k).map(|j| vec![0.0; instance.aug_len(j)]).collect();
    v[0] = duals.u.iter().map(|u| u + shift).collect();
    v[k] = duals.v.iter().map(|x| x - shift).collect();
    Ok(SplittingPotentials { v })
}

/// Outcome of the splitting inequality and support equality checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingCheck {
    /// Largest `sum v - c(path)` over the checked paths (positive is a violation).
    pub worst_violation: f64,
    pub violation_witness: Option<Path>,
    /// Largest `|c(path) - sum v|` over support paths.
    pub worst_support_slack: f64,
    pub support_witness: Option<Path>,
    /// `|sum_k <v_k, mu_k> - M| / max(1, |M|)`.
    pub duality_gap: f64,
    pub checked: usize,
    pub exhaustive: bool,
}

impl SplittingCheck {
    /// Passes when all three quantities are at most `tol`.
    pub fn to_result(&self, tol: f64) -> CheckResult {
        let slack = self.worst_violation.max(self.worst_support_slack).max(self.duality_gap);
        let pass = slack <= tol;
        let witness = (!pass).then(|| {
            let (path, detail) = if self.worst_violation >= self.worst_support_slack.max(self.duality_gap) {
                (self.violation_witness.clone(), alloc::format!("potentials exceed path cost by {}", self.worst_violation))
            } else if self.worst_support_slack >= self.duality_gap {
                (self.support_witness.clone(), alloc::format!("support path slack {}", self.worst_support_slack))
            } else {
                (None, alloc::format!("duality gap {}", self.duality_gap))
            };
            Witness { paths: path.into_iter().collect(), permutations: Vec::new(), detail }
        });
        CheckResult::new("splitting", pass, slack, witness)
    }
}

fn scaled(diff: f64, cost: f64) -> f64 {
    diff / cost.abs().max(1.0)
}

pub fn check_splitting(
    instance: &ProblemInstance,
    potentials: &SplittingPotentials,
    solution: &HjmotSolution,
    seed: u64,
) -> SplittingCheck {
    let mut worst_violation = f64::NEG_INFINITY;
    let mut violation_witness = None;
    let mut checked = 0usize;
    let mut visit = |p: Path| {
        let c = path_cost(instance, &p);
        checked += 1;
        if c == f64::INFINITY {
            return;
        }
        let d = potentials.sum_along(instance, &p) - c;
        if d > worst_violation {
            worst_violation = d;
            violation_witness = Some(p);
        }
    };
    let exhaustive = instance.path_space_size() <= EXHAUSTIVE_LIMIT;
    if exhaustive {
        paths(instance, None, None).for_each(&mut visit);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLED_PATHS {
            visit(random_path(instance, &mut rng));
        }
        for atom in &solution.atoms {
            visit(atom.path.clone());
        }
    }

    let mut worst_support_slack = 0.0f64;
    let mut support_witness = None;
    for atom in &solution.atoms {
        let c = path_cost(instance, &atom.path);
        let d = (c - potentials.sum_along(instance, &atom.path)).abs();
        if !(d <= worst_support_slack) {
            worst_support_slack = d;
            support_witness = Some(atom.path.clone());
        }
    }
    let dual = dual_objective(instance, potentials, solution);
    SplittingCheck {
        worst_violation: worst_violation.max(0.0),
        violation_witness,
        worst_support_slack,
        support_witness,
        duality_gap: scaled((dual - solution.value).abs(), solution.value),
        checked,
        exhaustive,
    }
}

/// `sum_k <v_k, mu_k>` with the solution's stage marginals.
pub fn dual_objective(instance: &ProblemInstance, potentials: &SplittingPotentials, solution: &HjmotSolution) -> f64 {
    (0..=instance.k())
        .map(|k| {
            let mu = solution.stage_measure(instance, k);
            mu.iter().zip(&potentials.v[k]).filter(|(m, _)| **m > 0.0).map(|(m, v)| m * v).sum::<f64>()
        })
        .sum()
}
