//! The path-coupling problem: solve by reduction, lift back to paths, and an
//! independent dense LP oracle over the whole path space.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{validate, DiscreteMeasure, Path, ProblemInstance};
use crate::path::{path_cost, paths};
use crate::reduction::{reduced_cost_table, ReducedCostTable};
use crate::tol;
use crate::transport::{simplex, solve_entropic, solve_exact_transport, Duals, EntropicParams, TransportPlan};

/// Path space size limit for [`solve_full_lp_oracle`].
pub const LP_ORACLE_LIMIT: u128 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Entropic(EntropicParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathAtom {
    pub path: Path,
    pub mass: f64,
}

/// Optimal path coupling with its intermediate marginals and objective `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct HjmotSolution {
    /// Atoms sorted by path.
    pub atoms: Vec<PathAtom>,
    pub value: f64,
    /// Marginals of stages `1..K`, skip mass included; entry `k - 1` is stage `k`.
    pub intermediate_marginals: Vec<DiscreteMeasure>,
    /// Duals of the reduced two-marginal problem (exact method only).
    pub duals: Option<Duals>,
}

impl HjmotSolution {
    /// Builds a solution from atoms, deriving the intermediate marginals.
    pub fn from_atoms(instance: &ProblemInstance, atoms: Vec<PathAtom>, value: f64, duals: Option<Duals>) -> Self {
        let intermediate_marginals = (1..instance.k())
            .map(|k| DiscreteMeasure::from_augmented(stage_pushforward(instance, &atoms, k)))
            .collect();
        Self { atoms, value, intermediate_marginals, duals }
    }

    /// Augmented marginal of stage `k`: the fixed endpoint measures at `0` and
    /// `K`, the stored intermediate marginal otherwise.
    pub fn stage_measure(&self, instance: &ProblemInstance, k: usize) -> Vec<f64> {
        if k == 0 || k == instance.k() {
            instance.endpoint_measure(k).weights.clone()
        } else {
            self.intermediate_marginals[k - 1].augmented()
        }
    }

    /// `sum mass * c(path)`.
    pub fn path_value(&self, instance: &ProblemInstance) -> f64 {
        self.atoms.iter().map(|a| a.mass * path_cost(instance, &a.path)).sum()
    }

    /// Mass sent through the skip state of each intermediate stage.
    pub fn skipped_mass(&self) -> Vec<f64> {
        self.intermediate_marginals.iter().map(|m| m.skip).collect()
    }

    /// Joint law of stages `(i, i + 1)` over augmented positions.
    pub fn pairwise_projection(&self, instance: &ProblemInstance, i: usize) -> Matrix {
        let mut m = Matrix::zeros(instance.aug_len(i), instance.aug_len(i + 1));
        for atom in &self.atoms {
            let a = instance.aug_position(i, atom.path.0[i]);
            let b = instance.aug_position(i + 1, atom.path.0[i + 1]);
            m[(a, b)] += atom.mass;
        }
        m
    }
}

/// Stage-`k` pushforward of a path measure over augmented positions (skip last).
pub fn stage_pushforward(instance: &ProblemInstance, atoms: &[PathAtom], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; instance.aug_len(k)];
    for atom in atoms {
        out[instance.aug_position(k, atom.path.0[k])] += atom.mass;
    }
    out
}

fn ensure_valid(instance: &ProblemInstance) -> Result<()> {
    let violations = validate(instance);
    if violations.is_empty() {
        return Ok(());
    }
    let mut msg = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            msg.push_str("; ");
        }
        msg.push_str(v.code);
        msg.push_str(": ");
        msg.push_str(&v.detail);
    }
    Err(Error::InvalidInstance(msg))
}

/// Solves the instance: reduced costs, two-marginal transport, then lifting of
/// every plan cell onto its deterministic cheapest path.
pub fn solve_hjmot(instance: &ProblemInstance, method: Method) -> Result<HjmotSolution> {
    ensure_valid(instance)?;
    let table = reduced_cost_table(instance);
    solve_with_table(instance, &table, method)
}

pub fn solve_with_table(
    instance: &ProblemInstance,
    table: &ReducedCostTable,
    method: Method,
) -> Result<HjmotSolution> {
    let (mu, nu) = (&instance.mu0.weights, &instance.mu_k.weights);
    let feasible = (0..mu.len()).any(|a| {
        mu[a] > 0.0 && (0..nu.len()).any(|b| nu[b] > 0.0 && table.values[(a, b)].is_finite())
    });
    if !feasible {
        return Err(Error::Infeasible);
    }
    let plan: TransportPlan = match method {
        Method::Exact => solve_exact_transport(mu, nu, &table.values)?,
        Method::Entropic(params) => solve_entropic(mu, nu, &table.values, params)?.plan,
    };
    Ok(lift_plan(instance, table, &plan))
}

/// Lifts a plan on the reduced cost to a path coupling.
pub fn lift_plan(instance: &ProblemInstance, table: &ReducedCostTable, plan: &TransportPlan) -> HjmotSolution {
    let mut merged: BTreeMap<Path, f64> = BTreeMap::new();
    for e in &plan.entries {
        let path = table.argmin(e.source, e.target).expect("plan avoids forbidden cells");
        *merged.entry(path.clone()).or_insert(0.0) += e.mass;
    }
    let mut atoms: Vec<PathAtom> = merged
        .into_iter()
        .filter(|(_, mass)| *mass >= tol::SUPPORT)
        .map(|(path, mass)| PathAtom { path, mass })
        .collect();
    let total: f64 = atoms.iter().map(|a| a.mass).sum();
    if (total - 1.0).abs() > tol::NORMALIZATION {
        for a in &mut atoms {
            a.mass /= total;
        }
    }
    HjmotSolution::from_atoms(instance, atoms, plan.value, plan.duals.clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOracle {
    pub value: f64,
    pub atoms: Vec<PathAtom>,
}

/// Solves the path-space LP directly with the dense simplex: one variable per
/// path of finite cost, constraints on the stage-0 and stage-K pushforwards.
pub fn solve_full_lp_oracle(instance: &ProblemInstance) -> Result<LpOracle> {
    ensure_valid(instance)?;
    let size = instance.path_space_size();
    if size > LP_ORACLE_LIMIT {
        return Err(Error::TooLarge { size, limit: LP_ORACLE_LIMIT });
    }
    let k = instance.k();
    let (m, n) = (instance.stage_len(0), instance.stage_len(k));
    let columns: Vec<(Path, f64)> = paths(instance, None, None)
        .map(|p| {
            let c = path_cost(instance, &p);
            (p, c)
        })
        .filter(|(_, c)| c.is_finite())
        .collect();
    let mut a = Matrix::zeros(m + n, columns.len());
    for (j, (p, _)) in columns.iter().enumerate() {
        a[(p.source(), j)] = 1.0;
        a[(m + p.terminal(), j)] = 1.0;
    }
    let mut b = instance.mu0.weights.clone();
    b.extend_from_slice(&instance.mu_k.weights);
    let c: Vec<f64> = columns.iter().map(|(_, c)| *c).collect();
    let sol = simplex::minimize(&a, &b, &c)?;
    let atoms = columns
        .into_iter()
        .zip(sol.x)
        .filter(|(_, x)| *x > 0.0)
        .map(|((path, _), mass)| PathAtom { path, mass })
        .collect();
    Ok(LpOracle { value: sol.value, atoms })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generate::{generate, Family, GeneratorSpec};
    use crate::model::AugIndex;

    fn p(c: &[Option<usize>]) -> Path {
        Path::from_options(c)
    }

    #[test]
    fn examples() {
        let s = solve_hjmot(&fixtures::tiny_1(), Method::Exact).unwrap();
        assert!((s.value - 0.52).abs() < 1e-12);
        assert_eq!(s.atoms, vec![PathAtom { path: p(&[Some(0), Some(0), Some(0)]), mass: 1.0 }]);
        assert_eq!(s.skipped_mass(), vec![0.0]);

        let s = solve_hjmot(&fixtures::tiny_2(), Method::Exact).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.skipped_mass(), vec![1.0]);

        let s = solve_hjmot(&fixtures::mix_1(), Method::Exact).unwrap();
        assert!((s.value - 0.76).abs() < 1e-12);
        assert_eq!(s.intermediate_marginals[0], DiscreteMeasure { weights: vec![0.5], skip: 0.5 });
        assert_eq!(s.atoms[1].path.0[1], AugIndex::Skip);
    }

    #[test]
    fn entropic_close_to_exact() {
        let inst = fixtures::mix_1();
        let exact = solve_hjmot(&inst, Method::Exact).unwrap().value;
        let ent = solve_hjmot(&inst, Method::Entropic(EntropicParams { epsilon: 1e-3, ..Default::default() })).unwrap();
        assert!(ent.value >= exact - 1e-12 && ent.value - exact < 1e-3);
        assert!(ent.duals.is_none());
    }

    #[test]
    fn invalid_and_infeasible() {
        let mut bad = fixtures::tiny_1();
        bad.mu0.weights[0] = 0.5;
        assert!(matches!(solve_hjmot(&bad, Method::Exact), Err(Error::InvalidInstance(_))));

        let mut blocked = fixtures::tiny_2().realized().unwrap();
        blocked.allow_skips = false;
        for m in blocked.costs.matrices.values_mut() {
            m.as_mut_slice().fill(f64::INFINITY);
        }
        assert!(matches!(solve_hjmot(&blocked, Method::Exact), Err(Error::Infeasible)));
    }

    #[test]
    fn agrees_with_lp_oracle() {
        for seed in 0..20 {
            let family = [Family::RandomMatrix, Family::Euclidean, Family::Circle][seed as usize % 3];
            let spec = GeneratorSpec { family, sizes: vec![2, 3, 2, 3], seed, ..Default::default() };
            let inst = generate(&spec).unwrap();
            let s = solve_hjmot(&inst, Method::Exact).unwrap();
            let lp = solve_full_lp_oracle(&inst).unwrap();
            assert!((s.value - lp.value).abs() <= 1e-9 * s.value.max(1.0), "seed {seed}");
            assert!((s.path_value(&inst) - s.value).abs() <= 1e-12 * s.value.max(1.0));
        }
    }

    #[test]
    fn lp_oracle_size_limit() {
        let spec = GeneratorSpec { sizes: vec![8, 8, 8, 8, 8], ..Default::default() };
        let inst = generate(&spec).unwrap();
        assert!(matches!(solve_full_lp_oracle(&inst), Err(Error::TooLarge { .. })));
    }
}
