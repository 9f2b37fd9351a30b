//! Checks that a computed solution satisfies the structural properties of an
//! optimal path coupling.
//!
//! Every check produces a [`CheckResult`] with a pass flag, the worst observed
//! slack and, on failure, a witness that reproduces that slack.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::Error;
use crate::model::{Path, ProblemInstance};
use crate::path::path_cost;
use crate::solver::{stage_pushforward, HjmotSolution};
use crate::tol;

mod bounds;
mod cyclical;
mod glue;
mod splitting;

pub use bounds::{decomposition_check, realized_transition_costs, upper_bound_via_tilde, Decomposition, TildeBound};
pub use cyclical::check_cyclical_monotonicity;
pub use glue::{check_glued_marginals, glue_pairwise, GluedMeasure};
pub use splitting::{check_splitting, dual_objective, splitting_potentials, SplittingCheck, SplittingPotentials};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Witness {
    pub paths: Vec<Path>,
    /// Permutation tuple `(sigma_0, ..., sigma_K)` for cyclical monotonicity witnesses.
    pub permutations: Vec<Vec<usize>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
    pub witness: Option<Witness>,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, slack: f64, witness: Option<Witness>) -> Self {
        Self { name: name.to_string(), pass, slack, witness }
    }

    pub fn failed(name: &str, detail: String) -> Self {
        let witness = Witness { detail, ..Witness::default() };
        Self::new(name, false, f64::INFINITY, Some(witness))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateReport {
    pub checks: Vec<CheckResult>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckKind {
    Feasibility,
    Splitting,
    Cyclical,
    Glue,
    TildeBound,
    Decomposition,
    Twist,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::Feasibility,
        CheckKind::Splitting,
        CheckKind::Cyclical,
        CheckKind::Glue,
        CheckKind::TildeBound,
        CheckKind::Decomposition,
        CheckKind::Twist,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Feasibility => "feasibility",
            CheckKind::Splitting => "splitting",
            CheckKind::Cyclical => "cyclical",
            CheckKind::Glue => "glue",
            CheckKind::TildeBound => "tilde-bound",
            CheckKind::Decomposition => "decomposition",
            CheckKind::Twist => "twist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub tol: f64,
    pub seed: u64,
    pub cyclical_m_max: usize,
    pub cyclical_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { tol: tol::RELATIVE, seed: 0, cyclical_m_max: 3, cyclical_samples: 200 }
    }
}

/// Structural feasibility: valid paths, unit mass, endpoint marginals equal to
/// the instance measures, stored intermediate marginals equal to the
/// pushforwards, and `M` equal to the integrated path cost.
pub fn check_feasibility(instance: &ProblemInstance, solution: &HjmotSolution, tol: f64) -> CheckResult {
    const NAME: &str = "feasibility";
    for atom in &solution.atoms {
        if let Err(e) = instance.check_path(&atom.path) {
            return CheckResult::failed(NAME, alloc::format!("{}: {e}", atom.path));
        }
        if !(atom.mass > 0.0) {
            return CheckResult::failed(NAME, alloc::format!("{} has mass {}", atom.path, atom.mass));
        }
    }
    if solution.intermediate_marginals.len() != instance.k().saturating_sub(1) {
        return CheckResult::failed(NAME, "wrong number of intermediate marginals".into());
    }
    let mut worst = 0.0f64;
    let mut witness = Witness::default();
    let mut note = |slack: f64, detail: String| {
        if slack > worst {
            worst = slack;
            witness.detail = detail;
        }
    };
    let total: f64 = solution.atoms.iter().map(|a| a.mass).sum();
    note((total - 1.0).abs(), alloc::format!("total mass {total}"));
    for k in 0..=instance.k() {
        let push = stage_pushforward(instance, &solution.atoms, k);
        let target = solution.stage_measure(instance, k);
        if push.len() != target.len() {
            return CheckResult::failed(NAME, alloc::format!("stage {k} marginal length"));
        }
        for (x, (p, q)) in push.iter().zip(&target).enumerate() {
            let state = instance.aug_state(k, x);
            note((p - q).abs(), alloc::format!("stage {k} state {state}: pushforward {p} vs {q}"));
        }
    }
    let integrated = solution.path_value(instance);
    let rel = (integrated - solution.value).abs() / solution.value.abs().max(1.0);
    note(rel, alloc::format!("M = {} but paths integrate to {integrated}", solution.value));
    let pass = worst <= tol;
    CheckResult::new(NAME, pass, worst, (!pass).then_some(witness))
}

/// Runs the requested checks against a solution.
pub fn certify(
    instance: &ProblemInstance,
    solution: &HjmotSolution,
    checks: &[CheckKind],
    options: CertifyOptions,
) -> CertificateReport {
    let mut report = CertificateReport::default();
    for &kind in checks {
        let result = match kind {
            CheckKind::Feasibility => check_feasibility(instance, solution, options.tol),
            CheckKind::Splitting => match splitting_potentials(instance, solution) {
                Ok(pot) => check_splitting(instance, &pot, solution, options.seed).to_result(options.tol),
                Err(e) => CheckResult::failed(kind.name(), alloc::format!("{e}")),
            },
            CheckKind::Cyclical => check_cyclical_monotonicity(
                instance,
                solution,
                options.cyclical_m_max,
                options.cyclical_samples,
                options.tol,
                options.seed,
            ),
            CheckKind::Glue => glue_own_projections(instance, solution, options.tol),
            CheckKind::TildeBound => {
                match upper_bound_via_tilde(instance, &solution.intermediate_marginals, solution.value) {
                    Ok(b) => CheckResult::new(kind.name(), b.holds, solution.value - b.bound, None),
                    Err(e) => CheckResult::failed(kind.name(), alloc::format!("{e}")),
                }
            }
            CheckKind::Decomposition => match decomposition_check(instance, solution, options.tol) {
                Ok(d) => CheckResult::new(kind.name(), d.pass, d.gap, None),
                Err(Error::MongePrecondition { stage, detail, paths }) => CheckResult::new(
                    kind.name(),
                    false,
                    f64::INFINITY,
                    Some(Witness {
                        paths,
                        permutations: Vec::new(),
                        detail: alloc::format!("monge-precondition-failed at stage {stage}: {detail}"),
                    }),
                ),
                Err(e) => CheckResult::failed(kind.name(), alloc::format!("{e}")),
            },
            CheckKind::Twist => match crate::monge::check_discrete_twist(instance, options.tol) {
                Ok(t) => {
                    let worst = t.cardinalities.iter().flatten().copied().max().unwrap_or(0);
                    let witness = (!t.pass).then(|| Witness {
                        detail: alloc::format!("{} optimal continuations at some source", worst),
                        ..Witness::default()
                    });
                    CheckResult::new(kind.name(), t.pass, worst as f64 - 1.0, witness)
                }
                Err(e) => CheckResult::failed(kind.name(), alloc::format!("{e}")),
            },
        };
        report.checks.push(result);
    }
    report
}

/// Glues the solution's own pairwise projections and checks that the glued
/// coupling reproduces them and costs at least `M`.
fn glue_own_projections(instance: &ProblemInstance, solution: &HjmotSolution, tol: f64) -> CheckResult {
    const NAME: &str = "glue";
    let plans: Vec<_> = (0..instance.k()).map(|i| solution.pairwise_projection(instance, i)).collect();
    let marginals: Vec<_> = (0..=instance.k()).map(|k| solution.stage_measure(instance, k)).collect();
    let glued = match glue_pairwise(&plans, &marginals) {
        Ok(g) => g,
        Err(e) => return CheckResult::failed(NAME, alloc::format!("{e}")),
    };
    let mut result = check_glued_marginals(&glued, &plans, &marginals, tol);
    let value: f64 = glued
        .atoms
        .iter()
        .map(|(states, mass)| {
            let path = Path(states.iter().enumerate().map(|(k, &x)| instance.aug_state(k, x)).collect());
            if path.0.iter().any(|c| c.is_skip()) && !instance.allow_skips {
                return f64::INFINITY;
            }
            mass * path_cost(instance, &path)
        })
        .sum();
    if !tol::leq(solution.value, value) {
        result.pass = false;
        result.slack = result.slack.max(solution.value - value);
        result.witness = Some(Witness {
            detail: alloc::format!("glued coupling costs {value} < M = {}", solution.value),
            ..Witness::default()
        });
    }
    result
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generate::{generate, Family, GeneratorSpec};
    use crate::solver::{solve_hjmot, Method, PathAtom};

    #[test]
    fn exact_solutions_certify() {
        for inst in [fixtures::tiny_1(), fixtures::tiny_2(), fixtures::mix_1()] {
            let sol = solve_hjmot(&inst, Method::Exact).unwrap();
            let report = certify(&inst, &sol, &CheckKind::ALL, CertifyOptions::default());
            assert!(report.all_pass(), "{report:?}");
        }
        for seed in 0..10 {
            let spec = GeneratorSpec { family: Family::RandomMatrix, sizes: alloc::vec![3, 2, 3, 3], seed, ..Default::default() };
            let inst = generate(&spec).unwrap();
            let sol = solve_hjmot(&inst, Method::Exact).unwrap();
            let checks = [CheckKind::Feasibility, CheckKind::Splitting, CheckKind::Cyclical, CheckKind::Glue, CheckKind::TildeBound];
            let report = certify(&inst, &sol, &checks, CertifyOptions::default());
            assert!(report.all_pass(), "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn swapped_plan_fails_cyclical_with_witness() {
        let inst = fixtures::one_leg(&[0.0, 1.0], &[0.0, 1.0]);
        let mut sol = solve_hjmot(&inst, Method::Exact).unwrap();
        sol.atoms = alloc::vec![
            PathAtom { path: Path::from_options(&[Some(0), Some(1)]), mass: 0.5 },
            PathAtom { path: Path::from_options(&[Some(1), Some(0)]), mass: 0.5 },
        ];
        sol.value = 1.0;
        let r = check_cyclical_monotonicity(&inst, &sol, 3, 200, 1e-9, 0);
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!(w.paths.len(), 2);
        assert_eq!(w.permutations.len(), 2);
        let before: f64 = w.paths.iter().map(|p| path_cost(&inst, p)).sum();
        let after: f64 = (0..2)
            .map(|i| {
                let p = Path(alloc::vec![w.paths[w.permutations[0][i]].0[0], w.paths[w.permutations[1][i]].0[1]]);
                path_cost(&inst, &p)
            })
            .sum();
        assert!((before - after - r.slack * before.max(1.0)).abs() < 1e-12);
    }

    #[test]
    fn missing_duals() {
        let inst = fixtures::tiny_1();
        let mut sol = solve_hjmot(&inst, Method::Exact).unwrap();
        sol.duals = None;
        assert!(matches!(splitting_potentials(&inst, &sol), Err(Error::MissingDuals)));
        let r = certify(&inst, &sol, &[CheckKind::Splitting], CertifyOptions::default());
        assert!(!r.all_pass());
    }

    #[test]
    fn splitting_gauge_and_examples() {
        let inst = fixtures::tiny_1();
        let sol = solve_hjmot(&inst, Method::Exact).unwrap();
        let pot = splitting_potentials(&inst, &sol).unwrap();
        assert_eq!(pot.v[2][0], 0.0);
        assert!((pot.v[0][0] - 0.52).abs() < 1e-12);
        assert!(pot.v[1].iter().all(|v| *v == 0.0));
        let chk = check_splitting(&inst, &pot, &sol, 0);
        assert!(chk.exhaustive);
        assert_eq!(chk.checked, 3);
    }

    #[test]
    fn tilde_bound_on_examples() {
        let inst = fixtures::tiny_1();
        let sol = solve_hjmot(&inst, Method::Exact).unwrap();
        let b = upper_bound_via_tilde(&inst, &sol.intermediate_marginals, sol.value).unwrap();
        assert!(b.holds);
        assert!(b.bound >= 0.52);
        let delta_skip = alloc::vec![crate::model::DiscreteMeasure::dirac(2, crate::model::AugIndex::Skip)];
        let b = upper_bound_via_tilde(&inst, &delta_skip, sol.value).unwrap();
        // From 0 to skip the bound uses the worst later leg (to 1); leaving skip is free.
        assert_eq!(b.per_stage, alloc::vec![1.0, 0.0]);
    }

    #[test]
    fn decomposition_matches_m_and_refuses_split_sources() {
        let inst = fixtures::mix_1();
        let sol = solve_hjmot(&inst, Method::Exact).unwrap();
        let d = decomposition_check(&inst, &sol, 1e-9).unwrap();
        assert!(d.pass);
        assert!((d.sum - 0.76).abs() < 1e-12);

        let inst = fixtures::one_leg(&[0.0], &[0.0, 1.0]);
        let sol = solve_hjmot(&inst, Method::Exact).unwrap();
        assert!(matches!(decomposition_check(&inst, &sol, 1e-9), Err(Error::MongePrecondition { stage: 0, .. })));
    }

    #[test]
    fn check_names_round_trip() {
        for k in CheckKind::ALL {
            assert_eq!(CheckKind::parse(k.name()), Some(k));
        }
        assert_eq!(CheckKind::parse("nope"), None);
    }
}
