//! Discrete twist, Monge map extraction and uniqueness probing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AugIndex, DiscreteMeasure, Path, ProblemInstance};
use crate::reduction::optimal_continuations;
use crate::solver::{solve_hjmot, Method, PathAtom};
use crate::tol;

/// Number of optimal continuations from each source in the support of `mu0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistReport {
    /// `None` for sources outside the support.
    pub cardinalities: Vec<Option<usize>>,
    /// Every supported source has exactly one optimal continuation.
    pub pass: bool,
}

/// Fails with [`Error::InfiniteSource`] when a supported source reaches no
/// terminal at finite cost.
pub fn check_discrete_twist(instance: &ProblemInstance, tie_tol: f64) -> Result<TwistReport> {
    let mut cardinalities = Vec::with_capacity(instance.stage_len(0));
    for (a, &w) in instance.mu0.weights.iter().enumerate() {
        if w <= tol::SUPPORT {
            cardinalities.push(None);
            continue;
        }
        cardinalities.push(Some(optimal_continuations(instance, a, tie_tol)?.paths.len()));
    }
    let pass = cardinalities.iter().flatten().all(|&n| n == 1);
    Ok(TwistReport { cardinalities, pass })
}

/// Deterministic map from sources to paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MongeMap {
    /// Sorted by source.
    pub entries: Vec<(usize, Path)>,
}

impl MongeMap {
    pub fn image(&self, source: usize) -> Option<&Path> {
        self.entries
            .binary_search_by_key(&source, |(a, _)| *a)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Stage-`k` component `T_k(source)`.
    pub fn component(&self, source: usize, k: usize) -> Option<AugIndex> {
        self.image(source).map(|p| p.0[k])
    }

    /// `(id, T)_# mu0` as path atoms; sources without an image are skipped.
    pub fn pushforward(&self, mu0: &DiscreteMeasure) -> Vec<PathAtom> {
        self.entries
            .iter()
            .filter(|(a, _)| mu0.weights[*a] > 0.0)
            .map(|(a, p)| PathAtom { path: p.clone(), mass: mu0.weights[*a] })
            .collect()
    }
}

/// Reads a Monge map off a path coupling. Atoms of mass at most `min_mass` are
/// ignored; a source carried by several paths is reported as [`Error::SplitMass`].
pub fn extract_monge_map(atoms: &[PathAtom], min_mass: f64) -> Result<MongeMap> {
    let mut by_source: BTreeMap<usize, Vec<(Path, f64)>> = BTreeMap::new();
    for atom in atoms.iter().filter(|a| a.mass > min_mass) {
        by_source.entry(atom.path.source()).or_default().push((atom.path.clone(), atom.mass));
    }
    let mut entries = Vec::with_capacity(by_source.len());
    for (source_index, mut paths) in by_source {
        if paths.len() > 1 {
            return Err(Error::SplitMass { source_index, paths });
        }
        if let Some((p, _)) = paths.pop() {
            entries.push((source_index, p));
        }
    }
    Ok(MongeMap { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessProbe {
    pub trials: usize,
    /// Fraction of trials whose support path set matched the unperturbed one.
    pub stable_fraction: f64,
    pub changed_trials: Vec<usize>,
}

fn support_set(atoms: &[PathAtom]) -> BTreeSet<Path> {
    atoms.iter().map(|a| a.path.clone()).collect()
}

/// Re-solves the instance with every finite cost entry perturbed by uniform
/// noise in `[-jitter, jitter]` (clamped at 0) and compares supports. Trial
/// `t` draws from a generator seeded with `seed + t`.
pub fn uniqueness_probe(instance: &ProblemInstance, jitter: f64, trials: usize, seed: u64) -> Result<UniquenessProbe> {
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("jitter must be finite and >= 0, got {jitter}")));
    }
    let base = instance.realized()?;
    let reference = support_set(&solve_hjmot(&base, Method::Exact)?.atoms);
    let mut changed_trials = Vec::new();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let mut perturbed = base.clone();
        for m in perturbed.costs.matrices.values_mut() {
            for c in m.as_mut_slice() {
                let noise = (2.0 * rng.random::<f64>() - 1.0) * jitter;
                if c.is_finite() {
                    *c = (*c + noise).max(0.0);
                }
            }
        }
        let support = support_set(&solve_hjmot(&perturbed, Method::Exact)?.atoms);
        if support != reference {
            changed_trials.push(t);
        }
    }
    let stable_fraction = if trials == 0 { 1.0 } else { 1.0 - changed_trials.len() as f64 / trials as f64 };
    Ok(UniquenessProbe { trials, stable_fraction, changed_trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn twist_on_examples() {
        let r = check_discrete_twist(&fixtures::tiny_1(), tol::RELATIVE).unwrap();
        assert_eq!(r.cardinalities, alloc::vec![Some(1)]);
        assert!(r.pass);
        let r = check_discrete_twist(&fixtures::tie(), tol::RELATIVE).unwrap();
        assert_eq!(r.cardinalities, alloc::vec![Some(2)]);
        assert!(!r.pass);
    }

    #[test]
    fn monge_map_from_solution() {
        let inst = fixtures::mix_1();
        let sol = solve_hjmot(&inst, Method::Exact).unwrap();
        let map = extract_monge_map(&sol.atoms, tol::SUPPORT).unwrap();
        assert_eq!(map.entries.len(), 2);
        assert_eq!(map.pushforward(&inst.mu0), sol.atoms);
        assert_eq!(map.component(1, 1), Some(AugIndex::Skip));
    }

    #[test]
    fn split_mass_is_reported() {
        let atoms = alloc::vec![
            PathAtom { path: Path::from_options(&[Some(0), Some(0)]), mass: 0.5 },
            PathAtom { path: Path::from_options(&[Some(0), Some(1)]), mass: 0.5 },
        ];
        match extract_monge_map(&atoms, tol::SUPPORT) {
            Err(Error::SplitMass { source_index: 0, paths }) => assert_eq!(paths.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn uniqueness_probe_behaviour() {
        let p = uniqueness_probe(&fixtures::tiny_1(), 1e-6, 10, 7).unwrap();
        assert_eq!(p.stable_fraction, 1.0);
        let p = uniqueness_probe(&fixtures::tie(), 1e-6, 20, 7).unwrap();
        assert!(p.stable_fraction < 1.0);
        let p = uniqueness_probe(&fixtures::tie(), 0.0, 3, 7).unwrap();
        assert_eq!(p.stable_fraction, 1.0);
    }
}
