use hjmot_core::transport::Duals;
use hjmot_core::{DiscreteMeasure, HjmotSolution, PathAtom, ProblemInstance};
use serde::{Deserialize, Serialize};

use super::{floats, path_entries, path_from_entries, reals, PathEntry, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomFile {
    pub path: Vec<PathEntry>,
    pub mass: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualsFile {
    pub u: Vec<Real>,
    pub v: Vec<Real>,
}

/// On-disk solution. `marginals[k - 1]` is the augmented marginal of
/// intermediate stage `k` with the skip mass last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    #[serde(rename = "M")]
    pub m: Real,
    pub atoms: Vec<AtomFile>,
    pub marginals: Vec<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duals: Option<DualsFile>,
}

/// A parsed solution together with the instance hash it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSolution {
    pub solution: HjmotSolution,
    pub instance_hash: Option<String>,
}

impl SolutionFile {
    pub fn from_solution(solution: &HjmotSolution, instance_hash: Option<String>) -> Self {
        SolutionFile {
            m: Real(solution.value),
            atoms: solution
                .atoms
                .iter()
                .map(|a| AtomFile { path: path_entries(&a.path), mass: Real(a.mass) })
                .collect(),
            marginals: solution.intermediate_marginals.iter().map(|m| reals(&m.augmented())).collect(),
            instance_hash,
            duals: solution.duals.as_ref().map(|d| DualsFile { u: reals(&d.u), v: reals(&d.v) }),
        }
    }

    pub fn into_stored(self) -> Result<StoredSolution> {
        let mut intermediate_marginals = Vec::with_capacity(self.marginals.len());
        for (k, m) in self.marginals.iter().enumerate() {
            if m.is_empty() {
                return Err(Error::format(format!("marginal of stage {} is empty", k + 1)));
            }
            intermediate_marginals.push(DiscreteMeasure::from_augmented(floats(m)));
        }
        let solution = HjmotSolution {
            atoms: self
                .atoms
                .iter()
                .map(|a| PathAtom { path: path_from_entries(&a.path), mass: a.mass.0 })
                .collect(),
            value: self.m.0,
            intermediate_marginals,
            duals: self.duals.map(|d| Duals { u: floats(&d.u), v: floats(&d.v) }),
        };
        Ok(StoredSolution { solution, instance_hash: self.instance_hash })
    }
}

pub fn parse_solution(text: &str) -> Result<StoredSolution> {
    serde_json::from_str::<SolutionFile>(text)?.into_stored()
}

/// Pretty-printed solution JSON stamped with the instance hash.
pub fn solution_to_json(instance: &ProblemInstance, solution: &HjmotSolution) -> String {
    let file = SolutionFile::from_solution(solution, Some(super::instance_hash(instance)));
    serde_json::to_string_pretty(&file).expect("solution serializes")
}
