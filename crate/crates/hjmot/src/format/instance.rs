use std::collections::BTreeMap;

use hjmot_core::{Coords, CostFamily, CostKind, DiscreteMeasure, Matrix, ProblemInstance, StageSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{floats, reals, Real};
use crate::error::{Error, Result};

/// On-disk instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub spaces: Vec<SpaceFile>,
    pub cost: CostFile,
    pub mu0: Vec<Real>,
    #[serde(rename = "muK")]
    pub mu_k: Vec<Real>,
    #[serde(default = "default_true")]
    pub allow_skips: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub points: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<Real>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<Real>>,
}

/// Point labels may be written as strings or bare numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Text(String),
    Number(serde_json::Number),
}

impl Label {
    fn into_string(self) -> String {
        match self {
            Label::Text(s) => s,
            Label::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFile {
    pub kind: String,
    /// Keyed `"i,j"`; each matrix is a list of rows or one flat row-major list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<BTreeMap<String, MatrixFile>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixFile {
    Rows(Vec<Vec<Real>>),
    Flat(Vec<Real>),
}

fn parse_kind(s: &str) -> Result<CostKind> {
    let norm = |x: &str| x.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
    CostKind::ALL
        .into_iter()
        .find(|k| norm(k.name()) == norm(s))
        .ok_or_else(|| Error::format(format!("unknown cost kind {s:?}")))
}

fn parse_pair(key: &str) -> Result<(usize, usize)> {
    let bad = || Error::format(format!("matrix key {key:?} is not of the form \"i,j\""));
    let (i, j) = key.split_once(',').ok_or_else(bad)?;
    Ok((i.trim().parse().map_err(|_| bad())?, j.trim().parse().map_err(|_| bad())?))
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        if self.spaces.len() != self.k + 1 {
            return Err(Error::format(format!("K = {} but {} spaces given", self.k, self.spaces.len())));
        }
        let sizes: Vec<usize> = self.spaces.iter().map(|s| s.points.len()).collect();
        let mut spaces = Vec::with_capacity(self.spaces.len());
        for (k, space) in self.spaces.into_iter().enumerate() {
            let labels: Vec<String> = space.points.into_iter().map(Label::into_string).collect();
            let coords = match (space.coords, space.angles) {
                (Some(_), Some(_)) => {
                    return Err(Error::format(format!("space {k} has both coords and angles")));
                }
                (Some(v), None) => Some(Coords::Vectors(v.iter().map(|x| floats(x)).collect())),
                (None, Some(a)) => Some(Coords::Angles(floats(&a))),
                (None, None) => None,
            };
            spaces.push(StageSpace { labels, coords });
        }
        let kind = parse_kind(&self.cost.kind)?;
        let mut matrices = BTreeMap::new();
        for (key, m) in self.cost.matrices.unwrap_or_default() {
            let (i, j) = parse_pair(&key)?;
            let (rows, cols) = (
                sizes.get(i).copied().unwrap_or(0),
                sizes.get(j).copied().unwrap_or(0),
            );
            let matrix = match m {
                MatrixFile::Rows(r) => {
                    let r: Vec<Vec<f64>> = r.iter().map(|row| floats(row)).collect();
                    Matrix::from_rows(&r).ok_or_else(|| Error::format(format!("matrix {key} is ragged")))?
                }
                MatrixFile::Flat(f) => Matrix::from_row_major(rows, cols, floats(&f)).ok_or_else(|| {
                    Error::format(format!("matrix {key} has {} entries, expected {rows}x{cols}", f.len()))
                })?,
            };
            if matrices.insert((i, j), matrix).is_some() {
                return Err(Error::format(format!("matrix {key} given twice")));
            }
        }
        Ok(ProblemInstance {
            spaces,
            costs: CostFamily { kind, matrices },
            mu0: DiscreteMeasure::new(floats(&self.mu0)),
            mu_k: DiscreteMeasure::new(floats(&self.mu_k)),
            allow_skips: self.allow_skips,
        })
    }

    pub fn from_instance(instance: &ProblemInstance) -> Self {
        let spaces = instance
            .spaces
            .iter()
            .map(|s| {
                let (coords, angles) = match &s.coords {
                    Some(Coords::Vectors(v)) => (Some(v.iter().map(|x| reals(x)).collect()), None),
                    Some(Coords::Angles(a)) => (None, Some(reals(a))),
                    None => (None, None),
                };
                SpaceFile { points: s.labels.iter().cloned().map(Label::Text).collect(), coords, angles }
            })
            .collect();
        let matrices = (!instance.costs.matrices.is_empty()).then(|| {
            instance
                .costs
                .matrices
                .iter()
                .map(|(&(i, j), m)| {
                    let rows = (0..m.rows()).map(|r| reals(m.row(r))).collect();
                    (format!("{i},{j}"), MatrixFile::Rows(rows))
                })
                .collect()
        });
        InstanceFile {
            k: instance.k(),
            spaces,
            cost: CostFile { kind: instance.costs.kind.name().to_string(), matrices },
            mu0: reals(&instance.mu0.weights),
            mu_k: reals(&instance.mu_k.weights),
            allow_skips: instance.allow_skips,
        }
    }
}

/// Parses an instance. The result is not validated; see [`hjmot_core::model::validate`].
pub fn parse_instance(text: &str) -> Result<ProblemInstance> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

/// Canonical compact JSON: fixed key order, labels as strings, matrices as rows.
pub fn instance_to_json(instance: &ProblemInstance) -> String {
    serde_json::to_string(&InstanceFile::from_instance(instance)).expect("instance serializes")
}

/// SHA-256 of the canonical JSON, hex encoded.
pub fn instance_hash(instance: &ProblemInstance) -> String {
    hex::encode(Sha256::digest(instance_to_json(instance).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hjmot_core::fixtures;

    #[test]
    fn parses_minimal_file() {
        let text = r#"{
            "K": 2,
            "spaces": [{"points": ["a"], "coords": [[0]]}, {"points": [0.4, 10], "coords": [["0.4"], [10]]}, {"points": ["b"], "coords": [[1]]}],
            "cost": {"kind": "squared_euclidean"},
            "mu0": ["1"],
            "muK": [1.0]
        }"#;
        let inst = parse_instance(text).unwrap();
        assert!(inst.allow_skips);
        assert_eq!(inst.spaces[1].labels, vec!["0.4", "10"]);
        assert!(hjmot_core::model::validate(&inst).is_empty());
        assert_eq!(inst.pair_cost(0, 2, 0, 0), 1.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let base = r#"{"K": 1, "spaces": [{"points": ["a"]}, {"points": ["b"]}],
            "cost": {"kind": "ExplicitMatrices", "matrices": {"0,1": [[1]]}}, "mu0": [1], "muK": [1]"#;
        assert!(parse_instance(&format!("{base}}}")).is_ok());
        assert!(parse_instance(&format!("{base}, \"extra\": 1}}")).is_err());
        let flat = base.replace("[[1]]", "[\"inf\"]");
        let inst = parse_instance(&format!("{flat}}}")).unwrap();
        assert_eq!(inst.costs.matrices[&(0, 1)][(0, 0)], f64::INFINITY);
        let bad_key = base.replace("\"0,1\"", "\"01\"");
        assert!(parse_instance(&format!("{bad_key}}}")).is_err());
        let bad_k = base.replace("\"K\": 1", "\"K\": 2");
        assert!(parse_instance(&format!("{bad_k}}}")).is_err());
    }

    #[test]
    fn round_trip_and_hash() {
        for inst in [fixtures::tiny_1(), fixtures::mix_1(), fixtures::tiny_2().realized().unwrap()] {
            let text = instance_to_json(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(back, inst);
            assert_eq!(instance_hash(&back), instance_hash(&inst));
        }
        assert_ne!(instance_hash(&fixtures::tiny_1()), instance_hash(&fixtures::tiny_2()));
        assert_eq!(instance_hash(&fixtures::tiny_1()).len(), 64);
    }
}
