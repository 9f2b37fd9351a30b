use hjmot_core::generate::{Family, GeneratorSpec};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    RandomMatrix,
    Euclidean,
    Circle,
}

/// On-disk generator spec. `K` is optional and must equal `sizes.len() - 1`
/// when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub family: FamilyName,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub cost_scale: f64,
    #[serde(default = "one_dim")]
    pub dimension: usize,
    #[serde(default = "yes")]
    pub allow_skips: bool,
}

fn one() -> f64 {
    1.0
}

fn one_dim() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl SpecFile {
    pub fn into_spec(self) -> Result<GeneratorSpec> {
        if let Some(k) = self.k {
            if k + 1 != self.sizes.len() {
                return Err(Error::format(format!("K = {k} but {} sizes given", self.sizes.len())));
            }
        }
        let family = match self.family {
            FamilyName::RandomMatrix => Family::RandomMatrix,
            FamilyName::Euclidean => Family::Euclidean,
            FamilyName::Circle => Family::Circle,
        };
        Ok(GeneratorSpec {
            family,
            sizes: self.sizes,
            seed: self.seed,
            cost_scale: self.cost_scale,
            dimension: self.dimension,
            allow_skips: self.allow_skips,
        })
    }

    pub fn from_spec(spec: &GeneratorSpec) -> Self {
        let family = match spec.family {
            Family::RandomMatrix => FamilyName::RandomMatrix,
            Family::Euclidean => FamilyName::Euclidean,
            Family::Circle => FamilyName::Circle,
        };
        SpecFile {
            family,
            k: Some(spec.k()),
            sizes: spec.sizes.clone(),
            seed: spec.seed,
            cost_scale: spec.cost_scale,
            dimension: spec.dimension,
            allow_skips: spec.allow_skips,
        }
    }
}

pub fn parse_spec(text: &str) -> Result<GeneratorSpec> {
    serde_json::from_str::<SpecFile>(text)?.into_spec()
}

pub fn spec_to_json(spec: &GeneratorSpec) -> String {
    serde_json::to_string_pretty(&SpecFile::from_spec(spec)).expect("spec serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let spec = parse_spec(r#"{"family": "circle", "sizes": [2, 3, 2], "seed": 7}"#).unwrap();
        assert_eq!(spec.family, Family::Circle);
        assert_eq!((spec.cost_scale, spec.dimension, spec.allow_skips), (1.0, 1, true));
        assert_eq!(parse_spec(&spec_to_json(&spec)).unwrap(), spec);
        assert!(parse_spec(r#"{"family": "circle", "K": 3, "sizes": [2, 2]}"#).is_err());
        assert!(parse_spec(r#"{"family": "torus", "sizes": [2, 2]}"#).is_err());
        assert!(parse_spec(r#"{"family": "circle", "sizes": [2, 2], "colour": 1}"#).is_err());
    }
}
