//! JSON file formats.
//!
//! Numbers are written with the shortest representation that round-trips to
//! the same `f64`. Non-finite values are written as the strings `"inf"`,
//! `"-inf"` and `"nan"`; on input, any number may also be given as a decimal
//! string.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

mod instance;
mod report;
mod solution;
mod spec;

pub use instance::{instance_hash, instance_to_json, parse_instance, InstanceFile};
pub use report::{report_to_json, ReportFile};
pub use solution::{parse_solution, solution_to_json, SolutionFile, StoredSolution};
pub use spec::{parse_spec, spec_to_json, SpecFile};

/// A real number that accepts JSON numbers and decimal strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real(x)),
            Raw::Text(s) => s
                .trim()
                .parse::<f64>()
                .map(Real)
                .map_err(|_| serde::de::Error::custom(format!("not a number: {s:?}"))),
        }
    }
}

pub(crate) fn reals(xs: &[f64]) -> Vec<Real> {
    xs.iter().copied().map(Real).collect()
}

pub(crate) fn floats(xs: &[Real]) -> Vec<f64> {
    xs.iter().map(|r| r.0).collect()
}

/// One path entry: a zero-based point index or the literal `"skip"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathEntry(pub hjmot_core::AugIndex);

impl Serialize for PathEntry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            hjmot_core::AugIndex::Point(i) => s.serialize_u64(i as u64),
            hjmot_core::AugIndex::Skip => s.serialize_str("skip"),
        }
    }
}

impl<'de> Deserialize<'de> for PathEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(PathEntry(hjmot_core::AugIndex::Point(i))),
            Raw::Text(s) if s == "skip" => Ok(PathEntry(hjmot_core::AugIndex::Skip)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("path entry {s:?} is neither an index nor \"skip\""))),
        }
    }
}

pub(crate) fn path_entries(path: &hjmot_core::Path) -> Vec<PathEntry> {
    path.0.iter().copied().map(PathEntry).collect()
}

pub(crate) fn path_from_entries(entries: &[PathEntry]) -> hjmot_core::Path {
    hjmot_core::Path(entries.iter().map(|e| e.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_accept_numbers_and_strings() {
        let xs: Vec<Real> = serde_json::from_str(r#"[0.25, "0.5", "inf", "1e-3", 2]"#).unwrap();
        assert_eq!(floats(&xs), vec![0.25, 0.5, f64::INFINITY, 1e-3, 2.0]);
        assert!(serde_json::from_str::<Real>(r#""half""#).is_err());
        assert_eq!(serde_json::to_string(&reals(&[0.1, f64::INFINITY])).unwrap(), r#"[0.1,"inf"]"#);
    }

    #[test]
    fn path_entries_round_trip() {
        let p: Vec<PathEntry> = serde_json::from_str(r#"[0, "skip", 1]"#).unwrap();
        assert_eq!(path_from_entries(&p), hjmot_core::Path::from_options(&[Some(0), None, Some(1)]));
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"[0,"skip",1]"#);
        assert!(serde_json::from_str::<Vec<PathEntry>>(r#"["Skip"]"#).is_err());
    }

    #[test]
    fn shortest_round_trip_formatting() {
        for x in [0.1 + 0.2, 1.0 / 3.0, 1e-300, 123456.789] {
            let s = serde_json::to_string(&Real(x)).unwrap();
            assert_eq!(serde_json::from_str::<Real>(&s).unwrap().0, x);
        }
    }
}
