use hjmot_core::certify::{CertificateReport, CheckResult};
use serde::{Deserialize, Serialize};

use super::{path_entries, PathEntry, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub paths: Vec<Vec<PathEntry>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub permutations: Vec<Vec<usize>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckFile {
    pub name: String,
    pub pass: bool,
    pub slack: Real,
    pub witness: Option<WitnessFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub pass: bool,
    pub checks: Vec<CheckFile>,
}

impl ReportFile {
    pub fn from_report(report: &CertificateReport) -> Self {
        let check = |c: &CheckResult| CheckFile {
            name: c.name.clone(),
            pass: c.pass,
            slack: Real(c.slack),
            witness: c.witness.as_ref().map(|w| WitnessFile {
                paths: w.paths.iter().map(path_entries).collect(),
                permutations: w.permutations.clone(),
                detail: w.detail.clone(),
            }),
        };
        ReportFile { pass: report.all_pass(), checks: report.checks.iter().map(check).collect() }
    }
}

pub fn report_to_json(report: &CertificateReport) -> String {
    serde_json::to_string_pretty(&ReportFile::from_report(report)).expect("report serializes")
}
