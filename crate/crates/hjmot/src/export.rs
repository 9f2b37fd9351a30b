//! CSV tables.

use std::io::Write;

use hjmot_core::diagnostics::{DerivativeEstimate, LocalControlProbe};
use hjmot_core::monge::MongeMap;
use hjmot_core::reduction::ReducedCostTable;
use hjmot_core::ProblemInstance;

use crate::error::Result;

/// Number formatting for CSV cells: shortest round-trip form, `inf` for infinity.
pub fn cell(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Reduced cost matrix: one row per source, one column per terminal, headed
/// by the point labels.
pub fn write_reduced_table<W: Write>(out: W, instance: &ProblemInstance, table: &ReducedCostTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = instance.k();
    let mut header = vec!["source".to_string()];
    header.extend(instance.spaces[k].labels.iter().cloned());
    w.write_record(&header)?;
    for a in 0..table.sources() {
        let mut row = vec![instance.spaces[0].labels[a].clone()];
        row.extend(table.values.row(a).iter().map(|&x| cell(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Sidecar to [`write_reduced_table`]: the cheapest path and tie count of every finite entry.
pub fn write_reduced_paths<W: Write>(out: W, instance: &ProblemInstance, table: &ReducedCostTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let k = instance.k();
    w.write_record(["source", "terminal", "cost", "ties", "path"])?;
    for a in 0..table.sources() {
        for b in 0..table.terminals() {
            let Some(path) = table.argmin(a, b) else { continue };
            w.write_record([
                instance.spaces[0].labels[a].clone(),
                instance.spaces[k].labels[b].clone(),
                cell(table.values[(a, b)]),
                table.ties(a, b).to_string(),
                path.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Source label and image path per row.
pub fn write_monge_map<W: Write>(out: W, instance: &ProblemInstance, map: &MongeMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "path"])?;
    for (a, path) in &map.entries {
        w.write_record([instance.spaces[0].labels[*a].clone(), path.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Local control probe in long form: one row per `(t, continuation)` with the
/// finite-difference quotient `D(t)`, the remainder `r(t)`, `r(t) / t`, and the
/// extrapolated derivative of the continuation.
pub fn write_probe<W: Write>(out: W, probe: &LocalControlProbe, estimates: &[DerivativeEstimate]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "continuation", "path", "D_t", "r", "r_over_t", "D"])?;
    for (row_idx, row) in probe.rows.iter().enumerate() {
        for (i, path) in probe.continuations.iter().enumerate() {
            w.write_record([
                cell(row.t),
                i.to_string(),
                path.to_string(),
                cell(estimates[i].estimates[row_idx]),
                cell(row.r[i]),
                cell(row.slope[i]),
                cell(estimates[i].extrapolated),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
