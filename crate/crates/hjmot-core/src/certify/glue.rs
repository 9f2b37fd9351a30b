use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{CheckResult, Witness};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tol;

/// Multi-stage measure over augmented position tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedMeasure {
    pub atoms: Vec<(Vec<usize>, f64)>,
}

impl GluedMeasure {
    pub fn stage_marginal(&self, k: usize, len: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; len];
        for (states, mass) in &self.atoms {
            out[states[k]] += mass;
        }
        out
    }

    pub fn pair_projection(&self, i: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zeros(rows, cols);
        for (states, mass) in &self.atoms {
            out[(states[i], states[i + 1])] += mass;
        }
        out
    }
}

fn check_pair(i: usize, plan: &Matrix, mu: &[f64], nu: &[f64]) -> Result<()> {
    if plan.shape() != (mu.len(), nu.len()) {
        return Err(Error::Shape(alloc::format!(
            "plan {i} is {:?}, marginals are {}x{}",
            plan.shape(),
            mu.len(),
            nu.len()
        )));
    }
    let worst = |sums: Vec<f64>, target: &[f64]| {
        sums.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let rows = worst(plan.row_sums(), mu);
    if rows > tol::MARGINAL {
        return Err(Error::MarginalMismatch { stage: i, discrepancy: rows });
    }
    let cols = worst(plan.col_sums(), nu);
    if cols > tol::MARGINAL {
        return Err(Error::MarginalMismatch { stage: i + 1, discrepancy: cols });
    }
    Ok(())
}

/// Glues consecutive two-stage plans into one multi-stage measure by
/// conditioning on the shared stage: the mass at `(.., x)` is split along row
/// `x` of the next plan in proportion to `plan[x][y] / mu(x)`.
///
/// Where `mu(x) = 0` the kernel is a point mass on position 0; such branches
/// carry no mass and are dropped with all atoms of mass at most `1e-15`.
pub fn glue_pairwise(plans: &[Matrix], marginals: &[Vec<f64>]) -> Result<GluedMeasure> {
    if plans.is_empty() || marginals.len() != plans.len() + 1 {
        return Err(Error::Shape(alloc::format!(
            "{} plans need {} marginals, got {}",
            plans.len(),
            plans.len() + 1,
            marginals.len()
        )));
    }
    for (i, plan) in plans.iter().enumerate() {
        check_pair(i, plan, &marginals[i], &marginals[i + 1])?;
    }
    let first = &plans[0];
    let mut atoms: Vec<(Vec<usize>, f64)> = Vec::new();
    for a in 0..first.rows() {
        for b in 0..first.cols() {
            if first[(a, b)] > 0.0 {
                atoms.push((alloc::vec![a, b], first[(a, b)]));
            }
        }
    }
    for (i, plan) in plans.iter().enumerate().skip(1) {
        let mu = &marginals[i];
        let mut next = Vec::with_capacity(atoms.len());
        for (states, mass) in atoms {
            let x = *states.last().unwrap_or(&0);
            if mu[x] > 0.0 {
                for y in 0..plan.cols() {
                    let w = plan[(x, y)];
                    if w > 0.0 {
                        let mut s = states.clone();
                        s.push(y);
                        next.push((s, mass * w / mu[x]));
                    }
                }
            } else {
                let mut s = states;
                s.push(0);
                next.push((s, mass));
            }
        }
        atoms = next;
    }
    let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (s, m) in atoms {
        *merged.entry(s).or_insert(0.0) += m;
    }
    let atoms = merged.into_iter().filter(|(_, m)| *m > tol::SUPPORT).collect();
    Ok(GluedMeasure { atoms })
}

/// Checks that the glued measure reproduces every pairwise plan (and hence
/// every marginal) within `tol`.
pub fn check_glued_marginals(
    glued: &GluedMeasure,
    plans: &[Matrix],
    marginals: &[Vec<f64>],
    tol: f64,
) -> CheckResult {
    let mut worst = 0.0f64;
    let mut detail = alloc::string::String::new();
    for (i, plan) in plans.iter().enumerate() {
        let proj = glued.pair_projection(i, plan.rows(), plan.cols());
        for (r, (p, q)) in proj.as_slice().iter().zip(plan.as_slice()).enumerate() {
            let d = (p - q).abs();
            if d > worst {
                worst = d;
                detail = alloc::format!("pair ({i}, {}) cell {:?}: {p} vs {q}", i + 1, (r / plan.cols(), r % plan.cols()));
            }
        }
    }
    for (k, mu) in marginals.iter().enumerate() {
        let got = glued.stage_marginal(k, mu.len());
        for (x, (p, q)) in got.iter().zip(mu).enumerate() {
            let d = (p - q).abs();
            if d > worst {
                worst = d;
                detail = alloc::format!("stage {k} position {x}: {p} vs {q}");
            }
        }
    }
    let pass = worst <= tol;
    let witness = (!pass).then(|| Witness { detail, ..Witness::default() });
    CheckResult::new("glue", pass, worst, witness)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glues_two_plans() {
        let p0 = Matrix::from_rows(&[alloc::vec![0.25, 0.25], alloc::vec![0.0, 0.5]]).unwrap();
        let p1 = Matrix::from_rows(&[alloc::vec![0.25, 0.0], alloc::vec![0.25, 0.5]]).unwrap();
        let marg = [alloc::vec![0.5, 0.5], alloc::vec![0.25, 0.75], alloc::vec![0.5, 0.5]];
        let g = glue_pairwise(&[p0.clone(), p1.clone()], &marg).unwrap();
        let r = check_glued_marginals(&g, &[p0, p1], &marg, 1e-12);
        assert!(r.pass, "{r:?}");
        assert_eq!(g.atoms.len(), 5);
    }

    #[test]
    fn rejects_inconsistent_marginals() {
        let p0 = Matrix::from_rows(&[alloc::vec![0.5, 0.0], alloc::vec![0.0, 0.5]]).unwrap();
        let marg = [alloc::vec![0.5, 0.5], alloc::vec![0.9, 0.1]];
        assert!(matches!(
            glue_pairwise(&[p0], &marg),
            Err(Error::MarginalMismatch { stage: 1, .. })
        ));
    }
}
