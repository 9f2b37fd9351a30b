//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Solves `min c^T x` subject to `A x = b`, `x >= 0`. Written as an oracle:
//! simple, dense, and independent of the network flow code.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const PIVOT_TOL: f64 = 1e-12;
const PRICE_TOL: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    /// `rows + 1` rows (the last one is the reduced-cost row), `width` columns,
    /// right-hand side in the last column.
    data: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i][self.width - 1]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.data[row][col];
        for x in self.data[row].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.data[row].clone();
        for (i, r) in self.data.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor != 0.0 {
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= factor * y;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Runs Bland pivots on the current objective row over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, pivots: &mut usize) -> Result<()> {
        loop {
            let obj = self.rows();
            let Some(col) = (0..allowed).find(|&j| self.data[obj][j] < -PRICE_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.data[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let slack = 1e-14 * best.abs().max(1.0);
                        if ratio < best - slack || (ratio <= best + slack && self.basis[i] < self.basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Err(Error::InvalidArgument("linear program is unbounded".into()));
            };
            self.pivot(row, col);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::IterationLimit);
            }
        }
    }
}

/// Minimizes `c^T x` subject to `A x = b`, `x >= 0`.
pub fn minimize(a: &Matrix, b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let (m, n) = a.shape();
    if b.len() != m || c.len() != n {
        return Err(Error::Shape("constraint dimensions disagree".into()));
    }
    let width = n + m + 1;
    let mut data = Vec::with_capacity(m + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign * b[i];
        data.push(row);
    }
    // Phase one: minimize the sum of artificials.
    let mut obj = vec![0.0; width];
    for row in &data {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    data.push(obj);
    let mut t = Tableau { data, basis: (n..n + m).collect(), width };
    let mut pivots = 0;
    t.optimize(n + m, &mut pivots)?;
    if -t.data[m][width - 1] > FEASIBILITY_TOL {
        return Err(Error::Infeasible);
    }

    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.data[i][j].abs() > FEASIBILITY_TOL) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.data.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase two objective row: c_j - c_B^T column_j.
    let rows = t.rows();
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    for i in 0..rows {
        let cb = c[t.basis[i]];
        if cb != 0.0 {
            for j in 0..width {
                obj[j] -= cb * t.data[i][j];
            }
        }
    }
    t.data[rows] = obj;
    t.optimize(n, &mut pivots)?;

    let mut x = vec![0.0; n];
    for i in 0..t.rows() {
        x[t.basis[i]] = t.rhs(i).max(0.0);
    }
    let value = x.iter().zip(c).map(|(x, c)| x * c).sum();
    Ok(LpSolution { x, value })
}
