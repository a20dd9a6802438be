//! Dense two-phase simplex for `max c'x  s.t.  A x = b, x >= 0`.
//!
//! Bland's rule is used for both entering and leaving variables, so the
//! method terminates on the highly degenerate occupation-measure programs.
//! Redundant equality rows are detected after phase one and dropped.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

/// Optimal basic feasible solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Basic column per retained row.
    pub basis: Vec<usize>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs `c_j - c_B' B^-1 A_j`; the last entry holds `-objective`.
    cost: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cost.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for j in 0..w {
                        row[j] -= f * pivot_row[j];
                    }
                }
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex iterations over columns `< allowed`.
    fn optimise(&mut self, allowed: usize) -> Result<()> {
        let rhs = self.width() - 1;
        // Bland's rule cannot cycle; the cap only guards against numerical trouble.
        for _ in 0..100_000 {
            let Some(enter) = (0..allowed).find(|&j| self.cost[j] > COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[enter] > PIVOT_TOL {
                    let ratio = row[rhs] / row[enter];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::Unbounded);
            };
            self.pivot(r, enter);
        }
        Err(Error::Numerical("simplex iteration limit reached".into()))
    }
}

/// Maximises `c'x` over `{x >= 0 : A x = b}`.
pub fn maximize(c: &[f64], a: &Matrix, b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.rows(), a.cols());
    if c.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch(alloc::format!(
            "objective {} / rhs {} against a {m}x{n} constraint matrix",
            c.len(),
            b.len()
        )));
    }
    let w = n + m + 1;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; w];
        for j in 0..n {
            row[j] = sign * a[(i, j)];
        }
        row[n + i] = 1.0;
        row[w - 1] = sign * b[i];
        rows.push(row);
    }
    // Phase one: maximise -sum(artificials).
    let mut cost = vec![0.0; w];
    for row in &rows {
        for j in 0..n {
            cost[j] += row[j];
        }
        cost[w - 1] += row[w - 1];
    }
    let mut t = Tableau { rows, cost, basis: (n..n + m).collect() };
    t.optimise(n + m)?;
    if t.cost[w - 1] > FEAS_TOL {
        return Err(Error::Infeasible);
    }

    // Drive artificials out of the basis, dropping redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    // Phase two.
    let mut cost = vec![0.0; w];
    cost[..n].copy_from_slice(c);
    for (row, &bj) in t.rows.iter().zip(&t.basis) {
        let cb = c[bj];
        if cb != 0.0 {
            for j in 0..w {
                cost[j] -= cb * row[j];
            }
        }
    }
    t.cost = cost;
    t.optimise(n)?;

    let mut x = vec![0.0; n];
    for (row, &bj) in t.rows.iter().zip(&t.basis) {
        x[bj] = row[w - 1].max(0.0);
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective, basis: t.basis })
}
