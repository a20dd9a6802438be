use alloc::vec;
use alloc::vec::Vec;

use super::occupation::balance_constraints;
use super::OccupationMeasure;
use crate::linalg::{independent_rows, solve, Matrix};
use crate::model::TransitionKernel;
use crate::{Error, Result};

/// Default cap on `|S| * |A|` for vertex enumeration.
pub const DEFAULT_VERTEX_CAP: usize = 16;

const RANK_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-9;

/// All vertices of the occupation polytope, by enumerating every basis of
/// the equality system and keeping the nonnegative basic solutions.
pub fn enumerate_vertices(kernel: &TransitionKernel, cap: usize) -> Result<Vec<OccupationMeasure>> {
    let (n_s, n_a) = (kernel.n_states(), kernel.n_actions());
    let n = n_s * n_a;
    if n > cap {
        return Err(Error::DimensionCapExceeded { variables: n, limit: cap });
    }
    let (a_full, b_full) = balance_constraints(kernel);
    let aug = Matrix::from_fn(a_full.rows(), n + 1, |r, c| if c < n { a_full[(r, c)] } else { b_full[r] });
    let keep = independent_rows(&aug, RANK_TOL);
    let m = keep.len();
    let a = Matrix::from_fn(m, n, |r, c| a_full[(keep[r], c)]);
    let b: Vec<f64> = keep.iter().map(|&r| b_full[r]).collect();

    let mut out: Vec<OccupationMeasure> = Vec::new();
    let mut cols: Vec<usize> = (0..m).collect();
    loop {
        let basis = Matrix::from_fn(m, m, |r, c| a[(r, cols[c])]);
        if let Some(xb) = solve(&basis, &b, RANK_TOL) {
            if xb.iter().all(|v| *v >= -FEAS_TOL) {
                let mut rho = vec![0.0; n];
                for (&c, &v) in cols.iter().zip(&xb) {
                    rho[c] = v.max(0.0);
                }
                let sum: f64 = rho.iter().sum();
                rho.iter_mut().for_each(|v| *v /= sum);
                let cand = OccupationMeasure::new(n_s, n_a, rho)?;
                if !out.iter().any(|v| v.max_abs_diff(&cand) <= DEDUP_TOL) {
                    out.push(cand);
                }
            }
        }
        if !next_combination(&mut cols, n) {
            break;
        }
    }
    Ok(out)
}

fn next_combination(cols: &mut [usize], n: usize) -> bool {
    let m = cols.len();
    for i in (0..m).rev() {
        if cols[i] < n - m + i {
            cols[i] += 1;
            for j in i + 1..m {
                cols[j] = cols[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
