//! Dense linear algebra for the tiny systems that appear here
//! (a handful of states, at most a few dozen variables).

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol` times the largest
/// entry of `a`.
pub fn solve(a: &Matrix, b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))?;
        if m[(piv, col)].abs() <= tol * scale {
            return None;
        }
        m.swap_rows(col, piv);
        x.swap(col, piv);
        for r in col + 1..n {
            let f = m[(r, col)] / m[(col, col)];
            if f != 0.0 {
                for c in col..n {
                    let v = m[(col, c)];
                    m[(r, c)] -= f * v;
                }
                x[r] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for c in col + 1..n {
            acc -= m[(col, c)] * x[c];
        }
        x[col] = acc / m[(col, col)];
    }
    Some(x)
}

/// Reduced row echelon form in place. Returns the pivot columns.
pub fn rref(m: &mut Matrix, tol: f64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let Some(piv) = (row..m.rows).max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs())) else {
            break;
        };
        if m[(piv, col)].abs() <= tol {
            continue;
        }
        m.swap_rows(row, piv);
        let p = m[(row, col)];
        for c in 0..m.cols {
            m[(row, c)] /= p;
        }
        for r in 0..m.rows {
            if r != row {
                let f = m[(r, col)];
                if f != 0.0 {
                    for c in 0..m.cols {
                        let v = m[(row, c)];
                        m[(r, c)] -= f * v;
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Indices of a maximal set of linearly independent rows of `a`, chosen
/// greedily in order.
pub fn independent_rows(a: &Matrix, tol: f64) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for r in 0..a.rows {
        let mut v = a.row(r).to_vec();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > tol {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            keep.push(r);
        }
    }
    keep
}

/// Orthonormal basis of the null space of `a`, as columns of an
/// `a.cols() x k` matrix.
pub fn null_space(a: &Matrix, tol: f64) -> Matrix {
    let n = a.cols;
    let mut r = a.clone();
    let pivots = rref(&mut r, tol);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![0.0; n];
        v[f] = 1.0;
        for (row, &p) in pivots.iter().enumerate() {
            v[p] = -r[(row, f)];
        }
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    Matrix::from_fn(n, basis.len(), |i, j| basis[j][i])
}
