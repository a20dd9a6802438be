use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{StationaryDistribution, StationaryPolicy};
use crate::linalg::{solve, Matrix};
use crate::model::TransitionKernel;
use crate::{Error, Result};

const SOLVE_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const POWER_CAP: usize = 100_000;

/// Row-stochastic chain `P[s][s'] = sum_a Psi(a|s) w[s'][a][s]`.
pub fn induced_chain(policy: &StationaryPolicy, kernel: &TransitionKernel) -> Result<Matrix> {
    check_dims(policy, kernel)?;
    let n = kernel.n_states();
    Ok(Matrix::from_fn(n, n, |s, next| {
        (0..kernel.n_actions()).map(|a| policy.prob(s, a) * kernel.prob(next, a, s)).sum()
    }))
}

/// One step of the state distribution under `policy`.
pub fn propagate(dist: &[f64], policy: &StationaryPolicy, kernel: &TransitionKernel) -> Vec<f64> {
    let n = kernel.n_states();
    let mut out = vec![0.0; n];
    for (s, &mass) in dist.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for a in 0..kernel.n_actions() {
            let pa = mass * policy.prob(s, a);
            if pa == 0.0 {
                continue;
            }
            for (next, o) in out.iter_mut().enumerate() {
                *o += pa * kernel.prob(next, a, s);
            }
        }
    }
    out
}

pub fn stationary_distribution(
    policy: &StationaryPolicy,
    kernel: &TransitionKernel,
) -> Result<StationaryDistribution> {
    stationary_of_chain(&induced_chain(policy, kernel)?)
}

/// Unique stationary vector of a row-stochastic matrix.
///
/// Solves `(P' - I) pi = 0` with the last equation replaced by `sum pi = 1`.
/// If the solution is not clean to `1e-10` the result of power iteration is
/// used instead.
pub fn stationary_of_chain(p: &Matrix) -> Result<StationaryDistribution> {
    let n = p.rows();
    let a = Matrix::from_fn(n, n, |r, c| {
        if r == n - 1 {
            1.0
        } else {
            p[(c, r)] - if r == c { 1.0 } else { 0.0 }
        }
    });
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let pi = solve(&a, &rhs, SOLVE_TOL).ok_or_else(|| {
        Error::NonUniqueStationary(format!(
            "induced chain on {n} states has more than one closed class"
        ))
    })?;
    let pi = if residual(p, &pi) <= RESIDUAL_TOL && pi.iter().all(|v| *v >= -RESIDUAL_TOL) {
        pi
    } else {
        log::debug!("direct stationary solve inaccurate; falling back to power iteration");
        power_iteration(p, POWER_TOL, POWER_CAP).ok_or_else(|| {
            Error::Numerical("power iteration did not converge within 1e5 steps".into())
        })?
    };
    StationaryDistribution::new(clean(pi))
}

/// Iterates `pi <- pi P` from the uniform vector until the sup-norm change is
/// below `tol`.
pub fn power_iteration(p: &Matrix, tol: f64, max_iter: usize) -> Option<Vec<f64>> {
    let n = p.rows();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let mut next = vec![0.0; n];
        for (s, &m) in pi.iter().enumerate() {
            for (t, v) in next.iter_mut().enumerate() {
                *v += m * p[(s, t)];
            }
        }
        let delta = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pi = next;
        if delta < tol {
            return Some(pi);
        }
    }
    None
}

fn residual(p: &Matrix, pi: &[f64]) -> f64 {
    let n = p.rows();
    (0..n)
        .map(|t| {
            let v: f64 = (0..n).map(|s| pi[s] * p[(s, t)]).sum();
            (v - pi[t]).abs()
        })
        .fold(0.0, f64::max)
}

fn clean(mut pi: Vec<f64>) -> Vec<f64> {
    for v in pi.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = pi.iter().sum();
    for v in pi.iter_mut() {
        *v /= sum;
    }
    pi
}

pub(super) fn check_dims(policy: &StationaryPolicy, kernel: &TransitionKernel) -> Result<()> {
    if policy.n_states() != kernel.n_states() || policy.n_actions() != kernel.n_actions() {
        return Err(Error::DimensionMismatch(format!(
            "policy is {}x{} but kernel is {}x{}",
            policy.n_states(),
            policy.n_actions(),
            kernel.n_states(),
            kernel.n_actions()
        )));
    }
    Ok(())
}
