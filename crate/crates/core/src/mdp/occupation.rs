use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::stationary::{check_dims, stationary_distribution};
use super::{OccupationMeasure, ProspectReward, StationaryPolicy};
use crate::linalg::Matrix;
use crate::lp;
use crate::model::TransitionKernel;
use crate::{Error, Result};

const ZERO_MASS: f64 = 1e-14;

/// Equality system `A rho = b` describing the occupation polytope: one
/// balance row per state followed by the normalization row.
pub fn balance_constraints(kernel: &TransitionKernel) -> (Matrix, Vec<f64>) {
    let (n_s, n_a) = (kernel.n_states(), kernel.n_actions());
    let a = Matrix::from_fn(n_s + 1, n_s * n_a, |r, c| {
        if r == n_s {
            return 1.0;
        }
        let (s, act) = (c / n_a, c % n_a);
        let ind = if r == s { 1.0 } else { 0.0 };
        ind - kernel.prob(r, act, s)
    });
    let mut b = vec![0.0; n_s + 1];
    b[n_s] = 1.0;
    (a, b)
}

/// Optimal basic occupation measure for `max sum rho(s,a) K(s,a)`.
pub fn best_response_lp(k: &ProspectReward, kernel: &TransitionKernel) -> Result<OccupationMeasure> {
    if k.n_states() != kernel.n_states() || k.n_actions() != kernel.n_actions() {
        return Err(Error::DimensionMismatch(format!(
            "reward is {}x{} but kernel is {}x{}",
            k.n_states(),
            k.n_actions(),
            kernel.n_states(),
            kernel.n_actions()
        )));
    }
    let (a, b) = balance_constraints(kernel);
    let sol = lp::maximize(k.as_slice(), &a, &b).map_err(|e| match e {
        Error::Infeasible | Error::Unbounded => {
            Error::Numerical(format!("occupation LP reported {e} on a valid kernel"))
        }
        e => e,
    })?;
    let mut rho = sol.x;
    for v in rho.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let sum: f64 = rho.iter().sum();
    rho.iter_mut().for_each(|v| *v /= sum);
    OccupationMeasure::new(kernel.n_states(), kernel.n_actions(), rho)
}

/// `Psi(a|s) = rho(s,a) / sum_a' rho(s,a')`; states without mass play
/// uniformly.
pub fn policy_from_occupation(rho: &OccupationMeasure) -> StationaryPolicy {
    let (n_s, n_a) = (rho.n_states(), rho.n_actions());
    let mut psi = Vec::with_capacity(n_s * n_a);
    for s in 0..n_s {
        let mass = rho.state_mass(s);
        if mass <= ZERO_MASS {
            psi.extend(core::iter::repeat_n(1.0 / n_a as f64, n_a));
        } else {
            let start = psi.len();
            psi.extend((0..n_a).map(|a| rho.get(s, a) / mass));
            let row_sum: f64 = psi[start..].iter().sum();
            psi[start..].iter_mut().for_each(|v| *v /= row_sum);
        }
    }
    StationaryPolicy::new(n_s, n_a, psi).expect("normalized rows")
}

/// `rho(s,a) = pi(s) Psi(a|s)`.
pub fn occupation_of(policy: &StationaryPolicy, kernel: &TransitionKernel) -> Result<OccupationMeasure> {
    check_dims(policy, kernel)?;
    let pi = stationary_distribution(policy, kernel)?;
    let (n_s, n_a) = (policy.n_states(), policy.n_actions());
    let mut rho = Vec::with_capacity(n_s * n_a);
    for s in 0..n_s {
        for a in 0..n_a {
            rho.push(pi[s] * policy.prob(s, a));
        }
    }
    OccupationMeasure::new(n_s, n_a, rho)
}
