//! Average-reward MDP machinery for a single prosumer facing fixed
//! stationary opponents.
//!
//! A prosumer's long-run prospect payoff is linear in its occupation
//! measure `rho(s, a) = pi(s) Psi(a | s)`, with coefficients `K(s, a)` that
//! only depend on the opponents. Best responses are therefore linear
//! programs over the occupation polytope, and are attained at its vertices.

mod occupation;
mod reward;
mod stationary;
mod value;
mod vertices;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

pub use occupation::{
    balance_constraints, best_response_lp, occupation_of, policy_from_occupation,
};
pub use reward::{
    prospect_reward, prospect_reward_from_marginals, prospect_reward_monte_carlo, Marginal,
    MonteCarloReward, RewardEstimator, EXACT_ATOM_LIMIT,
};
pub use stationary::{induced_chain, power_iteration, propagate, stationary_distribution, stationary_of_chain};
pub use value::{exact_value, monte_carlo_value, MonteCarloValue};
pub use vertices::{enumerate_vertices, DEFAULT_VERTEX_CAP};

const ROW_TOL: f64 = 1e-12;

/// Row-stochastic matrix `Psi(a | s)`, rows indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPolicy {
    n_states: usize,
    n_actions: usize,
    psi: Vec<f64>,
}

impl StationaryPolicy {
    pub fn new(n_states: usize, n_actions: usize, psi: Vec<f64>) -> Result<Self> {
        if psi.len() != n_states * n_actions || n_states == 0 || n_actions == 0 {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} entries for {n_states} states x {n_actions} actions",
                psi.len()
            )));
        }
        for s in 0..n_states {
            let row = &psi[s * n_actions..(s + 1) * n_actions];
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::InvalidParameter(format!("policy row {s} has a negative entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidParameter(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(StationaryPolicy { n_states, n_actions, psi })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        StationaryPolicy { n_states, n_actions, psi: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }

    /// Plays `choice[s]` with certainty in state `s`.
    pub fn deterministic(choice: &[usize], n_actions: usize) -> Self {
        let mut psi = vec![0.0; choice.len() * n_actions];
        for (s, &a) in choice.iter().enumerate() {
            psi[s * n_actions + a] = 1.0;
        }
        StationaryPolicy { n_states: choice.len(), n_actions, psi }
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.psi[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.psi[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.psi
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Rows drawn uniformly from the probability simplex.
    pub fn random(n_states: usize, n_actions: usize, rng: &mut impl rand::Rng) -> Self {
        use rand_distr::{Distribution, Exp1};
        let mut psi = Vec::with_capacity(n_states * n_actions);
        for _ in 0..n_states {
            let row: Vec<f64> = (0..n_actions).map(|_| Exp1.sample(rng)).collect();
            let sum: f64 = row.iter().sum();
            psi.extend(row.iter().map(|v| v / sum));
        }
        StationaryPolicy { n_states, n_actions, psi }
    }

    /// Largest per-state total-variation distance to `other`.
    pub fn max_tv_distance(&self, other: &StationaryPolicy) -> f64 {
        (0..self.n_states)
            .map(|s| 0.5 * self.row(s).iter().zip(other.row(s)).map(|(a, b)| (a - b).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution `pi` over a prosumer's storage states.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("stationary distribution has a negative entry".into()));
        }
        let sum: f64 = pi.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("stationary distribution sums to {sum}")));
        }
        Ok(StationaryDistribution { pi })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

impl core::ops::Index<usize> for StationaryDistribution {
    type Output = f64;

    fn index(&self, s: usize) -> &f64 {
        &self.pi[s]
    }
}

/// Probability vector over state-action pairs, indexed `s * n_actions + a`.
///
/// Balance with respect to a kernel is not enforced by construction; see
/// [`OccupationMeasure::balance_residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    n_states: usize,
    n_actions: usize,
    rho: Vec<f64>,
}

impl OccupationMeasure {
    pub fn new(n_states: usize, n_actions: usize, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch(format!(
                "occupation measure has {} entries for {n_states} x {n_actions}",
                rho.len()
            )));
        }
        if rho.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("occupation measure has a negative entry".into()));
        }
        let sum: f64 = rho.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("occupation measure sums to {sum}")));
        }
        Ok(OccupationMeasure { n_states, n_actions, rho })
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.rho[state * self.n_actions + action]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rho
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn state_mass(&self, state: usize) -> f64 {
        self.rho[state * self.n_actions..(state + 1) * self.n_actions].iter().sum()
    }

    /// `max_x | sum_{s,a} rho(s,a) (1{x = s} - w[x][a][s]) |`.
    pub fn balance_residual(&self, kernel: &crate::model::TransitionKernel) -> f64 {
        (0..self.n_states)
            .map(|x| {
                let mut r = 0.0;
                for s in 0..self.n_states {
                    for a in 0..self.n_actions {
                        let ind = if x == s { 1.0 } else { 0.0 };
                        r += self.get(s, a) * (ind - kernel.prob(x, a, s));
                    }
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &OccupationMeasure) -> f64 {
        self.rho.iter().zip(&other.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn marginal(&self) -> Marginal<'_> {
        Marginal { n_actions: self.n_actions, p: &self.rho }
    }
}

/// Prospect-weighted reward `K(s, a)` of one prosumer against fixed
/// opponents.
#[derive(Debug, Clone, PartialEq)]
pub struct ProspectReward {
    n_states: usize,
    n_actions: usize,
    k: Vec<f64>,
}

impl ProspectReward {
    pub fn new(n_states: usize, n_actions: usize, k: Vec<f64>) -> Result<Self> {
        if k.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch(format!(
                "reward has {} entries for {n_states} x {n_actions}",
                k.len()
            )));
        }
        if k.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("reward has a non-finite entry".into()));
        }
        Ok(ProspectReward { n_states, n_actions, k })
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.k[state * self.n_actions + action]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.k
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Long-run payoff `sum rho(s,a) K(s,a)` of an occupation measure.
    pub fn evaluate(&self, rho: &OccupationMeasure) -> f64 {
        self.k.iter().zip(rho.as_slice()).map(|(k, r)| k * r).sum()
    }
}
