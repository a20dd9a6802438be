use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mdp::{
    propagate, prospect_reward_from_marginals, prospect_reward_monte_carlo, Marginal, StationaryPolicy,
};
use crate::model::{JointPayoff, Market};
use crate::{Error, Result};

use super::EstimationMode;

/// Distributions are treated as stationary once a step moves no entry by
/// more than this.
const FIXED_POINT_TOL: f64 = 1e-14;

/// Finite-horizon payoff estimator that carries the prosumers' state across
/// calls.
///
/// In exact-propagation mode each prosumer's state distribution is
/// propagated exactly and the per-step prospect payoff is summed over the
/// opponents' time-`t` marginals. In trajectory-sampling mode a single
/// sample path is simulated and the realized `w(p_t)/p_t v(U)` is averaged,
/// where `p_t` is the time-`t` probability of the realized opponent atom.
#[derive(Debug, Clone)]
pub struct Estimator {
    mode: EstimationMode,
    initial_state: usize,
    dists: Vec<Vec<f64>>,
    realized: Vec<usize>,
    rng: ChaCha8Rng,
    atom_limit: u128,
    mc_samples: usize,
}

impl Estimator {
    pub fn new(
        market: &Market,
        mode: EstimationMode,
        initial_state: usize,
        seed: u64,
        atom_limit: u128,
        mc_samples: usize,
    ) -> Result<Self> {
        for p in market.prosumers() {
            if initial_state >= p.n_states() {
                return Err(Error::InvalidParameter(format!(
                    "initial state {initial_state} exceeds capacity of prosumer {}",
                    p.spec().id
                )));
            }
        }
        let mut e = Estimator {
            mode,
            initial_state,
            dists: Vec::new(),
            realized: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            atom_limit,
            mc_samples,
        };
        e.dists = market
            .prosumers()
            .iter()
            .map(|p| {
                let mut d = vec![0.0; p.n_states()];
                d[initial_state] = 1.0;
                d
            })
            .collect();
        e.realized = vec![initial_state; market.len()];
        Ok(e)
    }

    /// Puts every prosumer back at the initial state.
    pub fn reset(&mut self) {
        for d in self.dists.iter_mut() {
            d.iter_mut().for_each(|v| *v = 0.0);
            d[self.initial_state] = 1.0;
        }
        self.realized.iter_mut().for_each(|s| *s = self.initial_state);
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.dists
    }

    /// Plays `policies` for `horizon` steps and returns the average prospect
    /// payoff of each prosumer in `targets`.
    pub fn run(
        &mut self,
        market: &Market,
        policies: &[&StationaryPolicy],
        horizon: usize,
        targets: &[usize],
    ) -> Result<Vec<f64>> {
        if policies.len() != market.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} policies for {} prosumers",
                policies.len(),
                market.len()
            )));
        }
        for (j, (pol, p)) in policies.iter().zip(market.prosumers()).enumerate() {
            if pol.n_states() != p.n_states() || pol.n_actions() != p.n_actions() {
                return Err(Error::DimensionMismatch(format!("policy {j} does not fit prosumer {j}")));
            }
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        match self.mode {
            EstimationMode::ExactPropagation => self.run_exact(market, policies, horizon, targets),
            EstimationMode::TrajectorySampling => self.run_trajectory(market, policies, horizon, targets),
        }
    }

    fn run_exact(
        &mut self,
        market: &Market,
        policies: &[&StationaryPolicy],
        horizon: usize,
        targets: &[usize],
    ) -> Result<Vec<f64>> {
        let mut sums = vec![0.0; targets.len()];
        let mut t = 0;
        while t < horizon {
            let marg: Vec<Vec<f64>> = self
                .dists
                .iter()
                .zip(policies)
                .map(|(d, pol)| {
                    let n_a = pol.n_actions();
                    (0..d.len() * n_a).map(|c| d[c / n_a] * pol.prob(c / n_a, c % n_a)).collect()
                })
                .collect();
            let views: Vec<Marginal<'_>> =
                marg.iter().zip(policies).map(|(p, pol)| Marginal { n_actions: pol.n_actions(), p }).collect();
            let mut step = vec![0.0; targets.len()];
            for (slot, &i) in targets.iter().enumerate() {
                let pro = market.prosumer(i);
                let own = (pro.n_states(), pro.n_actions());
                let k = match prospect_reward_from_marginals(market, i, own, &views, pro.behavior(), self.atom_limit) {
                    Err(Error::TooManyAtoms { .. }) => {
                        let seed = self.rng.next_u64();
                        prospect_reward_monte_carlo(market, i, own, &views, pro.behavior(), self.mc_samples, seed)?
                            .reward
                    }
                    other => other?,
                };
                step[slot] = k.as_slice().iter().zip(&marg[i]).map(|(k, p)| k * p).sum();
            }
            t += 1;
            let next: Vec<Vec<f64>> = self
                .dists
                .iter()
                .zip(policies)
                .zip(market.prosumers())
                .map(|((d, pol), p)| propagate(d, pol, p.kernel()))
                .collect();
            let moved = self
                .dists
                .iter()
                .zip(&next)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            self.dists = next;
            let repeat = if moved <= FIXED_POINT_TOL { 1 + horizon - t } else { 1 };
            for (s, v) in sums.iter_mut().zip(&step) {
                *s += v * repeat as f64;
            }
            if repeat > 1 {
                break;
            }
        }
        Ok(sums.into_iter().map(|s| s / horizon as f64).collect())
    }

    fn run_trajectory(
        &mut self,
        market: &Market,
        policies: &[&StationaryPolicy],
        horizon: usize,
        targets: &[usize],
    ) -> Result<Vec<f64>> {
        let n = market.len();
        let mut sums = vec![0.0; targets.len()];
        let mut actions = vec![0usize; n];
        let mut atom_p = vec![0.0; n];
        for _ in 0..horizon {
            for j in 0..n {
                let s = self.realized[j];
                let a = sample_index(&mut self.rng, policies[j].row(s));
                actions[j] = a;
                atom_p[j] = self.dists[j][s] * policies[j].prob(s, a);
            }
            for (slot, &i) in targets.iter().enumerate() {
                let p: f64 = (0..n).filter(|&j| j != i).map(|j| atom_p[j]).product();
                let params = market.prosumer(i).behavior();
                let u = market.utility(i, &self.realized, &actions);
                sums[slot] += params.weight_clamped(p) / p * params.value(u);
            }
            for j in 0..n {
                let pro = market.prosumer(j);
                let kern = pro.kernel();
                let (s, a) = (self.realized[j], actions[j]);
                let u = self.rng.random::<f64>();
                let mut acc = 0.0;
                let mut next = pro.n_states() - 1;
                for x in 0..pro.n_states() {
                    acc += kern.prob(x, a, s);
                    if u < acc {
                        next = x;
                        break;
                    }
                }
                self.realized[j] = next;
                self.dists[j] = propagate(&self.dists[j], policies[j], kern);
            }
        }
        Ok(sums.into_iter().map(|s| s / horizon as f64).collect())
    }
}

fn sample_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Average prospect payoffs of every prosumer over `horizon` steps, starting
/// from `initial_state`.
pub fn estimate_payoffs(
    market: &Market,
    policies: &[StationaryPolicy],
    horizon: usize,
    mode: EstimationMode,
    initial_state: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut est = Estimator::new(market, mode, initial_state, seed, crate::mdp::EXACT_ATOM_LIMIT, 1_000_000)?;
    let refs: Vec<&StationaryPolicy> = policies.iter().collect();
    let all: Vec<usize> = (0..market.len()).collect();
    est.run(market, &refs, horizon, &all)
}
