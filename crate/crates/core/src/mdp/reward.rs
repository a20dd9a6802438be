use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ProspectReward, StationaryDistribution, StationaryPolicy};
use crate::model::JointPayoff;
use crate::prospect::ProspectParams;
use crate::{Error, Result};

/// Largest opponent joint support enumerated exactly.
pub const EXACT_ATOM_LIMIT: u128 = 1_000_000;

/// Joint state-action law of one prosumer, indexed `s * n_actions + a`.
#[derive(Debug, Clone, Copy)]
pub struct Marginal<'a> {
    pub n_actions: usize,
    pub p: &'a [f64],
}

/// Monte Carlo estimate of `K` with per-entry standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReward {
    pub reward: ProspectReward,
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Controls the switch between exact enumeration and sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardEstimator {
    pub atom_limit: u128,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RewardEstimator {
    fn default() -> Self {
        RewardEstimator { atom_limit: EXACT_ATOM_LIMIT, samples: 1_000_000, seed: 0 }
    }
}

/// `K(s,a)` for prosumer `me` when every prosumer `j` plays `policies[j]`
/// from its stationary law `dists[j]`. Entry `me` of `policies` fixes the
/// own dimensions and is otherwise ignored.
///
/// Falls back to [`prospect_reward_monte_carlo`] when the opponents' joint
/// support exceeds `est.atom_limit`.
pub fn prospect_reward<P: JointPayoff + ?Sized>(
    payoff: &P,
    me: usize,
    policies: &[StationaryPolicy],
    dists: &[StationaryDistribution],
    params: &ProspectParams,
    est: &RewardEstimator,
) -> Result<ProspectReward> {
    if policies.len() != payoff.num_players() || dists.len() != policies.len() || me >= policies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} policies and {} distributions for {} prosumers (me = {me})",
            policies.len(),
            dists.len(),
            payoff.num_players()
        )));
    }
    let rho: Vec<Vec<f64>> = policies
        .iter()
        .zip(dists)
        .enumerate()
        .map(|(j, (pol, pi))| {
            if pi.len() != pol.n_states() {
                return Err(Error::DimensionMismatch(format!(
                    "prosumer {j}: policy has {} states, distribution {}",
                    pol.n_states(),
                    pi.len()
                )));
            }
            let mut r = Vec::with_capacity(pol.n_states() * pol.n_actions());
            for s in 0..pol.n_states() {
                for a in 0..pol.n_actions() {
                    r.push(pi[s] * pol.prob(s, a));
                }
            }
            Ok(r)
        })
        .collect::<Result<_>>()?;
    let marginals: Vec<Marginal<'_>> = rho
        .iter()
        .zip(policies)
        .map(|(p, pol)| Marginal { n_actions: pol.n_actions(), p })
        .collect();
    let own = (policies[me].n_states(), policies[me].n_actions());
    match prospect_reward_from_marginals(payoff, me, own, &marginals, params, est.atom_limit) {
        Err(Error::TooManyAtoms { .. }) => {
            prospect_reward_monte_carlo(payoff, me, own, &marginals, params, est.samples, est.seed)
                .map(|mc| mc.reward)
        }
        other => other,
    }
}

struct Support {
    n_actions: usize,
    /// `(state * n_actions + action, probability)` for positive entries.
    atoms: Vec<(usize, f64)>,
}

fn supports(me: usize, n_players: usize, marginals: &[Marginal<'_>]) -> Result<Vec<Option<Support>>> {
    if marginals.len() != n_players || me >= n_players {
        return Err(Error::DimensionMismatch(format!(
            "{} marginals for {n_players} prosumers (me = {me})",
            marginals.len()
        )));
    }
    marginals
        .iter()
        .enumerate()
        .map(|(j, m)| {
            if j == me {
                return Ok(None);
            }
            if m.n_actions == 0 || m.p.len() % m.n_actions != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "prosumer {j}: marginal of length {} with {} actions",
                    m.p.len(),
                    m.n_actions
                )));
            }
            let atoms: Vec<(usize, f64)> =
                m.p.iter().copied().enumerate().filter(|(_, p)| *p > 0.0).collect();
            let mass: f64 = atoms.iter().map(|(_, p)| p).sum();
            if m.p.iter().any(|p| !(*p >= 0.0)) || (mass - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "prosumer {j}: marginal is not a probability vector (mass {mass})"
                )));
            }
            Ok(Some(Support { n_actions: m.n_actions, atoms }))
        })
        .collect()
}

/// Exact `K(s,a)` from arbitrary opponent state-action laws.
///
/// Each opponent joint atom is weighted separately, even when several atoms
/// produce the same utility. Entry `me` of `marginals` is ignored.
pub fn prospect_reward_from_marginals<P: JointPayoff + ?Sized>(
    payoff: &P,
    me: usize,
    own: (usize, usize),
    marginals: &[Marginal<'_>],
    params: &ProspectParams,
    atom_limit: u128,
) -> Result<ProspectReward> {
    let n = payoff.num_players();
    let sup = supports(me, n, marginals)?;
    let atoms: u128 = sup.iter().flatten().map(|s| s.atoms.len() as u128).product();
    if atoms > atom_limit {
        return Err(Error::TooManyAtoms { atoms, limit: atom_limit });
    }
    let (n_s, n_a) = own;
    let mut k = vec![0.0; n_s * n_a];
    let others: Vec<(usize, &Support)> =
        sup.iter().enumerate().filter_map(|(j, s)| s.as_ref().map(|s| (j, s))).collect();
    let mut cursor = vec![0usize; others.len()];
    let mut states = vec![0usize; n];
    let mut actions = vec![0usize; n];
    loop {
        let mut p = 1.0;
        for (c, (j, s)) in cursor.iter().zip(&others) {
            let (idx, q) = s.atoms[*c];
            states[*j] = idx / s.n_actions;
            actions[*j] = idx % s.n_actions;
            p *= q;
        }
        let w = params.weight_clamped(p);
        if w != 0.0 {
            for si in 0..n_s {
                for ai in 0..n_a {
                    states[me] = si;
                    actions[me] = ai;
                    k[si * n_a + ai] += w * params.value(payoff.utility(me, &states, &actions));
                }
            }
        }
        if !advance(&mut cursor, &others) {
            break;
        }
    }
    ProspectReward::new(n_s, n_a, k)
}

fn advance(cursor: &mut [usize], others: &[(usize, &Support)]) -> bool {
    for (c, (_, s)) in cursor.iter_mut().zip(others).rev() {
        *c += 1;
        if *c < s.atoms.len() {
            return true;
        }
        *c = 0;
    }
    false
}

/// Opponent index, action count, support atoms and their cumulative masses.
type OpponentTable = (usize, usize, Vec<(usize, f64)>, Vec<f64>);

/// Draws opponent joint atoms independently from their marginals.
pub(super) struct AtomSampler {
    others: Vec<OpponentTable>,
}

impl AtomSampler {
    pub(super) fn new<P: JointPayoff + ?Sized>(
        payoff: &P,
        me: usize,
        marginals: &[Marginal<'_>],
    ) -> Result<Self> {
        let sup = supports(me, payoff.num_players(), marginals)?;
        let others = sup
            .into_iter()
            .enumerate()
            .filter_map(|(j, s)| s.map(|s| (j, s)))
            .map(|(j, s)| {
                let mut acc = 0.0;
                let cdf = s
                    .atoms
                    .iter()
                    .map(|(_, p)| {
                        acc += p;
                        acc
                    })
                    .collect();
                (j, s.n_actions, s.atoms, cdf)
            })
            .collect();
        Ok(AtomSampler { others })
    }

    /// Fills the opponent slots of `states`/`actions` and returns the atom's
    /// probability.
    pub(super) fn draw(&self, rng: &mut impl Rng, states: &mut [usize], actions: &mut [usize]) -> f64 {
        let mut p = 1.0;
        for (j, n_a, atoms, cdf) in &self.others {
            let u = rng.random::<f64>() * cdf[cdf.len() - 1];
            let i = cdf.partition_point(|c| *c <= u).min(atoms.len() - 1);
            let (idx, q) = atoms[i];
            states[*j] = idx / n_a;
            actions[*j] = idx % n_a;
            p *= q;
        }
        p
    }
}

/// Importance-weighted estimate `E[w(p)/p v(U)]` with atoms drawn from `p`.
pub fn prospect_reward_monte_carlo<P: JointPayoff + ?Sized>(
    payoff: &P,
    me: usize,
    own: (usize, usize),
    marginals: &[Marginal<'_>],
    params: &ProspectParams,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloReward> {
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
    }
    let sampler = AtomSampler::new(payoff, me, marginals)?;
    let n = payoff.num_players();
    let (n_s, n_a) = own;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; n_s * n_a];
    let mut sum_sq = vec![0.0; n_s * n_a];
    let mut states = vec![0usize; n];
    let mut actions = vec![0usize; n];
    for _ in 0..samples {
        let p = sampler.draw(&mut rng, &mut states, &mut actions);
        let ratio = params.weight_clamped(p) / p;
        for si in 0..n_s {
            for ai in 0..n_a {
                states[me] = si;
                actions[me] = ai;
                let y = ratio * params.value(payoff.utility(me, &states, &actions));
                sum[si * n_a + ai] += y;
                sum_sq[si * n_a + ai] += y * y;
            }
        }
    }
    let m = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, mu)| libm::sqrt(((sq - m * mu * mu) / (m - 1.0)).max(0.0) / m))
        .collect();
    Ok(MonteCarloReward { reward: ProspectReward::new(n_s, n_a, mean)?, std_err, samples })
}
