use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::occupation::occupation_of;
use super::reward::{prospect_reward_from_marginals, AtomSampler, Marginal};
use super::{OccupationMeasure, StationaryPolicy};
use crate::model::{JointPayoff, TransitionKernel};
use crate::prospect::ProspectParams;
use crate::{Error, Result};

/// Monte Carlo long-run prospect payoff of one prosumer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloValue {
    pub value: f64,
    pub std_err: f64,
}

fn occupations(policies: &[StationaryPolicy], kernels: &[&TransitionKernel]) -> Result<Vec<OccupationMeasure>> {
    if policies.len() != kernels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} policies for {} kernels",
            policies.len(),
            kernels.len()
        )));
    }
    policies.iter().zip(kernels).map(|(p, k)| occupation_of(p, k)).collect()
}

/// `V_i = sum_{s_i,a_i} rho_i(s_i,a_i) K_i(s_i,a_i)` for every prosumer,
/// enumerating the opponents' joint support exactly.
///
/// Returns [`Error::TooManyAtoms`] when some prosumer's opponents exceed
/// `atom_limit`; use [`monte_carlo_value`] in that case.
pub fn exact_value<P: JointPayoff + ?Sized>(
    payoff: &P,
    policies: &[StationaryPolicy],
    kernels: &[&TransitionKernel],
    params: &[ProspectParams],
    atom_limit: u128,
) -> Result<Vec<f64>> {
    if params.len() != policies.len() || payoff.num_players() != policies.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} policies, {} parameter sets, {} prosumers",
            policies.len(),
            params.len(),
            payoff.num_players()
        )));
    }
    let occ = occupations(policies, kernels)?;
    let marginals: Vec<Marginal<'_>> = occ.iter().map(|o| o.marginal()).collect();
    (0..policies.len())
        .map(|i| {
            let own = (occ[i].n_states(), occ[i].n_actions());
            let k = prospect_reward_from_marginals(payoff, i, own, &marginals, &params[i], atom_limit)?;
            Ok(k.evaluate(&occ[i]))
        })
        .collect()
}

/// Importance-sampled `V_i` with its standard error. Each sample draws an
/// opponent atom and averages `w(p)/p v(U)` over the prosumer's own
/// occupation measure.
pub fn monte_carlo_value<P: JointPayoff + ?Sized>(
    payoff: &P,
    me: usize,
    policies: &[StationaryPolicy],
    kernels: &[&TransitionKernel],
    params: &ProspectParams,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloValue> {
    if samples < 2 {
        return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
    }
    let occ = occupations(policies, kernels)?;
    let marginals: Vec<Marginal<'_>> = occ.iter().map(|o| o.marginal()).collect();
    let sampler = AtomSampler::new(payoff, me, &marginals)?;
    let own = &occ[me];
    let own_atoms: Vec<(usize, usize, f64)> = (0..own.n_states())
        .flat_map(|s| (0..own.n_actions()).map(move |a| (s, a)))
        .map(|(s, a)| (s, a, own.get(s, a)))
        .filter(|(_, _, p)| *p > 0.0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = payoff.num_players();
    let (mut states, mut actions) = (vec![0usize; n], vec![0usize; n]);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let p = sampler.draw(&mut rng, &mut states, &mut actions);
        let ratio = params.weight_clamped(p) / p;
        let mut y = 0.0;
        for &(s, a, r) in &own_atoms {
            states[me] = s;
            actions[me] = a;
            y += r * params.value(payoff.utility(me, &states, &actions));
        }
        y *= ratio;
        sum += y;
        sum_sq += y * y;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(MonteCarloValue { value: mean, std_err: libm::sqrt(var / m) })
}
