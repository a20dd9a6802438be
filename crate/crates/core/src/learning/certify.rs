use alloc::format;
use alloc::vec::Vec;

use crate::mdp::{
    best_response_lp, occupation_of, prospect_reward, stationary_distribution, RewardEstimator,
    StationaryDistribution, StationaryPolicy,
};
use crate::model::Market;
use crate::prospect::ProspectParams;
use crate::{Error, Result};

/// Outcome of checking a joint policy for an approximate equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub holds: bool,
    pub worst_gap: f64,
    /// Best unilateral gain of each prosumer.
    pub gaps: Vec<f64>,
    pub threshold: f64,
}

/// Largest gain each prosumer could obtain by deviating unilaterally,
/// `max_rho rho . K_i - V_i`, evaluated exactly.
///
/// The maximum over deviations is the occupation LP, whose optimum sits at
/// a vertex of the polytope, so this equals the best vertex deviation.
pub fn deviation_gaps(market: &Market, policies: &[StationaryPolicy], est: &RewardEstimator) -> Result<Vec<f64>> {
    if policies.len() != market.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} policies for {} prosumers",
            policies.len(),
            market.len()
        )));
    }
    let dists: Vec<StationaryDistribution> = policies
        .iter()
        .zip(market.prosumers())
        .map(|(p, pro)| stationary_distribution(p, pro.kernel()))
        .collect::<Result<_>>()?;
    (0..market.len())
        .map(|i| {
            let pro = market.prosumer(i);
            let k = prospect_reward(market, i, policies, &dists, pro.behavior(), est)?;
            let own = occupation_of(&policies[i], pro.kernel())?;
            let best = best_response_lp(&k, pro.kernel())?;
            Ok(k.evaluate(&best) - k.evaluate(&own))
        })
        .collect()
}

/// `max_i |V^T_i - V_i|` for one joint policy: the gap between the
/// `horizon`-step estimate from `initial_state` and the exact stationary
/// value.
pub fn estimation_error(
    market: &Market,
    policies: &[StationaryPolicy],
    horizon: usize,
    mode: super::EstimationMode,
    initial_state: usize,
    seed: u64,
) -> Result<f64> {
    let est = super::estimate_payoffs(market, policies, horizon, mode, initial_state, seed)?;
    let kernels: Vec<_> = market.prosumers().iter().map(|p| p.kernel()).collect();
    let params: Vec<ProspectParams> = market.prosumers().iter().map(|p| *p.behavior()).collect();
    let exact = crate::mdp::exact_value(market, policies, &kernels, &params, crate::mdp::EXACT_ATOM_LIMIT)?;
    Ok(est.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Holds iff every prosumer's best deviation gains at most
/// `3 epsilon + slack`.
pub fn certify_epsilon_ne(
    market: &Market,
    policies: &[StationaryPolicy],
    epsilon: f64,
    slack: f64,
) -> Result<Certificate> {
    if !(epsilon > 0.0) || !(slack >= 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive and slack nonnegative".into()));
    }
    let gaps = deviation_gaps(market, policies, &RewardEstimator::default())?;
    let worst_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = 3.0 * epsilon + slack;
    Ok(Certificate { holds: worst_gap <= threshold, worst_gap, gaps, threshold })
}

/// Smallest `delta` such that `|p - q| <= delta` implies
/// `|w(p) - w(q)| <= epsilon`, found by scanning `p` over a grid that is
/// dense near both endpoints.
pub fn weight_modulus(params: &ProspectParams, epsilon: f64) -> f64 {
    let c = match params {
        ProspectParams::Eut => return epsilon,
        ProspectParams::Pt(pt) => pt.c,
    };
    let inv = |y: f64| -> f64 {
        if y >= 1.0 {
            1.0
        } else if y <= 0.0 {
            0.0
        } else {
            libm::exp(-libm::pow(-libm::log(y), 1.0 / c))
        }
    };
    let gap = |p: f64| -> f64 {
        let target = params.weight_clamped(p) + epsilon;
        if target >= 1.0 {
            f64::INFINITY
        } else {
            inv(target) - p
        }
    };
    let mut best = gap(0.0);
    let grid = 20_000;
    for j in 0..=grid {
        best = best.min(gap(j as f64 / grid as f64));
    }
    for j in 0..=2_000 {
        let tail = libm::pow(10.0, -12.0 + 11.0 * j as f64 / 2_000.0);
        best = best.min(gap(tail)).min(gap(1.0 - tail));
    }
    best
}

/// Upper bound on `|v_i(U_i)|` over all joint states and actions.
pub fn payoff_bound(market: &Market) -> f64 {
    market
        .prosumers()
        .iter()
        .map(|p| {
            let spec = p.spec();
            let hi = spec.satisfaction.eval(spec.l_max as f64);
            let lo = -market.pricing().alpha * spec.d_max as f64;
            let v = p.behavior();
            v.value(hi).abs().max(v.value(lo).abs())
        })
        .fold(0.0, f64::max)
}

/// Inputs of the sub-interval length bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonInputs {
    pub epsilon: f64,
    /// Continuity modulus of the weighting function at `epsilon`.
    pub delta: f64,
    pub lambda: f64,
    pub n_players: usize,
    /// Size of the joint state space.
    pub joint_states: f64,
    /// Size of the joint action space.
    pub joint_actions: f64,
    /// Bound on `|v(U)|`.
    pub delta1: f64,
    /// Bound on the weighting function.
    pub delta2: f64,
}

impl HorizonInputs {
    /// Fills the inputs from a market; `delta` defaults to the smallest
    /// modulus over the prosumers' weighting functions.
    pub fn for_market(market: &Market, epsilon: f64, delta: Option<f64>) -> Self {
        let delta = delta.unwrap_or_else(|| {
            market.prosumers().iter().map(|p| weight_modulus(p.behavior(), epsilon)).fold(f64::INFINITY, f64::min)
        });
        HorizonInputs {
            epsilon,
            delta,
            lambda: market.prosumers().iter().map(|p| p.spec().lambda()).fold(f64::INFINITY, f64::min),
            n_players: market.len(),
            joint_states: market.prosumers().iter().map(|p| p.n_states() as f64).product(),
            joint_actions: market.prosumers().iter().map(|p| p.n_actions() as f64).product(),
            delta1: payoff_bound(market),
            delta2: 1.0,
        }
    }
}

/// `T(eps) = ceil(3 T0 D1 D2 |S||A| / eps)` with
/// `T0 = ln(min(eps, delta / N^2)) / ln(1 - lambda)`.
pub fn compute_horizon(h: &HorizonInputs) -> Result<u64> {
    if !(h.epsilon > 0.0 && h.delta > 0.0) {
        return Err(Error::InvalidParameter("epsilon and delta must be positive".into()));
    }
    if !(h.lambda > 0.0 && h.lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mixing constant lambda = {} must lie in (0, 1)",
            h.lambda
        )));
    }
    let n2 = (h.n_players * h.n_players) as f64;
    let t0 = libm::log(h.epsilon.min(h.delta / n2)) / libm::log(1.0 - h.lambda);
    let t = libm::ceil(3.0 * t0 * h.delta1 * h.delta2 * h.joint_states * h.joint_actions / h.epsilon);
    if !t.is_finite() || t > 9.0e18 {
        return Err(Error::Numerical(format!("sub-interval length {t:e} is not representable")));
    }
    Ok((t as u64).max(1))
}
