//! Best response of one prosumer against opponents playing uniformly.

use anyhow::{Context, Result};
use gridgame_core::mdp::{
    best_response_lp, policy_from_occupation, prospect_reward_from_marginals, prospect_reward_monte_carlo,
    stationary_distribution, Marginal, ProspectReward, StationaryPolicy, EXACT_ATOM_LIMIT,
};
use gridgame_core::model::Market;
use gridgame_core::Error;

use crate::config::ExperimentConfig;
use crate::output::{num, Table};

#[derive(Debug, Clone)]
pub struct ScenarioPolicy {
    pub name: String,
    pub policy: StationaryPolicy,
    pub objective: f64,
    pub reward: ProspectReward,
    /// Zero when the reward was enumerated exactly.
    pub std_err: Vec<f64>,
    pub monte_carlo: bool,
}

#[derive(Debug, Clone)]
pub struct BestResponseReport {
    /// 0-based.
    pub prosumer: usize,
    pub consume: Vec<u32>,
    pub scenarios: Vec<ScenarioPolicy>,
}

impl BestResponseReport {
    /// Expected consumption in `state` under scenario `k`.
    pub fn expected_consumption(&self, k: usize, state: usize) -> f64 {
        let p = &self.scenarios[k].policy;
        (0..p.n_actions()).map(|a| p.prob(state, a) * self.consume[a] as f64).sum()
    }
}

/// Uniform-policy state-action marginals of every prosumer.
pub fn uniform_marginals(market: &Market) -> Result<Vec<Vec<f64>>> {
    market
        .prosumers()
        .iter()
        .map(|p| {
            let pol = StationaryPolicy::uniform(p.n_states(), p.n_actions());
            let pi = stationary_distribution(&pol, p.kernel())?;
            Ok((0..p.n_states() * p.n_actions()).map(|c| pi[c / p.n_actions()] / p.n_actions() as f64).collect())
        })
        .collect()
}

pub fn compute(cfg: &ExperimentConfig) -> Result<BestResponseReport> {
    let br = cfg.best_response.as_ref().context("best_response section")?;
    let me = br.prosumer - 1;
    let mut scenarios = Vec::new();
    let mut consume = Vec::new();
    for sc in &br.scenarios {
        let market = cfg.market(sc.behavior.params("best_response.scenarios")?)?;
        let pro = market.prosumer(me);
        consume = (0..pro.n_actions()).map(|a| pro.consume(a)).collect();
        let marg = uniform_marginals(&market)?;
        let views: Vec<Marginal<'_>> = marg
            .iter()
            .zip(market.prosumers())
            .map(|(p, q)| Marginal { n_actions: q.n_actions(), p })
            .collect();
        let own = (pro.n_states(), pro.n_actions());
        let (reward, std_err, mc) =
            match prospect_reward_from_marginals(&market, me, own, &views, pro.behavior(), EXACT_ATOM_LIMIT) {
                Ok(k) => {
                    let n = k.as_slice().len();
                    (k, vec![0.0; n], false)
                }
                Err(Error::TooManyAtoms { .. }) => {
                    let r = prospect_reward_monte_carlo(&market, me, own, &views, pro.behavior(), br.mc_samples, cfg.seed)?;
                    (r.reward, r.std_err, true)
                }
                Err(e) => return Err(e.into()),
            };
        let rho = best_response_lp(&reward, pro.kernel())?;
        log::info!("best response for scenario {}: objective {}", sc.name, reward.evaluate(&rho));
        scenarios.push(ScenarioPolicy {
            name: sc.name.clone(),
            policy: policy_from_occupation(&rho),
            objective: reward.evaluate(&rho),
            reward,
            std_err,
            monte_carlo: mc,
        });
    }
    Ok(BestResponseReport { prosumer: me, consume, scenarios })
}

pub fn tables(r: &BestResponseReport) -> Vec<Table> {
    let mut policy = Table::new("best_response_policy.csv", &["scenario", "state", "action", "consume", "probability"]);
    let mut reward = Table::new("best_response_reward.csv", &["scenario", "state", "action", "k", "std_err"]);
    let mut summary = Table::new(
        "best_response_summary.csv",
        &["scenario", "prosumer", "objective", "method", "expected_consumption_state0", "max_tv_vs_first"],
    );
    for (k, sc) in r.scenarios.iter().enumerate() {
        let p = &sc.policy;
        for s in 0..p.n_states() {
            for a in 0..p.n_actions() {
                policy.push(vec![sc.name.clone(), s.to_string(), a.to_string(), r.consume[a].to_string(), num(p.prob(s, a))]);
                let idx = s * p.n_actions() + a;
                reward.push(vec![sc.name.clone(), s.to_string(), a.to_string(), num(sc.reward.get(s, a)), num(sc.std_err[idx])]);
            }
        }
        summary.push(vec![
            sc.name.clone(),
            (r.prosumer + 1).to_string(),
            num(sc.objective),
            if sc.monte_carlo { "monte-carlo" } else { "exact" }.to_string(),
            num(r.expected_consumption(k, 0)),
            num(p.max_tv_distance(&r.scenarios[0].policy)),
        ]);
    }
    vec![policy, reward, summary]
}
