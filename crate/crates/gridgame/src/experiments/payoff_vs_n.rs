//! Payoffs under uniform policies as prosumers join one at a time.

use anyhow::{Context, Result};
use gridgame_core::mdp::{
    monte_carlo_value, prospect_reward_from_marginals, Marginal, StationaryPolicy, EXACT_ATOM_LIMIT,
};
use gridgame_core::Error;

use super::best_response::uniform_marginals;
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffPoint {
    pub scenario: String,
    pub n: usize,
    /// 0-based.
    pub prosumer: usize,
    pub value: f64,
    pub std_err: f64,
    pub monte_carlo: bool,
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<PayoffPoint>> {
    let sec = cfg.payoff_vs_n.as_ref().context("payoff_vs_n section")?;
    let mut out = Vec::new();
    for sc in &sec.scenarios {
        let full = cfg.market(sc.behavior.params("payoff_vs_n.scenarios")?)?;
        for n in 1..=full.len() {
            let market = full.truncated(n);
            let marg = uniform_marginals(&market)?;
            let views: Vec<Marginal<'_>> = marg
                .iter()
                .zip(market.prosumers())
                .map(|(p, q)| Marginal { n_actions: q.n_actions(), p })
                .collect();
            for &i1 in &sec.prosumers {
                let i = i1 - 1;
                if i >= n {
                    continue;
                }
                let pro = market.prosumer(i);
                let own = (pro.n_states(), pro.n_actions());
                let point = match prospect_reward_from_marginals(&market, i, own, &views, pro.behavior(), EXACT_ATOM_LIMIT) {
                    Ok(k) => {
                        let value = k.as_slice().iter().zip(&marg[i]).map(|(k, r)| k * r).sum();
                        PayoffPoint { scenario: sc.name.clone(), n, prosumer: i, value, std_err: 0.0, monte_carlo: false }
                    }
                    Err(Error::TooManyAtoms { .. }) => {
                        let policies: Vec<StationaryPolicy> = market
                            .prosumers()
                            .iter()
                            .map(|p| StationaryPolicy::uniform(p.n_states(), p.n_actions()))
                            .collect();
                        let kernels: Vec<_> = market.prosumers().iter().map(|p| p.kernel()).collect();
                        let seed = cfg.seed ^ ((n as u64) << 32 | i as u64);
                        let v = monte_carlo_value(&market, i, &policies, &kernels, pro.behavior(), sec.mc_samples, seed)?;
                        PayoffPoint {
                            scenario: sc.name.clone(),
                            n,
                            prosumer: i,
                            value: v.value,
                            std_err: v.std_err,
                            monte_carlo: true,
                        }
                    }
                    Err(e) => return Err(e.into()),
                };
                out.push(point);
            }
        }
    }
    Ok(out)
}

pub fn tables(points: &[PayoffPoint]) -> Vec<Table> {
    let mut t = Table::new("payoff_vs_n.csv", &["scenario", "n", "prosumer", "value", "std_err", "method"]);
    for p in points {
        t.push(vec![
            p.scenario.clone(),
            p.n.to_string(),
            (p.prosumer + 1).to_string(),
            num(p.value),
            num(p.std_err),
            if p.monte_carlo { "monte-carlo" } else { "exact" }.to_string(),
        ]);
    }
    vec![t]
}
