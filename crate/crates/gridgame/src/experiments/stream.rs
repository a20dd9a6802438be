//! Demand streams faced by the allocator.

use anyhow::{Context, Result};
use gridgame_core::learning::{learn_equilibrium, vertex_sets, PeriodSchedule, SlotRole};
use gridgame_core::mdp::StationaryPolicy;
use gridgame_core::model::Market;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, StreamKind};

#[derive(Debug, Clone, PartialEq)]
pub struct DemandStream {
    /// `demands[t][i]`.
    pub demands: Vec<Vec<f64>>,
    /// Whether step `t` was played while the prosumers were still learning.
    pub learning: Vec<bool>,
    /// Demand cap of every prosumer.
    pub d_max: Vec<f64>,
}

impl DemandStream {
    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

fn draw(rng: &mut impl Rng, probs: impl Iterator<Item = f64>) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        if p > 0.0 {
            last = i;
        }
        if u < acc {
            return i;
        }
    }
    last
}

/// Simulates one sample path of the market under a time-varying joint
/// policy and records every prosumer's demand.
pub fn simulate<'a>(
    market: &Market,
    steps: usize,
    initial_state: usize,
    seed: u64,
    mut policy_at: impl FnMut(usize) -> Vec<&'a StationaryPolicy>,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = market.len();
    let mut states = vec![initial_state; n];
    let mut actions = vec![0usize; n];
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let joint = policy_at(t);
        for j in 0..n {
            actions[j] = draw(&mut rng, joint[j].row(states[j]).iter().copied());
        }
        out.push(market.demands(&states, &actions).into_iter().map(f64::from).collect());
        for j in 0..n {
            let pro = market.prosumer(j);
            let (s, a) = (states[j], actions[j]);
            states[j] = draw(&mut rng, (0..pro.n_states()).map(|x| pro.kernel().prob(x, a, s)));
        }
    }
    out
}

pub fn build(cfg: &ExperimentConfig) -> Result<DemandStream> {
    let sec = cfg.stream.as_ref().context("stream section")?;
    let market = cfg.market(cfg.behavior.params("behavior")?)?;
    let d_max: Vec<f64> = market.prosumers().iter().map(|p| p.spec().d_max as f64).collect();
    match sec.kind {
        StreamKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let demands = (0..sec.steps)
                .map(|_| d_max.iter().map(|d| rng.random_range(0..=*d as u32) as f64).collect())
                .collect();
            Ok(DemandStream { demands, learning: vec![false; sec.steps], d_max })
        }
        StreamKind::Game => {
            let lsec = cfg.learning.as_ref().context("learning section")?;
            let lcfg = lsec.to_core(cfg.seed);
            let result = learn_equilibrium(&market, &lcfg)?;
            let vertex_policies: Vec<Vec<StationaryPolicy>> =
                vertex_sets(&market, lcfg.vertex_cap)?.into_iter().map(|(_, p)| p).collect();
            let schedule = PeriodSchedule::new(result.vertex_counts.clone())?;
            let period_len = schedule.period_length(lcfg.horizon);
            let learning_periods: Vec<&Vec<StationaryPolicy>> =
                result.trace.iter().filter(|r| r.resampled).map(|r| &r.policies).collect();
            let learning_steps = learning_periods.len() * period_len;
            let demands = simulate(&market, sec.steps, lcfg.initial_state, cfg.seed ^ 0x5eed, |t| {
                if t >= learning_steps {
                    return result.final_policies.iter().collect();
                }
                let base = learning_periods[t / period_len];
                let mut joint: Vec<&StationaryPolicy> = base.iter().collect();
                if let SlotRole::Sample { prosumer, vertex } = schedule.role((t % period_len) / lcfg.horizon) {
                    joint[prosumer] = &vertex_policies[prosumer][vertex];
                }
                joint
            });
            let learning = (0..sec.steps).map(|t| t < learning_steps).collect();
            Ok(DemandStream { demands, learning, d_max })
        }
    }
}
