#![allow(dead_code)]

use gridgame_core::mdp::StationaryPolicy;
use gridgame_core::model::{discretize_gaussian, JointPayoff, Market, PricingRule, ProsumerSpec, TransitionKernel};
use gridgame_core::prospect::ProspectParams;
use rand::Rng;

/// The three-prosumer instance used for learning: storage {0,1,2},
/// consumption {0,1}.
pub fn three_prosumers(behavior: ProspectParams) -> Market {
    let mu = [0.5, 0.5, 1.0];
    let sigma2 = [2.0, 1.0, 1.0];
    let tau = [1, 0, 1];
    let specs = (0..3)
        .map(|i| {
            let pmf = discretize_gaussian(mu[i], sigma2[i], 10).unwrap();
            ProsumerSpec::threshold(i + 1, 2, 1, tau[i], pmf, behavior)
        })
        .collect();
    Market::new(specs, PricingRule::new(1.0).unwrap()).unwrap()
}

pub fn pt08() -> ProspectParams {
    ProspectParams::pt(0.8, 0.5, 1.0, 0.3).unwrap()
}

pub fn random_policies(market: &Market, rng: &mut impl Rng) -> Vec<StationaryPolicy> {
    market.prosumers().iter().map(|p| StationaryPolicy::random(p.n_states(), p.n_actions(), rng)).collect()
}

/// Kernel with every entry bounded away from zero.
pub fn random_kernel(n_s: usize, n_a: usize, rng: &mut impl Rng) -> TransitionKernel {
    let raw: Vec<f64> = (0..n_s * n_a * n_s).map(|_| 0.05 + rng.random::<f64>()).collect();
    let mut norm = vec![0.0; n_a * n_s];
    for x in 0..n_s {
        for c in 0..n_a * n_s {
            norm[c] += raw[x * n_a * n_s + c];
        }
    }
    TransitionKernel::from_fn(n_s, n_a, |x, a, s| raw[(x * n_a + a) * n_s + s] / norm[a * n_s + s]).unwrap()
}

/// Payoff looked up in a random table over the joint state-action profile.
pub struct TablePayoff {
    pub dims: Vec<(usize, usize)>,
    pub table: Vec<Vec<f64>>,
}

impl TablePayoff {
    pub fn random(dims: Vec<(usize, usize)>, rng: &mut impl Rng) -> Self {
        let size: usize = dims.iter().map(|(s, a)| s * a).product();
        let table = (0..dims.len()).map(|_| (0..size).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()).collect();
        TablePayoff { dims, table }
    }

    fn index(&self, states: &[usize], actions: &[usize]) -> usize {
        self.dims.iter().enumerate().fold(0, |acc, (j, (_, n_a))| {
            acc * (self.dims[j].0 * n_a) + states[j] * n_a + actions[j]
        })
    }
}

impl JointPayoff for TablePayoff {
    fn num_players(&self) -> usize {
        self.dims.len()
    }

    fn utility(&self, me: usize, states: &[usize], actions: &[usize]) -> f64 {
        self.table[me][self.index(states, actions)]
    }
}
