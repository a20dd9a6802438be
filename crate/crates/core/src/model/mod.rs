//! Physical and economic primitives of the prosumer game.

mod kernel;
mod pmf;

use alloc::format;
use alloc::vec::Vec;

pub use kernel::{build_kernel, TransitionKernel};
pub use pmf::{discretize_gaussian, GenPmf};

use crate::prospect::ProspectParams;
use crate::{Error, Result};

/// Next storage level `min([state + gen + demand - consume]^+, s_max)`.
#[inline]
pub fn step_storage(state: i64, gen: i64, demand: i64, consume: i64, s_max: i64) -> i64 {
    (state + gen + demand - consume).clamp(0, s_max)
}

/// Threshold demand `[tau + consume - state]^+`, capped at `d_max`.
#[inline]
pub fn demand_threshold(tau: u32, consume: u32, state: u32, d_max: u32) -> u32 {
    (tau + consume).saturating_sub(state).min(d_max)
}

/// Fairness pricing: each prosumer pays `alpha * D_i / sum_j D_j` per unit.
/// With zero total demand every price is zero.
pub fn price_fairness(demands: &[u32], alpha: f64) -> Vec<f64> {
    let total: u64 = demands.iter().map(|&d| d as u64).sum();
    demands
        .iter()
        .map(|&d| if total == 0 { 0.0 } else { alpha * d as f64 / total as f64 })
        .collect()
}

/// Price scale of the fairness rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingRule {
    pub alpha: f64,
}

impl PricingRule {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("price scale alpha = {alpha} must be positive")));
        }
        Ok(PricingRule { alpha })
    }

    /// Total payment `D_i * p_i(D)` of a prosumer demanding `own` out of an
    /// aggregate `total` (which includes `own`).
    #[inline]
    pub fn payment(&self, own: u32, total: u64) -> f64 {
        if total == 0 {
            0.0
        } else {
            let d = own as f64;
            d * self.alpha * d / total as f64
        }
    }
}

/// Satisfaction from consuming energy. Must be increasing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Satisfaction {
    /// `f(x) = ln(1 + x)`.
    #[default]
    Log1p,
    /// `f(x) = slope * x`.
    Linear { slope: f64 },
}

impl Satisfaction {
    #[inline]
    pub fn eval(&self, consume: f64) -> f64 {
        match *self {
            Satisfaction::Log1p => libm::log1p(consume),
            Satisfaction::Linear { slope } => slope * consume,
        }
    }
}

/// `f(consume) - demand * p_i(all demands)`.
pub fn instantaneous_payoff(
    own: Action,
    all_demands: &[u32],
    pricing: &PricingRule,
    satisfaction: &Satisfaction,
) -> f64 {
    let total: u64 = all_demands.iter().map(|&d| d as u64).sum();
    satisfaction.eval(own.consume as f64) - pricing.payment(own.demand, total)
}

/// One prosumer's decision for a time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub consume: u32,
    pub demand: u32,
}

/// How a prosumer's demand is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemandMode {
    /// Demand follows the threshold rule, so the only choice is consumption.
    #[default]
    Threshold,
    /// Consumption and demand are chosen independently.
    Free,
}

/// Enumeration of a prosumer's action indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    mode: DemandMode,
    l_max: u32,
    d_max: u32,
    tau: u32,
}

impl ActionSpace {
    pub fn n_actions(&self) -> usize {
        match self.mode {
            DemandMode::Threshold => self.l_max as usize + 1,
            DemandMode::Free => (self.l_max as usize + 1) * (self.d_max as usize + 1),
        }
    }

    /// The concrete action behind `index` when the storage level is `state`.
    pub fn action(&self, state: u32, index: usize) -> Action {
        match self.mode {
            DemandMode::Threshold => {
                let consume = index as u32;
                Action { consume, demand: demand_threshold(self.tau, consume, state, self.d_max) }
            }
            DemandMode::Free => {
                let width = self.d_max as usize + 1;
                Action { consume: (index / width) as u32, demand: (index % width) as u32 }
            }
        }
    }
}

/// Static description of one prosumer.
#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerSpec {
    pub id: usize,
    /// Storage capacity; states are `0..=s_max`.
    pub s_max: u32,
    pub l_max: u32,
    pub d_max: u32,
    pub gen_pmf: GenPmf,
    /// Internal threshold used by the threshold demand rule.
    pub tau: u32,
    pub satisfaction: Satisfaction,
    pub behavior: ProspectParams,
    pub demand_mode: DemandMode,
}

impl ProsumerSpec {
    /// Threshold-demand prosumer with `d_max = tau + l_max`, so the demand
    /// cap never binds.
    pub fn threshold(
        id: usize,
        s_max: u32,
        l_max: u32,
        tau: u32,
        gen_pmf: GenPmf,
        behavior: ProspectParams,
    ) -> Self {
        ProsumerSpec {
            id,
            s_max,
            l_max,
            d_max: tau + l_max,
            gen_pmf,
            tau,
            satisfaction: Satisfaction::Log1p,
            behavior,
            demand_mode: DemandMode::Threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_max < 1 {
            return Err(Error::InvalidParameter(format!("prosumer {}: s_max must be >= 1", self.id)));
        }
        if self.l_max < 1 {
            return Err(Error::InvalidParameter(format!("prosumer {}: l_max must be >= 1", self.id)));
        }
        if self.tau > self.s_max {
            return Err(Error::InvalidParameter(format!(
                "prosumer {}: threshold {} exceeds capacity {}",
                self.id, self.tau, self.s_max
            )));
        }
        if let Satisfaction::Linear { slope } = self.satisfaction {
            if !(slope > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "prosumer {}: satisfaction slope must be positive",
                    self.id
                )));
            }
        }
        self.behavior.validate()
    }

    pub fn n_states(&self) -> usize {
        self.s_max as usize + 1
    }

    pub fn action_space(&self) -> ActionSpace {
        ActionSpace { mode: self.demand_mode, l_max: self.l_max, d_max: self.d_max, tau: self.tau }
    }

    pub fn build_kernel(&self) -> Result<TransitionKernel> {
        build_kernel(self.s_max, &self.action_space(), &self.gen_pmf)
    }

    pub fn lambda(&self) -> f64 {
        self.gen_pmf.lambda(self.s_max)
    }
}

/// A validated prosumer with its action tables and transition kernel.
#[derive(Debug, Clone)]
pub struct Prosumer {
    spec: ProsumerSpec,
    consume: Vec<u32>,
    /// Indexed `state * n_actions + action`.
    demand: Vec<u32>,
    kernel: TransitionKernel,
}

impl Prosumer {
    pub fn new(spec: ProsumerSpec) -> Result<Self> {
        spec.validate()?;
        let space = spec.action_space();
        let (n_s, n_a) = (spec.n_states(), space.n_actions());
        let mut consume = Vec::with_capacity(n_a);
        let mut demand = Vec::with_capacity(n_s * n_a);
        for s in 0..n_s {
            for a in 0..n_a {
                let act = space.action(s as u32, a);
                if s == 0 {
                    consume.push(act.consume);
                }
                demand.push(act.demand);
            }
        }
        let kernel = spec.build_kernel()?;
        if spec.lambda() <= 0.0 {
            log::warn!(
                "prosumer {}: generation pmf gives zero mass to some |k| <= {}; \
                 stationary distributions may not be unique",
                spec.id,
                spec.s_max
            );
        }
        Ok(Prosumer { spec, consume, demand, kernel })
    }

    pub fn spec(&self) -> &ProsumerSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn n_states(&self) -> usize {
        self.kernel.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.kernel.n_actions()
    }

    pub fn behavior(&self) -> &ProspectParams {
        &self.spec.behavior
    }

    #[inline]
    pub fn consume(&self, action: usize) -> u32 {
        self.consume[action]
    }

    #[inline]
    pub fn demand(&self, state: usize, action: usize) -> u32 {
        self.demand[state * self.n_actions() + action]
    }
}

/// Payoff of one player as a function of the joint state and joint action.
pub trait JointPayoff {
    fn num_players(&self) -> usize;

    fn utility(&self, me: usize, states: &[usize], actions: &[usize]) -> f64;
}

/// Prosumers trading under the fairness pricing rule.
#[derive(Debug, Clone)]
pub struct Market {
    prosumers: Vec<Prosumer>,
    pricing: PricingRule,
}

impl Market {
    pub fn new(specs: Vec<ProsumerSpec>, pricing: PricingRule) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidParameter("market needs at least one prosumer".into()));
        }
        let prosumers = specs.into_iter().map(Prosumer::new).collect::<Result<Vec<_>>>()?;
        Ok(Market { prosumers, pricing })
    }

    pub fn prosumers(&self) -> &[Prosumer] {
        &self.prosumers
    }

    pub fn prosumer(&self, i: usize) -> &Prosumer {
        &self.prosumers[i]
    }

    pub fn pricing(&self) -> &PricingRule {
        &self.pricing
    }

    pub fn len(&self) -> usize {
        self.prosumers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prosumers.is_empty()
    }

    /// Market restricted to the first `n` prosumers.
    pub fn truncated(&self, n: usize) -> Market {
        Market { prosumers: self.prosumers[..n].to_vec(), pricing: self.pricing }
    }

    /// Replaces one prosumer's behaviour model.
    pub fn with_behavior(&self, i: usize, behavior: ProspectParams) -> Result<Market> {
        let mut out = self.clone();
        let mut spec = out.prosumers[i].spec.clone();
        spec.behavior = behavior;
        out.prosumers[i] = Prosumer::new(spec)?;
        Ok(out)
    }

    /// Demands of every prosumer at a joint state and action.
    pub fn demands(&self, states: &[usize], actions: &[usize]) -> Vec<u32> {
        self.prosumers
            .iter()
            .enumerate()
            .map(|(j, p)| p.demand(states[j], actions[j]))
            .collect()
    }
}

impl JointPayoff for Market {
    fn num_players(&self) -> usize {
        self.prosumers.len()
    }

    #[inline]
    fn utility(&self, me: usize, states: &[usize], actions: &[usize]) -> f64 {
        let mut total = 0u64;
        for (j, p) in self.prosumers.iter().enumerate() {
            total += p.demand(states[j], actions[j]) as u64;
        }
        let p = &self.prosumers[me];
        let own = p.demand(states[me], actions[me]);
        p.spec.satisfaction.eval(p.consume(actions[me]) as f64) - self.pricing.payment(own, total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn storage_examples() {
        assert_eq!(step_storage(2, 1, 0, 1, 3), 2);
        assert_eq!(step_storage(0, -2, 1, 0, 3), 0);
        assert_eq!(step_storage(3, 5, 0, 0, 3), 3);
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(demand_threshold(1, 2, 1, 10), 2);
        assert_eq!(demand_threshold(0, 0, 3, 10), 0);
        assert_eq!(demand_threshold(2, 1, 0, 10), 3);
        assert_eq!(demand_threshold(2, 1, 0, 2), 2);
    }

    #[test]
    fn fairness_examples() {
        assert_eq!(price_fairness(&[2, 1, 1], 1.0), vec![0.5, 0.25, 0.25]);
        assert_eq!(price_fairness(&[0, 0, 0], 1.0), vec![0.0, 0.0, 0.0]);
        assert_eq!(price_fairness(&[3, 0], 2.0), vec![2.0, 0.0]);
        assert!(PricingRule::new(0.0).is_err());
    }

    #[test]
    fn payoff_examples() {
        let pricing = PricingRule::new(1.0).unwrap();
        // D = (2, 2): price 0.5, payment 1.
        let u = instantaneous_payoff(Action { consume: 1, demand: 2 }, &[2, 2], &pricing, &Satisfaction::Log1p);
        assert_abs_diff_eq!(u, core::f64::consts::LN_2 - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u, -0.30685281944005466, epsilon = 1e-15);
        let zero = instantaneous_payoff(Action { consume: 0, demand: 0 }, &[0, 5, 7], &pricing, &Satisfaction::Log1p);
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn identity_kernel_for_point_mass_generation() {
        let spec = ProsumerSpec {
            demand_mode: DemandMode::Free,
            ..ProsumerSpec::threshold(0, 3, 1, 0, GenPmf::point(0), ProspectParams::Eut)
        };
        let k = spec.build_kernel().unwrap();
        // Action index 0 is (consume 0, demand 0).
        for s in 0..4 {
            assert_eq!(k.prob(s, 0, s), 1.0);
        }
    }

    #[test]
    fn two_point_generation_clips_at_zero() {
        let pmf = GenPmf::new(vec![(-1, 0.5), (1, 0.5)]).unwrap();
        let spec = ProsumerSpec {
            demand_mode: DemandMode::Free,
            ..ProsumerSpec::threshold(0, 3, 1, 0, pmf, ProspectParams::Eut)
        };
        let k = spec.build_kernel().unwrap();
        assert_eq!(k.prob(0, 0, 0), 0.5);
        assert_eq!(k.prob(1, 0, 0), 0.5);
    }

    #[test]
    fn spec_validation() {
        let base = ProsumerSpec::threshold(0, 3, 2, 1, GenPmf::point(0), ProspectParams::Eut);
        assert!(base.validate().is_ok());
        assert!(ProsumerSpec { tau: 4, ..base.clone() }.validate().is_err());
        assert!(ProsumerSpec { s_max: 0, tau: 0, ..base.clone() }.validate().is_err());
        assert!(ProsumerSpec { l_max: 0, ..base }.validate().is_err());
    }

    #[test]
    fn market_utility_matches_direct_payoff() {
        let specs = (0..3)
            .map(|i| ProsumerSpec::threshold(i, 2, 1, i as u32 % 3, GenPmf::point(0), ProspectParams::Eut))
            .collect();
        let m = Market::new(specs, PricingRule::new(1.0).unwrap()).unwrap();
        let (states, actions) = ([0usize, 1, 2], [1usize, 0, 1]);
        let demands = m.demands(&states, &actions);
        assert_eq!(demands, vec![1, 0, 1]);
        let direct = instantaneous_payoff(
            Action { consume: 1, demand: 1 },
            &demands,
            m.pricing(),
            &Satisfaction::Log1p,
        );
        assert_abs_diff_eq!(m.utility(0, &states, &actions), direct, epsilon = 1e-15);
    }
}
