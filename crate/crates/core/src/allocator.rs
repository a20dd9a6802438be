//! Online allocation of generated energy to substations.
//!
//! Each step the utility company commits to an allocation `e` in
//! `{e >= 0, sum e <= e_max}`, then observes the prosumers' demands and pays
//! `beta sum e - income + gamma sum_l (A_l - e_l)^2`, where `A_l` is the
//! aggregate demand of substation `l`. Allocations follow projected online
//! gradient descent with step `1/sqrt(t-1)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const FEAS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorConfig {
    /// Prosumer indices served by each substation.
    pub substations: Vec<Vec<usize>>,
    pub e_max: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Fairness pricing scale.
    pub alpha: f64,
    /// Allocation played at `t = 1`; defaults to `e_max / (2K)` everywhere.
    pub initial: Option<Vec<f64>>,
}

impl AllocatorConfig {
    pub fn new(substations: Vec<Vec<usize>>, e_max: f64, beta: f64, gamma: f64, alpha: f64) -> Self {
        AllocatorConfig { substations, e_max, beta, gamma, alpha, initial: None }
    }

    /// One substation per prosumer.
    pub fn one_per_prosumer(n: usize, e_max: f64, beta: f64, gamma: f64, alpha: f64) -> Self {
        Self::new((0..n).map(|i| vec![i]).collect(), e_max, beta, gamma, alpha)
    }

    pub fn k(&self) -> usize {
        self.substations.len()
    }

    pub fn n_prosumers(&self) -> usize {
        self.substations.iter().map(|b| b.len()).sum()
    }

    /// Checks that the substations partition `0..n_prosumers`.
    pub fn validate(&self) -> Result<()> {
        if self.substations.is_empty() {
            return Err(Error::InvalidParameter("at least one substation is required".into()));
        }
        let n = self.n_prosumers();
        let mut seen = vec![false; n];
        for (l, b) in self.substations.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidParameter(format!("substation {l} serves no prosumer")));
            }
            for &j in b {
                if j >= n || seen[j] {
                    return Err(Error::InvalidParameter(format!(
                        "substations must partition prosumers 0..{n}; index {j} in substation {l} is out of range or repeated"
                    )));
                }
                seen[j] = true;
            }
        }
        if !(self.e_max > 0.0) {
            return Err(Error::InvalidParameter(format!("e_max must be positive, got {}", self.e_max)));
        }
        if !(self.beta > 0.0 && self.gamma > 0.0) {
            return Err(Error::InvalidParameter("beta and gamma must be positive".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
        }
        if let Some(init) = &self.initial {
            AllocationVector::new(init.clone(), self.e_max)?;
            if init.len() != self.k() {
                return Err(Error::DimensionMismatch(format!(
                    "initial allocation has {} entries for {} substations",
                    init.len(),
                    self.k()
                )));
            }
        }
        Ok(())
    }

    /// Aggregate demand `A_l` of every substation.
    pub fn aggregate(&self, demands: &[f64]) -> Vec<f64> {
        self.substations.iter().map(|b| b.iter().map(|&j| demands[j]).sum()).collect()
    }

    pub fn initial_allocation(&self) -> AllocationVector {
        match &self.initial {
            Some(e) => AllocationVector { e: e.clone() },
            None => AllocationVector { e: vec![self.e_max / (2.0 * self.k() as f64); self.k()] },
        }
    }

    /// `H = sqrt(K) (beta + 2 gamma K D_max + 2 gamma e_max)`, with `D_max`
    /// the largest total demand cap of a substation.
    pub fn gradient_bound(&self, d_max: &[f64]) -> f64 {
        let k = self.k() as f64;
        let dm = self.aggregate(d_max).into_iter().fold(0.0, f64::max);
        libm::sqrt(k) * (self.beta + 2.0 * self.gamma * k * dm + 2.0 * self.gamma * self.e_max)
    }

    /// `(e_max^2 / 2 + H^2) sqrt(T)`.
    pub fn regret_bound(&self, d_max: &[f64], horizon: usize) -> f64 {
        let h = self.gradient_bound(d_max);
        (self.e_max * self.e_max / 2.0 + h * h) * libm::sqrt(horizon as f64)
    }
}

/// A feasible allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector {
    e: Vec<f64>,
}

impl AllocationVector {
    pub fn new(e: Vec<f64>, e_max: f64) -> Result<Self> {
        if e.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("allocation has a negative entry".into()));
        }
        let sum: f64 = e.iter().sum();
        if sum > e_max + FEAS_SLACK {
            return Err(Error::InvalidParameter(format!("allocation total {sum} exceeds cap {e_max}")));
        }
        Ok(AllocationVector { e })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }
}

/// Income `sum_i D_i p_i` under fairness pricing, zero without demand.
pub fn income(demands: &[f64], alpha: f64) -> f64 {
    let total: f64 = demands.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    alpha * demands.iter().map(|d| d * d).sum::<f64>() / total
}

pub fn cost(demands: &[f64], e: &AllocationVector, cfg: &AllocatorConfig) -> f64 {
    let agg = cfg.aggregate(demands);
    let generation: f64 = e.e.iter().sum();
    let mismatch: f64 = agg.iter().zip(&e.e).map(|(a, x)| (a - x) * (a - x)).sum();
    cfg.beta * generation - income(demands, cfg.alpha) + cfg.gamma * mismatch
}

/// `dC/de_l = beta - 2 gamma (A_l - e_l)`.
pub fn cost_gradient(demands: &[f64], e: &AllocationVector, cfg: &AllocatorConfig) -> Vec<f64> {
    cfg.aggregate(demands)
        .iter()
        .zip(&e.e)
        .map(|(a, x)| cfg.beta - 2.0 * cfg.gamma * (a - x))
        .collect()
}

/// Euclidean projection onto `{x >= 0, sum x <= e_max}`.
pub fn project(v: &[f64], e_max: f64) -> AllocationVector {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= e_max {
        return AllocationVector { e: clipped };
    }
    let mut sorted = clipped.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        acc += u;
        let t = (acc - e_max) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    AllocationVector { e: clipped.iter().map(|x| (x - theta).max(0.0)).collect() }
}

/// `e(t) = project(e(t-1) - grad C(D(t-1), e(t-1)) / sqrt(t-1))`.
pub fn step(
    prev_e: &AllocationVector,
    prev_demands: &[f64],
    t: usize,
    cfg: &AllocatorConfig,
) -> Result<AllocationVector> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!("step needs t >= 2, got {t}")));
    }
    let eta = 1.0 / libm::sqrt((t - 1) as f64);
    let g = cost_gradient(prev_demands, prev_e, cfg);
    let v: Vec<f64> = prev_e.e.iter().zip(&g).map(|(x, gi)| x - eta * gi).collect();
    Ok(project(&v, cfg.e_max))
}

/// Per-step history of the allocator together with the running sums that
/// make the hindsight comparator cheap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretLedger {
    pub cumulative_cost: f64,
    pub cost_history: Vec<f64>,
    pub demand_history: Vec<Vec<f64>>,
    pub allocation_history: Vec<AllocationVector>,
    income_sum: f64,
    agg_sum: Vec<f64>,
    agg_sq_sum: Vec<f64>,
}

impl RegretLedger {
    pub fn len(&self) -> usize {
        self.cost_history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cost_history.is_empty()
    }

    pub fn record(&mut self, demands: &[f64], e: &AllocationVector, cfg: &AllocatorConfig) -> f64 {
        let c = cost(demands, e, cfg);
        let agg = cfg.aggregate(demands);
        if self.agg_sum.is_empty() {
            self.agg_sum = vec![0.0; agg.len()];
            self.agg_sq_sum = vec![0.0; agg.len()];
        }
        for ((s, q), a) in self.agg_sum.iter_mut().zip(self.agg_sq_sum.iter_mut()).zip(&agg) {
            *s += a;
            *q += a * a;
        }
        self.income_sum += income(demands, cfg.alpha);
        self.cumulative_cost += c;
        self.cost_history.push(c);
        self.demand_history.push(demands.to_vec());
        self.allocation_history.push(e.clone());
        c
    }

    /// Best fixed allocation and its total cost from the running sums.
    pub fn comparator(&self, cfg: &AllocatorConfig) -> (AllocationVector, f64) {
        let t = self.len() as f64;
        let shift = cfg.beta / (2.0 * cfg.gamma);
        let target: Vec<f64> = self.agg_sum.iter().map(|s| s / t - shift).collect();
        let x = project(&target, cfg.e_max);
        let mut total = cfg.beta * t * x.e.iter().sum::<f64>() - self.income_sum;
        for ((s, q), xl) in self.agg_sum.iter().zip(&self.agg_sq_sum).zip(&x.e) {
            total += cfg.gamma * (q - 2.0 * xl * s + t * xl * xl);
        }
        (x, total)
    }

    /// `R_t` from the running sums.
    pub fn running_regret(&self, cfg: &AllocatorConfig) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.cumulative_cost - self.comparator(cfg).1
    }
}

/// Minimizer of `sum_t C(D(t), x)` over feasible `x`, and that minimum.
pub fn best_fixed_in_hindsight(history: &[Vec<f64>], cfg: &AllocatorConfig) -> Result<(AllocationVector, f64)> {
    if history.is_empty() {
        return Err(Error::InvalidParameter("demand history is empty".into()));
    }
    let k = cfg.k();
    let mut mean = vec![0.0; k];
    for d in history {
        for (m, a) in mean.iter_mut().zip(cfg.aggregate(d)) {
            *m += a;
        }
    }
    let shift = cfg.beta / (2.0 * cfg.gamma);
    let target: Vec<f64> = mean.iter().map(|m| m / history.len() as f64 - shift).collect();
    let x = project(&target, cfg.e_max);
    let total = history.iter().map(|d| cost(d, &x, cfg)).sum();
    Ok((x, total))
}

/// `R_T = sum_t C(D(t), e(t)) - min_x sum_t C(D(t), x)`, summed directly.
pub fn regret(ledger: &RegretLedger, cfg: &AllocatorConfig) -> Result<f64> {
    let played: f64 = ledger.cost_history.iter().sum();
    let (_, best) = best_fixed_in_hindsight(&ledger.demand_history, cfg)?;
    Ok(played - best)
}

/// One step of the online protocol as seen from outside.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub allocation: AllocationVector,
    pub cost: f64,
    pub regret: f64,
}

/// The allocator as a state machine: commit, observe demands, update.
#[derive(Debug, Clone)]
pub struct OnlineAllocator {
    cfg: AllocatorConfig,
    t: usize,
    current: AllocationVector,
    ledger: RegretLedger,
}

impl OnlineAllocator {
    pub fn new(cfg: AllocatorConfig) -> Result<Self> {
        cfg.validate()?;
        let current = cfg.initial_allocation();
        Ok(OnlineAllocator { cfg, t: 1, current, ledger: RegretLedger::default() })
    }

    /// Allocation committed for the next step.
    pub fn current(&self) -> &AllocationVector {
        &self.current
    }

    pub fn ledger(&self) -> &RegretLedger {
        &self.ledger
    }

    pub fn config(&self) -> &AllocatorConfig {
        &self.cfg
    }

    /// Charges the committed allocation against `demands` and moves on.
    pub fn observe(&mut self, demands: &[f64]) -> Result<StepRecord> {
        if demands.len() != self.cfg.n_prosumers() {
            return Err(Error::DimensionMismatch(format!(
                "{} demands for {} prosumers",
                demands.len(),
                self.cfg.n_prosumers()
            )));
        }
        if demands.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::InvalidParameter("demands must be nonnegative".into()));
        }
        let played = self.current.clone();
        let c = self.ledger.record(demands, &played, &self.cfg);
        let rec = StepRecord { t: self.t, allocation: played, cost: c, regret: self.ledger.running_regret(&self.cfg) };
        self.t += 1;
        self.current = step(&rec.allocation, demands, self.t, &self.cfg)?;
        Ok(rec)
    }
}
