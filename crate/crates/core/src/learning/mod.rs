//! Distributed learning of an approximate Nash equilibrium.
//!
//! Time is split into periods of `N r + 1` sub-intervals of length `T`.
//! At the start of each period every prosumer draws an occupation measure
//! at random from its polytope and plays the induced policy. In its own
//! block of `r` sub-intervals a prosumer tries each of its vertex policies
//! while everyone else keeps the drawn policy; the last sub-interval is
//! played by everyone with the drawn policies. A prosumer is satisfied when
//! no vertex beat the drawn policy by `epsilon` or more, and once all are
//! satisfied the drawn policies are kept forever.

mod certify;
mod estimate;
mod sampler;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::{
    enumerate_vertices, policy_from_occupation, OccupationMeasure, StationaryPolicy, DEFAULT_VERTEX_CAP,
    EXACT_ATOM_LIMIT,
};
use crate::model::Market;
use crate::{Error, Result};

pub use certify::{
    certify_epsilon_ne, compute_horizon, deviation_gaps, estimation_error, payoff_bound, weight_modulus,
    Certificate, HorizonInputs,
};
pub use estimate::{estimate_payoffs, Estimator};
pub use sampler::{chebyshev_center, PolytopeChain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationMode {
    #[default]
    ExactPropagation,
    TrajectorySampling,
}

/// How occupation measures are drawn at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolytopeSampler {
    /// Hit-and-run from the Chebyshev center (approximately uniform).
    #[default]
    HitAndRun,
    /// Random convex combination of the vertices.
    VertexMixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningConfig {
    pub epsilon: f64,
    /// Sub-interval length.
    pub horizon: usize,
    pub max_periods: usize,
    pub seed: u64,
    pub mode: EstimationMode,
    pub initial_state: usize,
    /// Restart every sub-interval from `initial_state` instead of carrying
    /// the state over.
    pub reset_per_slot: bool,
    pub sampler: PolytopeSampler,
    pub burn_in: usize,
    pub thinning: usize,
    /// Extra periods recorded after convergence.
    pub tail_periods: usize,
    pub vertex_cap: usize,
    pub atom_limit: u128,
    pub mc_samples: usize,
}

impl LearningConfig {
    pub fn new(epsilon: f64, horizon: usize, max_periods: usize, seed: u64) -> Self {
        LearningConfig {
            epsilon,
            horizon,
            max_periods,
            seed,
            mode: EstimationMode::ExactPropagation,
            initial_state: 0,
            reset_per_slot: false,
            sampler: PolytopeSampler::HitAndRun,
            burn_in: 1000,
            thinning: 100,
            tail_periods: 0,
            vertex_cap: DEFAULT_VERTEX_CAP,
            atom_limit: EXACT_ATOM_LIMIT,
            mc_samples: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.max_periods < 1 {
            return Err(Error::InvalidParameter("max_periods must be at least 1".into()));
        }
        Ok(())
    }
}

/// Which prosumer deviates in which sub-interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodSchedule {
    r: usize,
    vertex_counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// `prosumer` plays its `vertex`-th vertex policy.
    Sample { prosumer: usize, vertex: usize },
    /// A spare slot in `prosumer`'s block; everyone plays the drawn policy.
    Surplus { prosumer: usize },
    /// Final slot; everyone plays the drawn policy.
    Base,
}

impl PeriodSchedule {
    /// `r` is the largest vertex count.
    pub fn new(vertex_counts: Vec<usize>) -> Result<Self> {
        if vertex_counts.is_empty() || vertex_counts.contains(&0) {
            return Err(Error::InvalidParameter("every prosumer needs at least one vertex".into()));
        }
        let r = *vertex_counts.iter().max().expect("nonempty");
        Ok(PeriodSchedule { r, vertex_counts })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.vertex_counts.len()
    }

    pub fn vertex_counts(&self) -> &[usize] {
        &self.vertex_counts
    }

    pub fn slot_count(&self) -> usize {
        self.n() * self.r + 1
    }

    pub fn period_length(&self, horizon: usize) -> usize {
        self.slot_count() * horizon
    }

    pub fn sampling_slots(&self, prosumer: usize) -> core::ops::Range<usize> {
        prosumer * self.r..prosumer * self.r + self.vertex_counts[prosumer]
    }

    pub fn role(&self, slot: usize) -> SlotRole {
        if slot == self.n() * self.r {
            return SlotRole::Base;
        }
        let (prosumer, k) = (slot / self.r, slot % self.r);
        if k < self.vertex_counts[prosumer] {
            SlotRole::Sample { prosumer, vertex: k }
        } else {
            SlotRole::Surplus { prosumer }
        }
    }
}

/// Estimates and satisfaction bits of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcome {
    pub v_hat: Vec<f64>,
    pub v_hat_vertices: Vec<Vec<f64>>,
    pub q_bits: Vec<bool>,
    pub q_all: bool,
}

impl PeriodOutcome {
    /// `max_k v_hat_vertices[i][k] - v_hat[i]` per prosumer.
    pub fn estimated_gaps(&self) -> Vec<f64> {
        self.v_hat
            .iter()
            .zip(&self.v_hat_vertices)
            .map(|(v, vs)| vs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v)
            .collect()
    }
}

/// Plays one period. `vertex_policies[i]` lists prosumer `i`'s vertex
/// policies in schedule order.
pub fn run_period(
    market: &Market,
    m: usize,
    base: &[StationaryPolicy],
    vertex_policies: &[Vec<StationaryPolicy>],
    schedule: &PeriodSchedule,
    config: &LearningConfig,
    est: &mut Estimator,
) -> Result<PeriodOutcome> {
    let n = market.len();
    if base.len() != n || vertex_policies.len() != n || schedule.n() != n {
        return Err(Error::DimensionMismatch(format!("period {m}: inputs do not match {n} prosumers")));
    }
    for (i, vs) in vertex_policies.iter().enumerate() {
        if vs.len() != schedule.vertex_counts()[i] {
            return Err(Error::DimensionMismatch(format!(
                "prosumer {i}: {} vertex policies but schedule expects {}",
                vs.len(),
                schedule.vertex_counts()[i]
            )));
        }
    }
    let mut v_hat_vertices: Vec<Vec<f64>> = schedule.vertex_counts().iter().map(|c| vec![0.0; *c]).collect();
    let mut v_hat = vec![0.0; n];
    let all: Vec<usize> = (0..n).collect();
    for slot in 0..schedule.slot_count() {
        if config.reset_per_slot {
            est.reset();
        }
        let mut joint: Vec<&StationaryPolicy> = base.iter().collect();
        match schedule.role(slot) {
            SlotRole::Sample { prosumer, vertex } => {
                joint[prosumer] = &vertex_policies[prosumer][vertex];
                v_hat_vertices[prosumer][vertex] = est.run(market, &joint, config.horizon, &[prosumer])?[0];
            }
            SlotRole::Surplus { .. } => {
                est.run(market, &joint, config.horizon, &[])?;
            }
            SlotRole::Base => {
                v_hat = est.run(market, &joint, config.horizon, &all)?;
            }
        }
    }
    let q_bits: Vec<bool> = v_hat
        .iter()
        .zip(&v_hat_vertices)
        .map(|(v, vs)| vs.iter().all(|x| *v > *x - config.epsilon))
        .collect();
    let q_all = q_bits.iter().all(|q| *q);
    log::debug!("period {m}: q = {q_bits:?}");
    Ok(PeriodOutcome { v_hat, v_hat_vertices, q_bits, q_all })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub period: usize,
    pub outcome: PeriodOutcome,
    /// Policies were redrawn at the start of this period.
    pub resampled: bool,
    /// Policies played outside the deviation slots.
    pub policies: Vec<StationaryPolicy>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningResult {
    pub final_policies: Vec<StationaryPolicy>,
    pub final_occupations: Vec<OccupationMeasure>,
    /// Periods played before convergence, or `max_periods`.
    pub periods_used: usize,
    pub converged: bool,
    pub horizon: usize,
    pub trace: Vec<TraceRow>,
    pub vertex_counts: Vec<usize>,
}

/// Vertex occupation measures and policies of every prosumer.
pub fn vertex_sets(market: &Market, cap: usize) -> Result<Vec<(Vec<OccupationMeasure>, Vec<StationaryPolicy>)>> {
    market
        .prosumers()
        .iter()
        .map(|p| {
            let v = enumerate_vertices(p.kernel(), cap)?;
            let pols = v.iter().map(policy_from_occupation).collect();
            Ok((v, pols))
        })
        .collect()
}

/// Runs the learning protocol until every prosumer is satisfied or
/// `max_periods` periods have been played.
///
/// Without convergence the result holds the drawn policies of the period
/// with the smallest estimated worst gap.
pub fn learn_equilibrium(market: &Market, config: &LearningConfig) -> Result<LearningResult> {
    config.validate()?;
    let sets = vertex_sets(market, config.vertex_cap)?;
    let schedule = PeriodSchedule::new(sets.iter().map(|(v, _)| v.len()).collect())?;
    let vertex_policies: Vec<Vec<StationaryPolicy>> = sets.iter().map(|(_, p)| p.clone()).collect();
    let mut chains: Vec<PolytopeChain> = sets
        .iter()
        .zip(market.prosumers())
        .map(|((v, _), p)| PolytopeChain::new(p.kernel(), v, config.sampler, config.burn_in, config.thinning))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut est = Estimator::new(
        market,
        config.mode,
        config.initial_state,
        config.seed ^ 0x9e37_79b9_7f4a_7c15,
        config.atom_limit,
        config.mc_samples,
    )?;

    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<OccupationMeasure>)> = None;
    let mut converged = None;
    for m in 1..=config.max_periods {
        let occ: Vec<OccupationMeasure> = chains.iter_mut().map(|c| c.sample(&mut rng)).collect();
        let base: Vec<StationaryPolicy> = occ.iter().map(policy_from_occupation).collect();
        let outcome = run_period(market, m, &base, &vertex_policies, &schedule, config, &mut est)?;
        let worst = outcome.estimated_gaps().into_iter().fold(f64::NEG_INFINITY, f64::max);
        let q_all = outcome.q_all;
        trace.push(TraceRow { period: m, outcome, resampled: true, policies: base.clone() });
        if q_all {
            converged = Some((m, occ, base));
            break;
        }
        if best.as_ref().is_none_or(|(g, _)| worst < *g) {
            best = Some((worst, occ));
        }
    }

    let (periods_used, occ, policies, ok) = match converged {
        Some((m, occ, base)) => (m, occ, base, true),
        None => {
            let (_, occ) = best.expect("at least one period");
            let pols = occ.iter().map(policy_from_occupation).collect();
            (config.max_periods, occ, pols, false)
        }
    };
    if ok {
        for k in 1..=config.tail_periods {
            let outcome = run_period(market, periods_used + k, &policies, &vertex_policies, &schedule, config, &mut est)?;
            trace.push(TraceRow { period: periods_used + k, outcome, resampled: false, policies: policies.clone() });
        }
    } else {
        log::warn!("no equilibrium certificate after {} periods", config.max_periods);
    }
    Ok(LearningResult {
        final_policies: policies,
        final_occupations: occ,
        periods_used,
        converged: ok,
        horizon: config.horizon,
        trace,
        vertex_counts: schedule.vertex_counts().to_vec(),
    })
}

/// Restarts the protocol with a doubled sub-interval length whenever it
/// fails to converge, at most `max_restarts` times.
pub fn learn_equilibrium_doubling(market: &Market, config: &LearningConfig, max_restarts: usize) -> Result<LearningResult> {
    let mut cfg = config.clone();
    let mut result = learn_equilibrium(market, &cfg)?;
    for _ in 0..max_restarts {
        if result.converged {
            break;
        }
        cfg.horizon = cfg.horizon.checked_mul(2).ok_or_else(|| Error::Numerical("horizon overflow".into()))?;
        log::info!("restarting with sub-interval length {}", cfg.horizon);
        result = learn_equilibrium(market, &cfg)?;
    }
    Ok(result)
}
