//! The learning protocol on a small market, with its certificate.

use anyhow::{Context, Result};
use gridgame_core::learning::{
    certify_epsilon_ne, estimation_error, learn_equilibrium, Certificate, EstimationMode, LearningResult,
};
use gridgame_core::mdp::StationaryPolicy;
use gridgame_core::model::Market;
use gridgame_core::prospect::ProspectParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::output::{num, Table};

#[derive(Debug, Clone)]
pub struct LearnRun {
    pub label: String,
    pub result: LearningResult,
    /// Largest `|V^T - V|` over the random joint policies.
    pub estimation_error: f64,
    pub certificate: Certificate,
}

/// Largest estimation error over `count` random joint policies and the
/// profiles where everyone always plays action `k`, started from
/// `initial_state`.
pub fn measure_estimation_error(
    market: &Market,
    horizon: usize,
    mode: EstimationMode,
    initial_state: usize,
    count: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let corners = market.prosumers().iter().map(|p| p.n_actions()).max().unwrap_or(1);
    for k in 0..count + corners {
        let profile: Vec<StationaryPolicy> = market
            .prosumers()
            .iter()
            .map(|p| {
                if k < count {
                    StationaryPolicy::random(p.n_states(), p.n_actions(), &mut rng)
                } else {
                    let a = (k - count).min(p.n_actions() - 1);
                    StationaryPolicy::deterministic(&vec![a; p.n_states()], p.n_actions())
                }
            })
            .collect();
        worst = worst.max(estimation_error(market, &profile, horizon, mode, initial_state, seed ^ k as u64)?);
    }
    Ok(worst)
}

pub fn run_one(cfg: &ExperimentConfig, label: &str, behavior: ProspectParams) -> Result<LearnRun> {
    let sec = cfg.learning.as_ref().context("learning section")?;
    let market = cfg.market(behavior)?;
    let lcfg = sec.to_core(cfg.seed);
    let err = measure_estimation_error(&market, lcfg.horizon, lcfg.mode, lcfg.initial_state, sec.slack_policies, cfg.seed)?;
    let result = learn_equilibrium(&market, &lcfg)?;
    let certificate = certify_epsilon_ne(&market, &result.final_policies, lcfg.epsilon, 2.0 * err)?;
    log::info!(
        "{label}: converged={} periods={} worst gap {} (threshold {})",
        result.converged,
        result.periods_used,
        certificate.worst_gap,
        certificate.threshold
    );
    Ok(LearnRun { label: label.to_string(), result, estimation_error: err, certificate })
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<LearnRun>> {
    let sec = cfg.learning.as_ref().context("learning section")?;
    let primary = cfg.behavior.params("behavior")?;
    let mut runs = vec![run_one(cfg, if primary.is_eut() { "eut" } else { "pt" }, primary)?];
    if sec.compare_eut && !primary.is_eut() {
        runs.push(run_one(cfg, "eut", ProspectParams::Eut)?);
    }
    Ok(runs)
}

pub fn tables(cfg: &ExperimentConfig, runs: &[LearnRun]) -> Vec<Table> {
    let n = cfg.n();
    let mut header: Vec<String> = ["model", "period", "resampled", "q_all"].iter().map(|s| s.to_string()).collect();
    for prefix in ["v_hat", "q", "gap_hat"] {
        header.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    let mut trace = Table::with_header("learn_trace.csv", header);
    let mut policies = Table::new("learn_policies.csv", &["model", "prosumer", "state", "action", "probability"]);
    let mut summary = Table::new(
        "learn_summary.csv",
        &[
            "model",
            "converged",
            "periods_used",
            "horizon",
            "estimation_error",
            "certificate_threshold",
            "worst_gap",
            "certified",
        ],
    );
    for run in runs {
        for row in &run.result.trace {
            let o = &row.outcome;
            let mut cells = vec![
                run.label.clone(),
                row.period.to_string(),
                (row.resampled as u8).to_string(),
                (o.q_all as u8).to_string(),
            ];
            cells.extend(o.v_hat.iter().map(|v| num(*v)));
            cells.extend(o.q_bits.iter().map(|q| (*q as u8).to_string()));
            cells.extend(o.estimated_gaps().iter().map(|g| num(*g)));
            trace.push(cells);
        }
        for (i, p) in run.result.final_policies.iter().enumerate() {
            for s in 0..p.n_states() {
                for a in 0..p.n_actions() {
                    policies.push(vec![run.label.clone(), (i + 1).to_string(), s.to_string(), a.to_string(), num(p.prob(s, a))]);
                }
            }
        }
        summary.push(vec![
            run.label.clone(),
            (run.result.converged as u8).to_string(),
            run.result.periods_used.to_string(),
            run.result.horizon.to_string(),
            num(run.estimation_error),
            num(run.certificate.threshold),
            num(run.certificate.worst_gap),
            (run.certificate.holds as u8).to_string(),
        ]);
    }
    vec![trace, policies, summary]
}
