//! The online allocator against a demand stream.

use anyhow::Result;
use gridgame_core::allocator::{AllocatorConfig, OnlineAllocator, StepRecord};

use super::stream::{self, DemandStream};
use crate::config::ExperimentConfig;
use crate::output::{num, Table};

#[derive(Debug, Clone)]
pub struct AllocationRun {
    pub config: AllocatorConfig,
    pub stream: DemandStream,
    pub records: Vec<StepRecord>,
    /// Best fixed allocation over the whole stream.
    pub x_star: Vec<f64>,
    pub final_regret: f64,
    pub bound: f64,
}

impl AllocationRun {
    pub fn average_regret_at(&self, t: usize) -> f64 {
        self.records[t - 1].regret / t as f64
    }

    /// Mean and variance of substation `l`'s allocation over the steps for
    /// which `pick` holds.
    pub fn allocation_moments(&self, l: usize, pick: impl Fn(usize) -> bool) -> (f64, f64) {
        let xs: Vec<f64> =
            self.records.iter().enumerate().filter(|(t, _)| pick(*t)).map(|(_, r)| r.allocation.as_slice()[l]).collect();
        if xs.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        (m, v)
    }
}

pub fn run_stream(config: AllocatorConfig, stream: DemandStream) -> Result<AllocationRun> {
    let mut alloc = OnlineAllocator::new(config.clone())?;
    let records = stream.demands.iter().map(|d| alloc.observe(d)).collect::<Result<Vec<_>, _>>()?;
    let (x, _) = alloc.ledger().comparator(&config);
    let final_regret = gridgame_core::allocator::regret(alloc.ledger(), &config)?;
    let bound = config.regret_bound(&stream.d_max, stream.len());
    Ok(AllocationRun { config, stream, records, x_star: x.as_slice().to_vec(), final_regret, bound })
}

pub fn compute(cfg: &ExperimentConfig) -> Result<AllocationRun> {
    let acfg = cfg.allocator_config()?;
    let stream = stream::build(cfg)?;
    run_stream(acfg, stream)
}

pub fn regret_tables(run: &AllocationRun) -> Vec<Table> {
    let k = run.config.k();
    let mut header: Vec<String> = vec!["t".into(), "learning".into()];
    header.extend((1..=k).map(|l| format!("demand_{l}")));
    header.extend((1..=k).map(|l| format!("allocation_{l}")));
    header.extend(["cost", "regret", "average_regret"].iter().map(|s| s.to_string()));
    let mut steps = Table::with_header("regret.csv", header);
    for (r, (d, learning)) in run.records.iter().zip(run.stream.demands.iter().zip(&run.stream.learning)) {
        let mut cells = vec![r.t.to_string(), (*learning as u8).to_string()];
        cells.extend(run.config.aggregate(d).iter().map(|a| num(*a)));
        cells.extend(r.allocation.as_slice().iter().map(|e| num(*e)));
        cells.push(num(r.cost));
        cells.push(num(r.regret));
        cells.push(num(r.regret / r.t as f64));
        steps.push(cells);
    }
    let mut summary = Table::new("regret_summary.csv", &["key", "value"]);
    let t = run.records.len();
    summary.push(vec!["steps".into(), t.to_string()]);
    summary.push(vec!["final_regret".into(), num(run.final_regret)]);
    summary.push(vec!["regret_bound".into(), num(run.bound)]);
    summary.push(vec!["gradient_bound".into(), num(run.config.gradient_bound(&run.stream.d_max))]);
    if t >= 100 {
        summary.push(vec!["average_regret_at_100".into(), num(run.average_regret_at(100))]);
    }
    summary.push(vec![format!("average_regret_at_{t}"), num(run.average_regret_at(t))]);
    for (l, x) in run.x_star.iter().enumerate() {
        summary.push(vec![format!("x_star_{}", l + 1), num(*x)]);
    }
    vec![steps, summary]
}

pub fn trace_tables(run: &AllocationRun) -> Vec<Table> {
    let mut trace = Table::new("allocation.csv", &["t", "learning", "substation", "demand", "allocation"]);
    for (r, (d, learning)) in run.records.iter().zip(run.stream.demands.iter().zip(&run.stream.learning)) {
        for (l, (a, e)) in run.config.aggregate(d).iter().zip(r.allocation.as_slice()).enumerate() {
            trace.push(vec![r.t.to_string(), (*learning as u8).to_string(), (l + 1).to_string(), num(*a), num(*e)]);
        }
    }
    let mut summary = Table::new(
        "allocation_summary.csv",
        &["substation", "x_star", "mean_learning", "variance_learning", "mean_after", "variance_after"],
    );
    let learning = &run.stream.learning;
    for l in 0..run.config.k() {
        let (m0, v0) = run.allocation_moments(l, |t| learning[t]);
        let (m1, v1) = run.allocation_moments(l, |t| !learning[t]);
        summary.push(vec![(l + 1).to_string(), num(run.x_star[l]), num(m0), num(v0), num(m1), num(v1)]);
    }
    vec![trace, summary]
}
