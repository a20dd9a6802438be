//! One module per experiment. `run` dispatches on the configured
//! experiment and returns the files it wrote.

pub mod allocation;
pub mod best_response;
pub mod learn_ne;
pub mod payoff_vs_n;
pub mod stream;

use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::config::{Experiment, ExperimentConfig};

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let tables = match cfg.experiment {
        Experiment::BestResponse => best_response::tables(&best_response::compute(cfg)?),
        Experiment::PayoffVsN => payoff_vs_n::tables(&payoff_vs_n::compute(cfg)?),
        Experiment::LearnNe => learn_ne::tables(cfg, &learn_ne::compute(cfg)?),
        Experiment::Regret => allocation::regret_tables(&allocation::compute(cfg)?),
        Experiment::AllocationTrace => allocation::trace_tables(&allocation::compute(cfg)?),
    };
    tables.iter().map(|t| t.write(out)).collect()
}
