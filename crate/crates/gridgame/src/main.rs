use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gridgame::{ConfigError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gridgame", version, about = "Prosumer energy-trading game experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-prosumer best response under EUT and PT.
    BestResponse(Args),
    /// Expected payoff as the number of prosumers grows.
    PayoffVsN(Args),
    /// Distributed epsilon-Nash learning.
    LearnNe(Args),
    /// Online allocation regret.
    Regret(Args),
    /// Per-substation allocation trace.
    AllocationTrace(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration; defaults to the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("error: kind=config field={} message={:?}", e.field, e.message);
    ExitCode::from(2)
}

fn load(experiment: Experiment, args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| ConfigError {
            field: "config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => experiment.preset().to_string(),
    };
    let mut cfg = ExperimentConfig::parse(&text)?;
    if cfg.experiment != experiment {
        return Err(ConfigError {
            field: "experiment".into(),
            message: format!("config is for `{}`, not `{}`", cfg.experiment.name(), experiment.name()),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::BestResponse(a) => (Experiment::BestResponse, a),
        Command::PayoffVsN(a) => (Experiment::PayoffVsN, a),
        Command::LearnNe(a) => (Experiment::LearnNe, a),
        Command::Regret(a) => (Experiment::Regret, a),
        Command::AllocationTrace(a) => (Experiment::AllocationTrace, a),
    };
    let cfg = match load(experiment, args) {
        Ok(cfg) => cfg,
        Err(e) => return config_error(&e),
    };
    if let Err(e) = std::fs::create_dir_all(&args.out) {
        eprintln!("error: kind=io message={:?}", format!("{}: {e}", args.out.display()));
        return ExitCode::from(1);
    }
    match gridgame::experiments::run(&cfg, &args.out) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => match e.downcast_ref::<ConfigError>() {
            Some(ce) => config_error(ce),
            None => {
                eprintln!("error: kind=runtime message={:?}", format!("{e:#}"));
                ExitCode::from(1)
            }
        },
    }
}
