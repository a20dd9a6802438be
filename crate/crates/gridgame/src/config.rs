//! Experiment configuration files.
//!
//! Prosumer and allocator indices in configuration files are 1-based, as in
//! the usual numbering of prosumers; they are converted to 0-based indices
//! when the core types are built.

use gridgame_core::allocator::AllocatorConfig;
use gridgame_core::learning::{EstimationMode, LearningConfig, PolytopeSampler};
use gridgame_core::model::{discretize_gaussian, DemandMode, Market, PricingRule, ProsumerSpec, Satisfaction};
use gridgame_core::prospect::ProspectParams;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    BestResponse,
    PayoffVsN,
    LearnNe,
    Regret,
    AllocationTrace,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BestResponse => "best-response",
            Experiment::PayoffVsN => "payoff-vs-n",
            Experiment::LearnNe => "learn-ne",
            Experiment::Regret => "regret",
            Experiment::AllocationTrace => "allocation-trace",
        }
    }

    /// Checked-in configuration reproducing the corresponding figure.
    pub fn preset(self) -> &'static str {
        match self {
            Experiment::BestResponse => include_str!("../presets/best-response.toml"),
            Experiment::PayoffVsN => include_str!("../presets/payoff-vs-n.toml"),
            Experiment::LearnNe => include_str!("../presets/learn-ne.toml"),
            Experiment::Regret => include_str!("../presets/regret.toml"),
            Experiment::AllocationTrace => include_str!("../presets/allocation-trace.toml"),
        }
    }
}

/// A configuration problem pinned to the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub market: MarketConfig,
    #[serde(default)]
    pub behavior: BehaviorConfig,
    pub learning: Option<LearningSection>,
    pub best_response: Option<BestResponseSection>,
    pub payoff_vs_n: Option<PayoffVsNSection>,
    pub allocator: Option<AllocatorSection>,
    pub stream: Option<StreamSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub alpha: f64,
    pub s_max: u32,
    pub l_max: u32,
    #[serde(default = "default_support_bound")]
    pub support_bound: u32,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub tau: Vec<u32>,
    /// Demand caps; default `tau + l_max`.
    pub d_max: Option<Vec<u32>>,
    #[serde(default)]
    pub satisfaction: SatisfactionConfig,
    #[serde(default)]
    pub demand_mode: DemandModeConfig,
}

fn default_support_bound() -> u32 {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SatisfactionConfig {
    #[default]
    Log1p,
    Linear { slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemandModeConfig {
    #[default]
    Threshold,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum BehaviorConfig {
    #[default]
    Eut,
    Pt { c: f64, c1: f64, c2: f64, c3: f64 },
}

impl BehaviorConfig {
    pub fn params(self, field: &str) -> Result<ProspectParams, ConfigError> {
        match self {
            BehaviorConfig::Eut => Ok(ProspectParams::Eut),
            BehaviorConfig::Pt { c, c1, c2, c3 } => {
                ProspectParams::pt(c, c1, c2, c3).map_err(|e| bad(field, e.to_string()))
            }
        }
    }
}

/// A behaviour model with a label used in output files.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    pub name: String,
    pub behavior: BehaviorConfig,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Eut,
    Pt,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    model: ModelKind,
    c: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = String;

    fn try_from(r: RawScenario) -> Result<Self, String> {
        let behavior = match (r.model, r.c, r.c1, r.c2, r.c3) {
            (ModelKind::Eut, None, None, None, None) => BehaviorConfig::Eut,
            (ModelKind::Eut, ..) => return Err(format!("scenario `{}`: eut takes no c, c1, c2, c3", r.name)),
            (ModelKind::Pt, Some(c), Some(c1), Some(c2), Some(c3)) => BehaviorConfig::Pt { c, c1, c2, c3 },
            (ModelKind::Pt, ..) => return Err(format!("scenario `{}`: pt needs c, c1, c2 and c3", r.name)),
        };
        Ok(Scenario { name: r.name, behavior })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    #[default]
    ExactPropagation,
    TrajectorySampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerConfig {
    #[default]
    HitAndRun,
    VertexMixture,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningSection {
    pub epsilon: f64,
    pub horizon: usize,
    pub max_periods: usize,
    #[serde(default)]
    pub mode: ModeConfig,
    #[serde(default)]
    pub initial_state: usize,
    #[serde(default)]
    pub reset_per_slot: bool,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    #[serde(default)]
    pub tail_periods: usize,
    /// Random joint policies used to measure the estimation slack.
    #[serde(default = "default_slack_policies")]
    pub slack_policies: usize,
    /// Also run the learning protocol with every prosumer under EUT.
    #[serde(default)]
    pub compare_eut: bool,
}

fn default_burn_in() -> usize {
    1000
}

fn default_thinning() -> usize {
    100
}

fn default_slack_policies() -> usize {
    100
}

impl LearningSection {
    pub fn to_core(&self, seed: u64) -> LearningConfig {
        let mut cfg = LearningConfig::new(self.epsilon, self.horizon, self.max_periods, seed);
        cfg.mode = match self.mode {
            ModeConfig::ExactPropagation => EstimationMode::ExactPropagation,
            ModeConfig::TrajectorySampling => EstimationMode::TrajectorySampling,
        };
        cfg.initial_state = self.initial_state;
        cfg.reset_per_slot = self.reset_per_slot;
        cfg.sampler = match self.sampler {
            SamplerConfig::HitAndRun => PolytopeSampler::HitAndRun,
            SamplerConfig::VertexMixture => PolytopeSampler::VertexMixture,
        };
        cfg.burn_in = self.burn_in;
        cfg.thinning = self.thinning;
        cfg.tail_periods = self.tail_periods;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestResponseSection {
    /// 1-based index of the responding prosumer.
    pub prosumer: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    pub scenarios: Vec<Scenario>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffVsNSection {
    /// 1-based indices of the prosumers whose payoffs are reported.
    pub prosumers: Vec<usize>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    pub scenarios: Vec<Scenario>,
}

fn default_mc_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocatorSection {
    pub e_max: f64,
    pub beta: f64,
    pub gamma: f64,
    /// 1-based prosumer indices per substation; default one per prosumer.
    pub substations: Option<Vec<Vec<usize>>>,
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    /// Demands realized by the prosumers while they run the learning
    /// protocol, then play its final policies.
    #[default]
    Game,
    /// Independent uniform integer demands in `0..=d_max`.
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSection {
    #[serde(default)]
    pub kind: StreamKind,
    pub steps: usize,
}

/// Dotted key path of the entry around byte `at`, recovered from the nearest
/// table header and the key on the same line.
fn locate(text: &str, at: usize) -> String {
    let head = &text[..at.min(text.len())];
    let line_start = head.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let table = head[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').to_string());
    let key = line.split_once('=').map(|(k, _)| k.trim().to_string()).filter(|k| !k.is_empty() && !k.starts_with('['));
    match (table, key) {
        (Some(t), Some(k)) => format!("{t}.{k}"),
        (Some(t), None) => t,
        (None, Some(k)) => k,
        (None, None) => format!("line {}", head.matches('\n').count() + 1),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let field = e.span().map(|s| locate(text, s.start)).unwrap_or_else(|| "file".into());
            bad(&field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn n(&self) -> usize {
        self.market.mu.len()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.market;
        let n = m.mu.len();
        if n == 0 {
            return Err(bad("market.mu", "at least one prosumer is required"));
        }
        let lens = [("market.sigma2", m.sigma2.len()), ("market.tau", m.tau.len())];
        for (field, len) in lens {
            if len != n {
                return Err(bad(field, format!("expected {n} entries (one per prosumer, as in market.mu), found {len}")));
            }
        }
        if let Some(d) = &m.d_max {
            if d.len() != n {
                return Err(bad("market.d_max", format!("expected {n} entries, found {}", d.len())));
            }
        }
        if m.support_bound < m.s_max {
            return Err(bad("market.support_bound", format!("must be at least s_max = {}", m.s_max)));
        }
        if let Some(i) = m.sigma2.iter().position(|v| v.is_nan() || *v <= 0.0) {
            return Err(bad("market.sigma2", format!("entry {} must be positive", i + 1)));
        }
        if let Some(i) = m.tau.iter().position(|t| *t > m.s_max) {
            return Err(bad("market.tau", format!("entry {} exceeds s_max = {}", i + 1, m.s_max)));
        }
        self.behavior.params("behavior")?;
        match self.experiment {
            Experiment::BestResponse => {
                let br = self.best_response.as_ref().ok_or_else(|| bad("best_response", "section is required"))?;
                if br.prosumer == 0 || br.prosumer > n {
                    return Err(bad("best_response.prosumer", format!("must be between 1 and {n}")));
                }
                check_scenarios("best_response.scenarios", &br.scenarios)?;
                if br.mc_samples < 2 {
                    return Err(bad("best_response.mc_samples", "must be at least 2"));
                }
            }
            Experiment::PayoffVsN => {
                let p = self.payoff_vs_n.as_ref().ok_or_else(|| bad("payoff_vs_n", "section is required"))?;
                if let Some(i) = p.prosumers.iter().find(|i| **i == 0 || **i > n) {
                    return Err(bad("payoff_vs_n.prosumers", format!("index {i} is outside 1..={n}")));
                }
                check_scenarios("payoff_vs_n.scenarios", &p.scenarios)?;
                if p.mc_samples < 2 {
                    return Err(bad("payoff_vs_n.mc_samples", "must be at least 2"));
                }
            }
            Experiment::LearnNe => {
                self.check_learning()?;
            }
            Experiment::Regret | Experiment::AllocationTrace => {
                let stream = self.stream.as_ref().ok_or_else(|| bad("stream", "section is required"))?;
                if stream.steps < 1 {
                    return Err(bad("stream.steps", "must be at least 1"));
                }
                if stream.kind == StreamKind::Game {
                    self.check_learning()?;
                }
                self.allocator_config()?;
            }
        }
        Ok(())
    }

    fn check_learning(&self) -> Result<(), ConfigError> {
        let l = self.learning.as_ref().ok_or_else(|| bad("learning", "section is required"))?;
        l.to_core(self.seed).validate().map_err(|e| bad("learning", e.to_string()))?;
        if l.initial_state > self.market.s_max as usize {
            return Err(bad("learning.initial_state", format!("must not exceed s_max = {}", self.market.s_max)));
        }
        Ok(())
    }

    pub fn specs(&self, behavior: ProspectParams) -> Result<Vec<ProsumerSpec>, ConfigError> {
        let m = &self.market;
        (0..self.n())
            .map(|i| {
                let pmf = discretize_gaussian(m.mu[i], m.sigma2[i], m.support_bound)
                    .map_err(|e| bad("market", format!("prosumer {}: {e}", i + 1)))?;
                let mut spec = ProsumerSpec::threshold(i, m.s_max, m.l_max, m.tau[i], pmf, behavior);
                if let Some(d) = &m.d_max {
                    spec.d_max = d[i];
                }
                spec.satisfaction = match m.satisfaction {
                    SatisfactionConfig::Log1p => Satisfaction::Log1p,
                    SatisfactionConfig::Linear { slope } => Satisfaction::Linear { slope },
                };
                spec.demand_mode = match m.demand_mode {
                    DemandModeConfig::Threshold => DemandMode::Threshold,
                    DemandModeConfig::Free => DemandMode::Free,
                };
                Ok(spec)
            })
            .collect()
    }

    /// The market with every prosumer following `behavior`.
    pub fn market(&self, behavior: ProspectParams) -> Result<Market, ConfigError> {
        let pricing = PricingRule::new(self.market.alpha).map_err(|e| bad("market.alpha", e.to_string()))?;
        Market::new(self.specs(behavior)?, pricing).map_err(|e| bad("market", e.to_string()))
    }

    pub fn allocator_config(&self) -> Result<AllocatorConfig, ConfigError> {
        let a = self.allocator.as_ref().ok_or_else(|| bad("allocator", "section is required"))?;
        let n = self.n();
        let subs = match &a.substations {
            Some(s) => s
                .iter()
                .map(|b| {
                    b.iter()
                        .map(|&j| {
                            if j == 0 || j > n {
                                Err(bad("allocator.substations", format!("prosumer {j} is outside 1..={n}")))
                            } else {
                                Ok(j - 1)
                            }
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => (0..n).map(|i| vec![i]).collect(),
        };
        let mut cfg = AllocatorConfig::new(subs, a.e_max, a.beta, a.gamma, self.market.alpha);
        cfg.initial = a.initial.clone();
        cfg.validate().map_err(|e| bad("allocator", e.to_string()))?;
        if cfg.n_prosumers() != n {
            return Err(bad(
                "allocator.substations",
                format!("substations cover {} prosumers but the market has {n}", cfg.n_prosumers()),
            ));
        }
        Ok(cfg)
    }
}

fn check_scenarios(field: &str, scenarios: &[Scenario]) -> Result<(), ConfigError> {
    if scenarios.is_empty() {
        return Err(bad(field, "at least one scenario is required"));
    }
    for (i, s) in scenarios.iter().enumerate() {
        if s.name.is_empty() || s.name.contains([',', '"', '\n']) {
            return Err(bad(field, format!("scenario {} needs a plain name without commas or quotes", i + 1)));
        }
        if scenarios[..i].iter().any(|o| o.name == s.name) {
            return Err(bad(field, format!("scenario name {:?} is repeated", s.name)));
        }
        s.behavior.params(field)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for e in [
            Experiment::BestResponse,
            Experiment::PayoffVsN,
            Experiment::LearnNe,
            Experiment::Regret,
            Experiment::AllocationTrace,
        ] {
            let cfg = ExperimentConfig::parse(e.preset()).unwrap();
            assert_eq!(cfg.experiment, e);
        }
    }

    #[test]
    fn mismatched_lengths_name_the_field() {
        let text = Experiment::LearnNe.preset().replace("sigma2 = [2.0, 1.0, 1.0]", "sigma2 = [2.0, 1.0]");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.field, "market.sigma2");
        assert!(err.message.contains("expected 3 entries"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{}\nbogus = 1\n", Experiment::LearnNe.preset());
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn type_errors_point_at_the_key() {
        let text = Experiment::LearnNe.preset().replace("alpha = 1.0", "alpha = \"one\"");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert_eq!(err.field, "market.alpha");
    }

    #[test]
    fn scenario_keys_are_checked() {
        let text = Experiment::PayoffVsN.preset().replacen("model = \"eut\"", "model = \"eut\"\nc = 0.5", 1);
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
