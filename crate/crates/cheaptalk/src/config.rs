//! TOML experiment grids.
//!
//! ```toml
//! seed = 20240611
//! out = "results"
//!
//! [[grid]]
//! models = ["scripted"]
//! treatments = ["no_messaging", "full_message"]
//! policies = [{ kind = "tit-for-tat" }]
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cheaptalk_core::agent::Policy;
use cheaptalk_core::engine::{assign_cyclic, ConditionKey, Mode, SimulationConfig};
use cheaptalk_core::game::PayoffMatrix;
use cheaptalk_core::gateway::ModelConfig;
use cheaptalk_core::prompt::{ContextFrame, PromptRegime, TemplateSet, Treatment};
use cheaptalk_core::seed::{derive_seed, domain};
use cheaptalk_core::stats::{LowessParams, DEFAULT_ITERATIONS_DYADIC, DEFAULT_ITERATIONS_NETWORK};
use cheaptalk_core::topology::{NetworkModel, NetworkSpec};
use serde::{Deserialize, Serialize};

/// A config problem located by its field path, e.g. `grid[0].policies[1].p_coop`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> ConfigError {
        ConfigError { path: path.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub rounds: u32,
    pub dyadic_simulations: u32,
    pub network_simulations: u32,
    pub agents: u32,
    pub record_prompts: bool,
    pub matrix: PayoffMatrix,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults {
            rounds: 10,
            dyadic_simulations: 100,
            network_simulations: 10,
            agents: 50,
            record_prompts: true,
            matrix: PayoffMatrix::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    pub base_url: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    pub sampler_seed: Option<u64>,
}

impl Default for GatewaySection {
    fn default() -> Self {
        let m = ModelConfig::default();
        GatewaySection {
            base_url: m.base_url,
            timeout_ms: m.timeout_ms,
            retries: m.retries,
            max_in_flight: 4,
            sampler_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub seed: u64,
    pub iterations_dyadic: u32,
    pub iterations_network: u32,
    pub lowess_frac: f64,
    pub lowess_iterations: u32,
    pub level: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let l = LowessParams::default();
        AnalysisSection {
            seed: 0,
            iterations_dyadic: DEFAULT_ITERATIONS_DYADIC,
            iterations_network: DEFAULT_ITERATIONS_NETWORK,
            lowess_frac: l.frac,
            lowess_iterations: l.iterations,
            level: 0.95,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentPolicies {
    pub no_messaging: Option<Vec<Policy>>,
    pub full_message: Option<Vec<Policy>>,
    pub one_word: Option<Vec<Policy>>,
}

impl TreatmentPolicies {
    fn get(&self, t: Treatment) -> Option<&Vec<Policy>> {
        match t {
            Treatment::NoMessaging => self.no_messaging.as_ref(),
            Treatment::FullMessage => self.full_message.as_ref(),
            Treatment::OneWord => self.one_word.as_ref(),
        }
    }
}

fn default_regimes() -> Vec<PromptRegime> {
    vec![PromptRegime::Standard]
}

fn default_treatments() -> Vec<Treatment> {
    vec![Treatment::NoMessaging, Treatment::FullMessage]
}

fn default_temperatures() -> Vec<f64> {
    vec![0.8]
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Dyadic]
}

/// One block of the grid; it expands to the cross product of its lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub models: Vec<String>,
    /// All six frames when omitted.
    #[serde(default)]
    pub frames: Option<Vec<ContextFrame>>,
    #[serde(default = "default_regimes")]
    pub regimes: Vec<PromptRegime>,
    #[serde(default = "default_treatments")]
    pub treatments: Vec<Treatment>,
    #[serde(default = "default_temperatures")]
    pub temperatures: Vec<f64>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    /// Agent policies, cycled over the agents (a single entry is used by all).
    pub policies: Vec<Policy>,
    #[serde(default)]
    pub treatment_policies: TreatmentPolicies,
    pub simulations: Option<u32>,
    pub rounds: Option<u32>,
    pub agents: Option<u32>,
    pub network: Option<NetworkModel>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Directory with `<regime>/<frame>.txt` files replacing the built-in templates.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub gateway: GatewaySection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub grid: Vec<GridEntry>,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

/// One runnable cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPlan {
    pub config: SimulationConfig,
    /// One policy per agent.
    pub policies: Vec<Policy>,
    /// Where the cell was declared, for messages.
    pub origin: String,
}

impl CellPlan {
    pub fn key(&self) -> &ConditionKey {
        &self.config.condition
    }

    pub fn needs_model(&self) -> bool {
        self.policies.iter().any(Policy::is_model_backed)
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub file: GridFile,
    pub templates: TemplateSet,
    pub cells: Vec<CellPlan>,
}

pub fn parse(text: &str) -> Result<GridFile, ConfigError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::at(path, inner.message().trim())
    })
}

/// Command-line values that replace what the file says.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub base_url: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Reads, validates and expands a grid file. Relative paths in the file are
/// resolved against its directory.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Grid, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::at("", format!("{}: {e}", path.display())))?;
    let mut file = parse(&text)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    if file.out.is_relative() {
        file.out = dir.join(&file.out);
    }
    if let Some(t) = file.templates.as_mut().filter(|t| t.is_relative()) {
        *t = dir.join(&*t);
    }
    if let Some(url) = &overrides.base_url {
        file.gateway.base_url = url.clone();
    }
    if let Some(seed) = overrides.seed {
        file.seed = seed;
    }
    if let Some(out) = &overrides.out {
        file.out = out.clone();
    }
    build(file)
}

fn load_templates(dir: &Path) -> Result<TemplateSet, ConfigError> {
    let mut set = TemplateSet::builtin();
    for &regime in PromptRegime::ALL {
        for &frame in ContextFrame::ALL {
            let rel = format!("{regime}/{frame}.txt");
            let p = dir.join(&rel);
            let text = std::fs::read_to_string(&p)
                .map_err(|e| ConfigError::at("templates", format!("{}: {e}", p.display())))?;
            set.set(regime, frame, text).map_err(|e| ConfigError::at("templates", format!("{rel}: {e}")))?;
        }
    }
    Ok(set)
}

fn check_policies(path: &str, policies: &[Policy]) -> Result<(), ConfigError> {
    if policies.is_empty() {
        return Err(ConfigError::at(path, "at least one policy is required"));
    }
    for (i, p) in policies.iter().enumerate() {
        p.validate().map_err(|e| ConfigError::at(format!("{path}[{i}]"), e))?;
    }
    Ok(())
}

fn bind_model(policy: &Policy, model: &str, temperature: f64, gw: &GatewaySection) -> Policy {
    match policy {
        Policy::ModelBacked(_) => Policy::ModelBacked(ModelConfig {
            model: model.to_string(),
            base_url: gw.base_url.clone(),
            temperature,
            sampler_seed: gw.sampler_seed,
            timeout_ms: gw.timeout_ms,
            retries: gw.retries,
        }),
        other => other.clone(),
    }
}

/// Validates a parsed grid and expands it into cells.
pub fn build(file: GridFile) -> Result<Grid, ConfigError> {
    let d = &file.defaults;
    if d.rounds == 0 {
        return Err(ConfigError::at("defaults.rounds", "must be at least 1"));
    }
    if let Err(v) = d.matrix.validate() {
        let list: Vec<String> = v.iter().map(ToString::to_string).collect();
        return Err(ConfigError::at("defaults.matrix", list.join(", ")));
    }
    if file.workers == Some(0) {
        return Err(ConfigError::at("workers", "must be at least 1"));
    }
    if file.gateway.max_in_flight == 0 {
        return Err(ConfigError::at("gateway.max_in_flight", "must be at least 1"));
    }
    let a = &file.analysis;
    if !(a.lowess_frac > 0.0 && a.lowess_frac <= 1.0) {
        return Err(ConfigError::at("analysis.lowess_frac", "must lie in (0, 1]"));
    }
    if a.iterations_dyadic == 0 || a.iterations_network == 0 {
        return Err(ConfigError::at("analysis", "bootstrap iterations must be at least 1"));
    }
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(ConfigError::at("analysis.level", "must lie in (0, 1)"));
    }
    if file.grid.is_empty() {
        return Err(ConfigError::at("grid", "no cells declared"));
    }
    let templates = match &file.templates {
        Some(dir) => load_templates(dir)?,
        None => TemplateSet::builtin(),
    };

    let mut cells = Vec::new();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    for (gi, e) in file.grid.iter().enumerate() {
        let here = format!("grid[{gi}]");
        for (name, empty) in [
            ("models", e.models.is_empty()),
            ("regimes", e.regimes.is_empty()),
            ("treatments", e.treatments.is_empty()),
            ("temperatures", e.temperatures.is_empty()),
            ("modes", e.modes.is_empty()),
            ("frames", e.frames.as_ref().is_some_and(Vec::is_empty)),
        ] {
            if empty {
                return Err(ConfigError::at(format!("{here}.{name}"), "must not be empty"));
            }
        }
        for (i, m) in e.models.iter().enumerate() {
            if m.trim().is_empty() {
                return Err(ConfigError::at(format!("{here}.models[{i}]"), "model name is empty"));
            }
        }
        for (i, t) in e.temperatures.iter().enumerate() {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(ConfigError::at(format!("{here}.temperatures[{i}]"), "must be a non-negative number"));
            }
            let probe = ModelConfig { temperature: *t, ..ModelConfig::default() };
            if let Some(w) = probe.temperature_warning() {
                log::warn!("{here}.temperatures[{i}]: {w}");
            }
        }
        check_policies(&format!("{here}.policies"), &e.policies)?;
        for &t in Treatment::ALL {
            if let Some(p) = e.treatment_policies.get(t) {
                check_policies(&format!("{here}.treatment_policies.{t}"), p)?;
            }
        }
        if e.simulations == Some(0) {
            return Err(ConfigError::at(format!("{here}.simulations"), "must be at least 1"));
        }
        if e.rounds == Some(0) {
            return Err(ConfigError::at(format!("{here}.rounds"), "must be at least 1"));
        }
        if let Some(net) = &e.network {
            if let Some(m) = e.modes.iter().find(|m| m.topology() != Some(net.kind())) {
                return Err(ConfigError::at(
                    format!("{here}.network"),
                    format!("kind {} does not match mode {m}", net.kind().as_str()),
                ));
            }
        }
        let frames = e.frames.clone().unwrap_or_else(|| ContextFrame::ALL.to_vec());
        for model in &e.models {
            for &frame in &frames {
                for &regime in &e.regimes {
                    for &treatment in &e.treatments {
                        for &temperature in &e.temperatures {
                            for &mode in &e.modes {
                                let key =
                                    ConditionKey { model: model.clone(), frame, regime, treatment, temperature, mode };
                                let canonical = key.canonical();
                                if let Some(prev) = seen.insert(canonical.clone(), here.clone()) {
                                    return Err(ConfigError::at(
                                        here,
                                        format!("condition {canonical} is already declared by {prev}"),
                                    ));
                                }
                                let pattern = e.treatment_policies.get(treatment).unwrap_or(&e.policies);
                                let pattern: Vec<Policy> =
                                    pattern.iter().map(|p| bind_model(p, model, temperature, &file.gateway)).collect();
                                let dyadic = mode == Mode::Dyadic;
                                let agents = if dyadic { 2 } else { e.agents.unwrap_or(d.agents) };
                                if agents == 0 {
                                    return Err(ConfigError::at(format!("{here}.agents"), "must be at least 1"));
                                }
                                let master_seed =
                                    derive_seed(e.seed.unwrap_or(file.seed), domain::CELL, key.fingerprint());
                                let mut config = SimulationConfig::new(key, master_seed);
                                config.rounds = e.rounds.unwrap_or(d.rounds);
                                config.n_simulations = e.simulations.unwrap_or(if dyadic {
                                    d.dyadic_simulations
                                } else {
                                    d.network_simulations
                                });
                                config.agents = agents;
                                config.matrix = d.matrix;
                                config.record_prompts = d.record_prompts;
                                config.network = e.network.clone().map(|m| NetworkSpec::new(agents, m));
                                config.validate().map_err(|err| ConfigError::at(here.clone(), err))?;
                                cells.push(CellPlan {
                                    policies: assign_cyclic(&pattern, agents),
                                    config,
                                    origin: here.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Grid { file, templates, cells })
}
