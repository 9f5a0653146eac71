//! Pairs no-messaging and messaging conditions and bootstraps their RMSE
//! difference.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cheaptalk_core::engine::{completed_tallies, ConditionKey, Mode};
use cheaptalk_core::prompt::{PromptRegime, Treatment};
use cheaptalk_core::seed::{derive_seed, domain, fnv1a64};
use cheaptalk_core::stats::{
    cooperation_trajectory, omnibus, BootstrapConfig, BootstrapOutcome, BootstrapPlan, BootstrapSeeds, LowessParams,
    OmnibusResult, ResampleUnit, RoundTally, TrajectorySeries,
};
use cheaptalk_core::ENGINE_VERSION;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisSection;
use crate::error::{Error, Result};
use crate::store::{self, TRANSCRIPTS_FILE};

pub const ANALYSIS_FILE: &str = "analysis.json";
pub const ANALYSIS_FORMAT: &str = "cheaptalk-analysis/1";

/// Completed simulations of one condition, reduced to per-round counts.
#[derive(Clone, Debug)]
pub struct LoadedCondition {
    pub key: ConditionKey,
    pub id: String,
    pub tallies: Vec<RoundTally>,
    pub aborted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub id: String,
    pub condition: ConditionKey,
    pub completed: usize,
    pub aborted: usize,
    pub trajectory: TrajectorySeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub no_messaging: String,
    pub messaging: String,
    pub model: String,
    pub frame: String,
    pub seeds: BootstrapSeeds,
    pub outcome: BootstrapOutcome,
}

/// One report table: rows sharing treatment, regime, temperature and mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableGroup {
    pub treatment: Treatment,
    pub regime: PromptRegime,
    pub temperature: f64,
    pub mode: Mode,
    pub rows: Vec<PairRecord>,
    /// Absent for a single row, where the binomial tests say nothing.
    pub omnibus: Option<OmnibusResult>,
}

impl TableGroup {
    pub fn title(&self) -> String {
        format!(
            "{} vs no_messaging | {} | temperature {} | {}",
            self.treatment, self.regime, self.temperature, self.mode
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFile {
    pub format: String,
    pub engine_version: String,
    pub seed: u64,
    pub lowess: LowessParams,
    pub level: f64,
    pub conditions: Vec<ConditionSummary>,
    pub groups: Vec<TableGroup>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub iterations_dyadic: u32,
    pub iterations_network: u32,
    pub lowess: LowessParams,
    pub level: f64,
}

impl From<&AnalysisSection> for Settings {
    fn from(a: &AnalysisSection) -> Settings {
        Settings {
            seed: a.seed,
            iterations_dyadic: a.iterations_dyadic,
            iterations_network: a.iterations_network,
            lowess: LowessParams::new(a.lowess_frac, a.lowess_iterations),
            level: a.level,
        }
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings::from(&AnalysisSection::default())
    }
}

/// Loads every `<dir>/<id>/transcripts.jsonl`, sorted by condition.
pub fn load_results(dir: &Path) -> Result<Vec<LoadedCondition>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path().join(TRANSCRIPTS_FILE);
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    let mut out = Vec::new();
    for path in files {
        let (header, transcripts) = store::load(&path)?;
        let (tallies, aborted) = completed_tallies(&transcripts);
        if aborted > 0 {
            log::warn!("{}: {aborted} aborted simulations excluded", header.condition_id);
        }
        out.push(LoadedCondition { id: header.condition.id(), key: header.condition, tallies, aborted });
    }
    out.sort_by(|a, b| order(&a.key, &b.key));
    Ok(out)
}

fn order(a: &ConditionKey, b: &ConditionKey) -> std::cmp::Ordering {
    (a.treatment, a.regime, a.mode)
        .cmp(&(b.treatment, b.regime, b.mode))
        .then(a.temperature.total_cmp(&b.temperature))
        .then_with(|| (&a.model, a.frame).cmp(&(&b.model, b.frame)))
}

/// A pairing must compare a control with a messaging condition of the same
/// model, frame, regime, temperature and mode.
pub fn check_pair(no_msg: &ConditionKey, msg: &ConditionKey) -> std::result::Result<(), String> {
    if no_msg.treatment != Treatment::NoMessaging {
        return Err(format!("{} is not a no_messaging condition", no_msg.canonical()));
    }
    if !msg.treatment.is_messaging() {
        return Err(format!("{} is not a messaging condition", msg.canonical()));
    }
    let mut diffs = Vec::new();
    if no_msg.model != msg.model {
        diffs.push("model");
    }
    if no_msg.frame != msg.frame {
        diffs.push("context");
    }
    if no_msg.regime != msg.regime {
        diffs.push("regime");
    }
    if no_msg.temperature != msg.temperature {
        diffs.push("temperature");
    }
    if no_msg.mode != msg.mode {
        diffs.push("mode");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(format!("{} and {} differ in {}", no_msg.id(), msg.id(), diffs.join(", ")))
    }
}

/// Pairs each messaging condition with its control. Conditions left without
/// a partner are reported together.
pub fn auto_pairs(conds: &[LoadedCondition]) -> Result<Vec<(usize, usize)>> {
    let mut controls: BTreeMap<String, usize> = BTreeMap::new();
    for (i, c) in conds.iter().enumerate() {
        if c.key.treatment == Treatment::NoMessaging {
            controls.insert(c.key.pairing_key(), i);
        }
    }
    let mut pairs = Vec::new();
    let mut used = vec![false; conds.len()];
    let mut orphans = Vec::new();
    for (i, c) in conds.iter().enumerate() {
        if !c.key.treatment.is_messaging() {
            continue;
        }
        match controls.get(&c.key.pairing_key()) {
            Some(&j) => {
                used[j] = true;
                pairs.push((j, i));
            }
            None => orphans.push(format!("{} ({})", c.id, c.key.canonical())),
        }
    }
    for &j in controls.values() {
        if !used[j] {
            orphans.push(format!("{} ({})", conds[j].id, conds[j].key.canonical()));
        }
    }
    if !orphans.is_empty() {
        return Err(Error::Usage(format!("unpaired conditions:\n  {}", orphans.join("\n  "))));
    }
    Ok(pairs)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairingFile {
    pair: Vec<PairSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairSpec {
    no_messaging: String,
    messaging: String,
}

/// Reads explicit `[[pair]]` entries (condition ids) and validates them.
pub fn pairs_from_file(path: &Path, conds: &[LoadedCondition]) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PairingFile = serde_path_to_error::deserialize(toml::Deserializer::new(&text))
        .map_err(|e| Error::Usage(format!("{}: {}: {}", path.display(), e.path(), e.inner().message().trim())))?;
    let find = |id: &str, at: String| {
        conds
            .iter()
            .position(|c| c.id == id)
            .ok_or_else(|| Error::Usage(format!("{at}: no results for condition {id}")))
    };
    let mut out = Vec::new();
    for (i, p) in file.pair.iter().enumerate() {
        let a = find(&p.no_messaging, format!("pair[{i}].no_messaging"))?;
        let b = find(&p.messaging, format!("pair[{i}].messaging"))?;
        check_pair(&conds[a].key, &conds[b].key).map_err(|m| Error::Usage(format!("pair[{i}]: {m}")))?;
        out.push((a, b));
    }
    Ok(out)
}

fn unit_for(mode: Mode) -> ResampleUnit {
    if mode == Mode::Dyadic {
        ResampleUnit::Simulation
    } else {
        ResampleUnit::Network
    }
}

/// Seeds for one pairing, derived from the analysis seed and both ids.
pub fn pair_seeds(seed: u64, no_msg: &ConditionKey, msg: &ConditionKey) -> BootstrapSeeds {
    let tag = format!("{}|{}", no_msg.canonical(), msg.canonical());
    BootstrapSeeds::from_master(derive_seed(seed, domain::BOOTSTRAP, fnv1a64(tag.as_bytes())))
}

/// Bootstraps one pairing with replicates spread over the current rayon pool.
pub fn bootstrap_pair(
    a: &LoadedCondition,
    b: &LoadedCondition,
    settings: &Settings,
) -> Result<(BootstrapSeeds, BootstrapOutcome)> {
    let unit = unit_for(a.key.mode);
    let config = BootstrapConfig {
        iterations: match unit {
            ResampleUnit::Simulation => settings.iterations_dyadic,
            ResampleUnit::Network => settings.iterations_network,
        },
        lowess: settings.lowess,
        level: settings.level,
        unit,
    };
    let seeds = pair_seeds(settings.seed, &a.key, &b.key);
    let fail = |e| Error::Runtime(format!("{} vs {}: {e}", a.id, b.id));
    let plan = BootstrapPlan::new(&a.tallies, &b.tallies, config, seeds).map_err(fail)?;
    let diffs: Vec<f64> =
        (0..plan.iterations()).into_par_iter().map(|i| plan.replicate(i)).collect::<Result<_, _>>().map_err(fail)?;
    Ok((seeds, plan.finish(&diffs).map_err(fail)?))
}

pub fn analyze(conds: &[LoadedCondition], pairs: &[(usize, usize)], settings: &Settings) -> Result<AnalysisFile> {
    if pairs.is_empty() {
        return Err(Error::Usage("nothing to analyze: no condition pairs".into()));
    }
    let mut summaries = Vec::new();
    for c in conds {
        let trajectory = cooperation_trajectory(&c.tallies).map_err(|e| Error::Runtime(format!("{}: {e}", c.id)))?;
        summaries.push(ConditionSummary {
            id: c.id.clone(),
            condition: c.key.clone(),
            completed: c.tallies.len(),
            aborted: c.aborted,
            trajectory,
        });
    }
    let mut groups: Vec<TableGroup> = Vec::new();
    for &(i, j) in pairs {
        let (a, b) = (&conds[i], &conds[j]);
        check_pair(&a.key, &b.key).map_err(Error::Usage)?;
        let (seeds, outcome) = bootstrap_pair(a, b, settings)?;
        let row = PairRecord {
            no_messaging: a.id.clone(),
            messaging: b.id.clone(),
            model: b.key.model.clone(),
            frame: b.key.frame.to_string(),
            seeds,
            outcome,
        };
        let k = &b.key;
        match groups.iter_mut().find(|g| {
            g.treatment == k.treatment && g.regime == k.regime && g.temperature == k.temperature && g.mode == k.mode
        }) {
            Some(g) => g.rows.push(row),
            None => groups.push(TableGroup {
                treatment: k.treatment,
                regime: k.regime,
                temperature: k.temperature,
                mode: k.mode,
                rows: vec![row],
                omnibus: None,
            }),
        }
    }
    for g in &mut groups {
        if g.rows.len() > 1 {
            let outcomes: Vec<BootstrapOutcome> = g.rows.iter().map(|r| r.outcome.clone()).collect();
            g.omnibus = Some(omnibus(&outcomes));
        }
    }
    Ok(AnalysisFile {
        format: ANALYSIS_FORMAT.to_string(),
        engine_version: ENGINE_VERSION.to_string(),
        seed: settings.seed,
        lowess: settings.lowess,
        level: settings.level,
        conditions: summaries,
        groups,
    })
}

pub fn trajectory_csv(s: &ConditionSummary) -> String {
    let mut out = String::from("round,rate,n\n");
    for (r, (rate, n)) in s.trajectory.rates.iter().zip(&s.trajectory.decisions).enumerate() {
        let _ = writeln!(out, "{},{rate},{n}", r + 1);
    }
    out
}

/// Writes `analysis.json` plus one `trajectory.csv` per condition under `out`.
pub fn write(out: &Path, analysis: &AnalysisFile) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for s in &analysis.conditions {
        let dir = out.join(&s.id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let p = dir.join("trajectory.csv");
        fs::write(&p, trajectory_csv(s)).map_err(|e| Error::io(&p, e))?;
    }
    let path = out.join(ANALYSIS_FILE);
    let text = serde_json::to_string_pretty(analysis).expect("analysis serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read(path: &Path) -> Result<AnalysisFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let a: AnalysisFile =
        serde_json::from_str(&text).map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))?;
    if a.format != ANALYSIS_FORMAT {
        return Err(Error::Runtime(format!("{}: unsupported format {:?}", path.display(), a.format)));
    }
    Ok(a)
}
