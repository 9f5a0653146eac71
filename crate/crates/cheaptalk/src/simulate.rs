//! Runs grid cells on a worker pool and keeps a resumable manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use cheaptalk_core::engine::{ConditionKey, Engine, Mode, Transcript};
use cheaptalk_core::gateway::ChatBackend;
use cheaptalk_core::prompt::TemplateSet;
use cheaptalk_core::topology::gen_graph;
use cheaptalk_core::ENGINE_VERSION;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CellPlan, Grid};
use crate::error::{Error, Result};
use crate::graphfile;
use crate::http::preflight;
use crate::store::{self, StoreHeader, STORE_FORMAT};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub condition: ConditionKey,
    pub master_seed: u64,
    pub n_simulations: u32,
    pub rounds: u32,
    pub completed: u32,
    pub aborted: u32,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub engine_version: String,
    pub grid_seed: u64,
    /// Keyed by condition id.
    pub cells: BTreeMap<String, CellEntry>,
}

impl Manifest {
    pub fn load_or_new(out: &Path, grid_seed: u64) -> Result<Manifest> {
        let path = out.join(MANIFEST_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Runtime(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Ok(Manifest { engine_version: ENGINE_VERSION.to_string(), grid_seed, cells: BTreeMap::new() })
            }
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        let path = out.join(MANIFEST_FILE);
        let tmp = out.join("manifest.json.partial");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(path, e))
    }

    /// True when `cell` finished earlier with the same seeds and size and its
    /// file is still there.
    pub fn is_done(&self, out: &Path, cell: &CellPlan) -> bool {
        let c = &cell.config;
        self.cells.get(&c.condition.id()).is_some_and(|e| {
            e.condition == c.condition
                && e.master_seed == c.master_seed
                && e.n_simulations == c.n_simulations
                && e.rounds == c.rounds
                && out.join(&e.file).is_file()
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub ran: usize,
    pub skipped: usize,
    pub simulations: usize,
    pub aborted: usize,
}

/// Zero workers means one per available core.
pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Runtime(format!("worker pool: {e}")))
}

/// Runs every simulation of one cell, in parallel, in index order.
pub fn run_cell(
    cell: &CellPlan,
    templates: &TemplateSet,
    backend: &dyn ChatBackend,
    pool: &rayon::ThreadPool,
) -> Result<Vec<Transcript>> {
    let engine = Engine::new(templates, backend);
    let cfg = &cell.config;
    let runtime = |e: cheaptalk_core::engine::EngineError| Error::Usage(format!("{}: {e}", cell.origin));
    pool.install(|| {
        (0..cfg.n_simulations)
            .into_par_iter()
            .map(|i| {
                if cfg.condition.mode == Mode::Dyadic {
                    let pair = [cell.policies[0].clone(), cell.policies[1].clone()];
                    engine.run_dyadic_simulation(cfg, &pair, i)
                } else {
                    engine.run_generated_network_simulation(cfg, &cell.policies, i)
                }
                .map_err(runtime)
            })
            .collect()
    })
}

pub fn header_for(cell: &CellPlan) -> StoreHeader {
    let cfg = &cell.config;
    let network = cfg.condition.mode != Mode::Dyadic;
    StoreHeader {
        format: STORE_FORMAT.to_string(),
        condition: cfg.condition.clone(),
        condition_id: cfg.condition.id(),
        engine_version: ENGINE_VERSION.to_string(),
        master_seed: cfg.master_seed,
        rounds: cfg.rounds,
        n_simulations: cfg.n_simulations,
        simulation_seeds: (0..cfg.n_simulations).map(|i| cfg.simulation_seed(i)).collect(),
        graph_seeds: if network { (0..cfg.n_simulations).map(|i| cfg.graph_seed(i)).collect() } else { Vec::new() },
        policies: cell.policies.iter().map(|p| p.label().to_string()).collect(),
    }
}

fn write_graphs(dir: &Path, cell: &CellPlan) -> Result<()> {
    let cfg = &cell.config;
    let Some(spec) = cfg.network_spec() else { return Ok(()) };
    for i in 0..cfg.n_simulations {
        let seed = cfg.graph_seed(i);
        let g = gen_graph(&spec, seed).map_err(|e| Error::Runtime(e.to_string()))?;
        graphfile::write(&dir.join("graphs").join(format!("graph-{i:03}.edges")), &spec, seed, &g)?;
    }
    Ok(())
}

/// Fails fast when model-backed cells cannot reach their server.
pub fn preflight_grid(grid: &Grid) -> Result<()> {
    if grid.cells.iter().any(CellPlan::needs_model) {
        let gw = &grid.file.gateway;
        preflight(&gw.base_url, Duration::from_millis(gw.timeout_ms.min(10_000)))
            .map_err(|e| Error::Runtime(format!("model server at {} is not usable: {e}", gw.base_url)))?;
    }
    Ok(())
}

/// Runs all cells not already complete in `out`'s manifest.
pub fn run_grid(grid: &Grid, out: &Path, backend: &dyn ChatBackend, workers: usize) -> Result<RunSummary> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let pool = thread_pool(workers)?;
    let mut manifest = Manifest::load_or_new(out, grid.file.seed)?;
    let mut summary = RunSummary::default();
    let total = grid.cells.len();
    for (n, cell) in grid.cells.iter().enumerate() {
        let key = cell.key();
        if manifest.is_done(out, cell) {
            summary.skipped += 1;
            eprintln!("[{}/{total}] {} skipped (complete)", n + 1, key.canonical());
            continue;
        }
        let transcripts = run_cell(cell, &grid.templates, backend, &pool)?;
        let aborted = transcripts.iter().filter(|t| !t.is_complete()).count();
        for t in transcripts.iter().filter(|t| !t.is_complete()) {
            log::warn!("{} simulation {} aborted: {}", key.id(), t.simulation, t.aborted.as_deref().unwrap_or(""));
        }
        let path = store::transcripts_path(out, key);
        store::persist(&path, &header_for(cell), &transcripts).map_err(|e| Error::io(&path, e))?;
        write_graphs(&store::cell_dir(out, key), cell)?;
        let rel: PathBuf = path.strip_prefix(out).unwrap_or(&path).to_path_buf();
        manifest.cells.insert(
            key.id(),
            CellEntry {
                condition: key.clone(),
                master_seed: cell.config.master_seed,
                n_simulations: cell.config.n_simulations,
                rounds: cell.config.rounds,
                completed: (transcripts.len() - aborted) as u32,
                aborted: aborted as u32,
                file: rel.to_string_lossy().into_owned(),
            },
        );
        manifest.save(out)?;
        summary.ran += 1;
        summary.simulations += transcripts.len();
        summary.aborted += aborted;
        eprintln!("[{}/{total}] {} -> {} simulations, {aborted} aborted", n + 1, key.canonical(), transcripts.len());
    }
    Ok(summary)
}
