use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cheaptalk::analysis::{self, Settings};
use cheaptalk::config::{self, Overrides};
use cheaptalk::graphfile;
use cheaptalk::http::HttpBackend;
use cheaptalk::mock::{MockConfig, MockServer};
use cheaptalk::report;
use cheaptalk::simulate;
use cheaptalk::{Error, Result};
use cheaptalk_core::topology::{gen_graph, graph_stats, NetworkModel, NetworkSpec, TopologyKind};

#[derive(Parser)]
#[command(name = "cheaptalk", version, about = "Cheap-talk stability experiments on the repeated prisoner's dilemma")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a grid file and store transcripts.
    Simulate(SimulateArgs),
    /// Pair conditions and bootstrap their RMSE differences.
    Analyze(AnalyzeArgs),
    /// Render an analysis file as tables and CSV.
    Report(ReportArgs),
    /// Generate one graph and write it as an edge list.
    GraphGen(GraphArgs),
    /// Serve a local stand-in for the chat endpoint.
    ServeMock(MockArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Results directory (default: the file's `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Replaces the grid seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "CHEAPTALK_BASE_URL")]
    base_url: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    results: PathBuf,
    /// TOML file of `[[pair]]` entries; conditions are paired automatically otherwise.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Output directory (default: the results directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bootstrap iterations for every pairing.
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Grid file whose `[analysis]` section supplies the settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    analysis: PathBuf,
    /// Also write report.txt and report.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ErdosRenyi,
    PowerLaw,
    CorePeriphery,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 50)]
    n: u32,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    p_triangle: Option<f64>,
    #[arg(long)]
    core_fraction: Option<f64>,
    #[arg(long)]
    p_cc: Option<f64>,
    #[arg(long)]
    p_cp: Option<f64>,
    #[arg(long)]
    p_pp: Option<f64>,
    #[arg(long)]
    allow_disconnected: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MockArgs {
    #[arg(long, default_value = "127.0.0.1:11434")]
    addr: String,
    /// JSON file with `fixtures` and `fallback`.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let overrides = Overrides { base_url: a.base_url, seed: a.seed, out: a.out };
    let grid = config::load(&a.config, &overrides).map_err(|e| Error::Usage(e.to_string()))?;
    simulate::preflight_grid(&grid)?;
    let workers = a.workers.or(grid.file.workers).unwrap_or(0);
    let backend = HttpBackend::new(grid.file.gateway.max_in_flight);
    let out = grid.file.out.clone();
    let s = simulate::run_grid(&grid, &out, &backend, workers)?;
    println!(
        "{} cells run, {} skipped, {} simulations, {} aborted -> {}",
        s.ran,
        s.skipped,
        s.simulations,
        s.aborted,
        out.display()
    );
    Ok(())
}

fn analyze_cmd(a: AnalyzeArgs) -> Result<()> {
    let mut settings = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let file = config::parse(&text).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?;
            Settings::from(&file.analysis)
        }
        None => Settings::default(),
    };
    if let Some(b) = a.iterations {
        if b == 0 {
            return Err(Error::Usage("--iterations must be at least 1".into()));
        }
        settings.iterations_dyadic = b;
        settings.iterations_network = b;
    }
    if let Some(s) = a.seed {
        settings.seed = s;
    }
    let conds = analysis::load_results(&a.results)?;
    if conds.is_empty() {
        return Err(Error::Usage(format!("{}: no transcripts found", a.results.display())));
    }
    let pairs = match &a.pairs {
        Some(p) => analysis::pairs_from_file(p, &conds)?,
        None => analysis::auto_pairs(&conds)?,
    };
    let pool = simulate::thread_pool(a.workers.unwrap_or(0))?;
    let result = pool.install(|| analysis::analyze(&conds, &pairs, &settings))?;
    let out = a.out.unwrap_or(a.results);
    let path = analysis::write(&out, &result)?;
    let rows: usize = result.groups.iter().map(|g| g.rows.len()).sum();
    println!("{rows} pairings in {} tables -> {}", result.groups.len(), path.display());
    Ok(())
}

fn report_cmd(a: ReportArgs) -> Result<()> {
    let file = analysis::read(&a.analysis)?;
    let text = report::render_text(&file);
    print!("{text}");
    if let Some(out) = &a.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        write_file(&out.join("report.txt"), &text)?;
        write_file(&out.join("report.csv"), &report::render_csv(&file))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn graph_cmd(a: GraphArgs) -> Result<()> {
    let kind = match a.kind {
        Kind::ErdosRenyi => TopologyKind::ErdosRenyi,
        Kind::PowerLaw => TopologyKind::PowerLaw,
        Kind::CorePeriphery => TopologyKind::CorePeriphery,
    };
    let mut model = NetworkModel::default_for(kind);
    match &mut model {
        NetworkModel::ErdosRenyi { p } => set(p, a.p),
        NetworkModel::PowerLaw { m, p_triangle } => {
            set(m, a.m);
            set(p_triangle, a.p_triangle);
        }
        NetworkModel::CorePeriphery { core_fraction, p_core_core, p_core_periphery, p_periphery_periphery } => {
            set(core_fraction, a.core_fraction);
            set(p_core_core, a.p_cc);
            set(p_core_periphery, a.p_cp);
            set(p_periphery_periphery, a.p_pp);
        }
    }
    let mut spec = NetworkSpec::new(a.n, model);
    spec.require_connected = !a.allow_disconnected;
    spec.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let g = gen_graph(&spec, a.seed).map_err(|e| Error::Runtime(e.to_string()))?;
    graphfile::write(&a.out, &spec, a.seed, &g)?;
    let stats = graph_stats(&g, &spec);
    println!(
        "{} nodes, {} edges, density {:.4}, connected {} -> {}",
        g.node_count(),
        g.edge_count(),
        stats.density,
        stats.connected,
        a.out.display()
    );
    Ok(())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn mock_cmd(a: MockArgs) -> Result<()> {
    let cfg = match &a.fixtures {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<MockConfig>(&text).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?
        }
        None => MockConfig::default(),
    };
    let server = MockServer::bind(&a.addr, cfg).map_err(|e| Error::Runtime(format!("{}: {e}", a.addr)))?;
    println!("serving {}", server.base_url());
    server.wait();
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Analyze(a) => analyze_cmd(a),
        Command::Report(a) => report_cmd(a),
        Command::GraphGen(a) => graph_cmd(a),
        Command::ServeMock(a) => mock_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
